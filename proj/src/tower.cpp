#include <rankone/tower.hpp>

#include <random>

namespace rankone {

Column build_column(const RankOneSpec& spec, int n) {
    if (n < 0 || n > spec.stage_count())
        throw ValidationError("build_column: stage out of range");
    Column c;
    c.stage = 0;
    c.height = 1;
    c.descendant_heights = {Int(0)};
    for (int k = 0; k < n; ++k) {
        const HeightSet& h = spec.height_sets[static_cast<size_t>(k)];
        std::vector<Int> next;
        next.reserve(c.descendant_heights.size() * static_cast<size_t>(h.size()));
        for (const Int& e : h.elements)
            for (const Int& t : c.descendant_heights) next.push_back(e + t);
        c.descendant_heights = std::move(next);
        Int hnext = c.height * h.size();
        for (const Int& s : spec.spacer_counts[static_cast<size_t>(k)]) hnext += s;
        c.height = hnext;
        c.width /= h.size();
        c.width.canonicalize();
        c.stage = k + 1;
    }
    return c;
}

SymbolicPoint make_point(const RankOneSpec& spec, int stage, Int level, uint64_t seed) {
    if (stage < 0 || stage > spec.stage_count())
        throw ValidationError("make_point: stage out of range");
    if (level < 0 || level >= spec.column_height(stage))
        throw ValidationError("make_point: level outside the column");
    SymbolicPoint p;
    p.created_stage = stage;
    p.stage = stage;
    p.level = std::move(level);
    p.seed = seed;
    std::mt19937_64 rng(seed);
    for (int k = stage; k < spec.stage_count(); ++k)
        p.choices.push_back(static_cast<int>(
            bounded_u64(rng, static_cast<uint64_t>(spec.cut_counts[static_cast<size_t>(k)]))));
    return p;
}

namespace {

void refine_once(const RankOneSpec& spec, SymbolicPoint& p) {
    if (p.stage >= spec.stage_count())
        throw StagesExhausted("orbit needs a refinement past stage " + std::to_string(p.stage));
    const int idx = p.next_choice_index();
    const int m = p.choices[static_cast<size_t>(idx)];
    p.level += spec.height_sets[static_cast<size_t>(p.stage)].elements[static_cast<size_t>(m)];
    p.stage += 1;
}

}  // namespace

SymbolicPoint apply_T(const RankOneSpec& spec, SymbolicPoint p, const Int& power) {
    if (power == 0) return p;
    for (;;) {
        const Int target = p.level + power;
        if (target >= 0 && target < spec.column_height(p.stage)) {
            p.level = target;
            return p;
        }
        refine_once(spec, p);
    }
}

SymbolicPoint lift_to(const RankOneSpec& spec, SymbolicPoint p, int stage) {
    if (stage < p.stage) throw ValidationError("lift_to: cannot lower a point's stage");
    while (p.stage < stage) refine_once(spec, p);
    return p;
}

bool same_point(const RankOneSpec& spec, const SymbolicPoint& a, const SymbolicPoint& b) {
    const int stage = std::max(a.stage, b.stage);
    const SymbolicPoint la = lift_to(spec, a, stage);
    const SymbolicPoint lb = lift_to(spec, b, stage);
    return la.level == lb.level;
}

std::optional<std::vector<Int>> product_translate(const RankOneSpec& spec, int j,
                                                  const std::vector<Int>& levels,
                                                  const std::vector<long long>& alphas,
                                                  const Int& m) {
    if (j < 0 || j > spec.stage_count())
        throw ValidationError("product_translate: stage out of range");
    if (levels.size() != alphas.size())
        throw ValidationError("product_translate: levels and alphas must have equal length");
    const Int& h = spec.column_height(j);
    for (const Int& l : levels)
        if (l < 0 || l >= h) throw ValidationError("product_translate: level outside the column");
    std::vector<Int> out;
    out.reserve(levels.size());
    for (size_t t = 0; t < levels.size(); ++t) {
        Int v = levels[t] + int_from_ll(alphas[t]) * m;
        if (v < 0 || v >= h) return std::nullopt;
        out.push_back(std::move(v));
    }
    return out;
}

void column_csv(std::ostream& out, const RankOneSpec& spec, int max_stage) {
    out << "stage,height,descendant_count,spacer_count\n";
    Int height = 1, count = 1;
    out << "0,1,1,0\n";
    for (int k = 0; k < max_stage; ++k) {
        const HeightSet& h = spec.height_sets[static_cast<size_t>(k)];
        count *= h.size();
        height = spec.column_height(k + 1);
        out << (k + 1) << ',' << to_string(height) << ',' << to_string(count) << ','
            << to_string(Int(height - count)) << '\n';
    }
}

}  // namespace rankone
