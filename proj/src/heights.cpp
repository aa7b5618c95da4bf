#include <rankone/heights.hpp>

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rankone {

namespace {

// Pair membership helper over element indices.
struct DesignatedPairs {
    std::vector<int> pair_id;   // per element index
    std::vector<char> upper;    // per element index

    explicit DesignatedPairs(const HeightSet& h)
        : pair_id(static_cast<size_t>(h.size()), -1),
          upper(static_cast<size_t>(h.size()), 0) {
        int id = 0;
        for (const auto& [a, b] : h.upper_pairs) {
            pair_id[static_cast<size_t>(a)] = id;
            pair_id[static_cast<size_t>(b)] = id;
            upper[static_cast<size_t>(a)] = 1;
            upper[static_cast<size_t>(b)] = 1;
            ++id;
        }
        for (const auto& [a, b] : h.lower_pairs) {
            pair_id[static_cast<size_t>(a)] = id;
            pair_id[static_cast<size_t>(b)] = id;
            ++id;
        }
    }

    bool designated(int x, int y, bool want_upper) const {
        return x != y && pair_id[static_cast<size_t>(x)] >= 0 &&
               pair_id[static_cast<size_t>(x)] == pair_id[static_cast<size_t>(y)] &&
               (upper[static_cast<size_t>(x)] != 0) == want_upper;
    }
};

bool check_quadruple(const HeightSet& h, const DesignatedPairs& dp, const Int& s12,
                     const Int& s34, int i1, int i2, int i3, int i4, CombReport& rep) {
    Int diff = s12 - s34;
    if (abs(diff) >= h.M) return true;
    const bool c1 = (i1 == i3 && i2 == i4) || (i1 == i4 && i2 == i3);
    const bool c2 = !c1 && diff == 0 &&
                    ((dp.designated(i1, i2, true) && dp.designated(i3, i4, true)) ||
                     (dp.designated(i1, i2, false) && dp.designated(i3, i4, false)));
    const bool c3 = diff == -1 && dp.designated(i1, i2, true) && dp.designated(i3, i4, false);
    const bool c4 = diff == 1 && dp.designated(i1, i2, false) && dp.designated(i3, i4, true);
    const int matched = int(c1) + int(c2) + int(c3) + int(c4);
    if (matched == 1) return true;
    rep.property2_ok = false;
    rep.counterexample = {h.elements[static_cast<size_t>(i1)], h.elements[static_cast<size_t>(i2)],
                          h.elements[static_cast<size_t>(i3)], h.elements[static_cast<size_t>(i4)]};
    std::ostringstream os;
    os << "quadruple (" << h.elements[static_cast<size_t>(i1)] << ", "
       << h.elements[static_cast<size_t>(i2)] << ", " << h.elements[static_cast<size_t>(i3)]
       << ", " << h.elements[static_cast<size_t>(i4)] << ") matches " << matched
       << " cases, expected exactly 1";
    rep.detail = os.str();
    return false;
}

}  // namespace

Int RankOneSpec::max_descendant(int i, int j) const {
    Int m = 0;
    for (int k = i; k < j; ++k) m += height_sets[static_cast<size_t>(k)].max_element();
    return m;
}

HeightSet comb_construct(const Int& M, int Gamma, int gamma, std::optional<Int> n_choice) {
    if (M < 2) throw ValidationError("comb_construct: M must be at least 2");
    if (Gamma < 1 || gamma < 1)
        throw ValidationError("comb_construct: Gamma and gamma must be positive");
    const unsigned long total = static_cast<unsigned long>(Gamma + gamma);
    const Int n_min = pow2(2 * total + 2);
    const Int n = n_choice.value_or(n_min);
    if (n % 2 != 0) throw ValidationError("comb_construct: n must be even");
    if (n < n_min)
        throw ValidationError("comb_construct: n must be at least 2^(2(Gamma+gamma)+2) = " +
                              to_string(n_min));

    struct Entry {
        Int value;
        bool upper;
        int pair_id;
    };
    std::vector<Entry> entries;
    entries.reserve(2 * total);
    for (int r = 1; r <= Gamma; ++r) {
        const Int p = pow2(static_cast<unsigned long>(r));
        entries.push_back({M * p - 1, true, r - 1});  // V_r' = M V_r - 1
        entries.push_back({M * (n - p), true, r - 1});
    }
    for (int s = 1; s <= gamma; ++s) {
        const Int p = pow2(static_cast<unsigned long>(Gamma + s));
        entries.push_back({M * p, false, s - 1});
        entries.push_back({M * (n - p), false, s - 1});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.value < b.value; });
    const Int shift = entries.front().value;

    HeightSet h;
    h.M = M;
    h.Gamma = Gamma;
    h.gamma = gamma;
    h.elements.reserve(entries.size());
    std::vector<std::pair<int, int>> upper(static_cast<size_t>(Gamma), {-1, -1});
    std::vector<std::pair<int, int>> lower(static_cast<size_t>(gamma), {-1, -1});
    for (size_t idx = 0; idx < entries.size(); ++idx) {
        h.elements.push_back(entries[idx].value - shift);
        auto& slot = entries[idx].upper ? upper[static_cast<size_t>(entries[idx].pair_id)]
                                        : lower[static_cast<size_t>(entries[idx].pair_id)];
        if (slot.first < 0)
            slot.first = static_cast<int>(idx);
        else
            slot.second = static_cast<int>(idx);
    }
    h.upper_pairs = std::move(upper);
    h.lower_pairs = std::move(lower);

    validate_height_set(h, M);
    const CombReport rep = verify_comb_properties(h);
    if (!rep.ok())
        throw SpecViolation("comb_construct: built set fails its own properties: " + rep.detail);
    return h;
}

CombReport verify_comb_properties(const HeightSet& h) {
    CombReport rep;
    const DesignatedPairs dp(h);
    const auto& e = h.elements;

    for (const auto& [ui, uj] : h.upper_pairs) {
        for (const auto& [li, lj] : h.lower_pairs) {
            if (e[static_cast<size_t>(ui)] + e[static_cast<size_t>(uj)] !=
                e[static_cast<size_t>(li)] + e[static_cast<size_t>(lj)] - 1) {
                rep.property1_ok = false;
                rep.detail = "cross pair sum mismatch: {" + to_string(e[static_cast<size_t>(ui)]) +
                             "," + to_string(e[static_cast<size_t>(uj)]) + "} vs {" +
                             to_string(e[static_cast<size_t>(li)]) + "," +
                             to_string(e[static_cast<size_t>(lj)]) + "}";
                return rep;
            }
        }
    }

    const size_t m = e.size();
    const double quads = static_cast<double>(m) * m * m * m;
    if (quads <= 4.0e6) {
        Int s12, s34;
        for (int i1 = 0; i1 < static_cast<int>(m); ++i1)
            for (int i2 = 0; i2 < static_cast<int>(m); ++i2) {
                s12 = e[static_cast<size_t>(i1)] + e[static_cast<size_t>(i2)];
                for (int i3 = 0; i3 < static_cast<int>(m); ++i3)
                    for (int i4 = 0; i4 < static_cast<int>(m); ++i4) {
                        s34 = e[static_cast<size_t>(i3)] + e[static_cast<size_t>(i4)];
                        if (!check_quadruple(h, dp, s12, s34, i1, i2, i3, i4, rep)) return rep;
                    }
            }
        return rep;
    }

    // Large sets: sort all ordered pair sums and only inspect combinations
    // whose sums land within M of each other; everything else is vacuous.
    struct PairSum {
        Int sum;
        int x, y;
    };
    std::vector<PairSum> sums;
    sums.reserve(m * m);
    for (int x = 0; x < static_cast<int>(m); ++x)
        for (int y = 0; y < static_cast<int>(m); ++y)
            sums.push_back({e[static_cast<size_t>(x)] + e[static_cast<size_t>(y)], x, y});
    std::sort(sums.begin(), sums.end(),
              [](const PairSum& a, const PairSum& b) { return a.sum < b.sum; });
    size_t ws = 0;
    for (size_t p = 0; p < sums.size(); ++p) {
        while (sums[p].sum - sums[ws].sum >= h.M) ++ws;
        for (size_t q = ws; q <= p; ++q) {
            if (!check_quadruple(h, dp, sums[q].sum, sums[p].sum, sums[q].x, sums[q].y, sums[p].x,
                                 sums[p].y, rep))
                return rep;
            if (q != p &&
                !check_quadruple(h, dp, sums[p].sum, sums[q].sum, sums[p].x, sums[p].y, sums[q].x,
                                 sums[q].y, rep))
                return rep;
        }
    }
    return rep;
}

void validate_height_set(const HeightSet& h, const Int& min_gap) {
    if (h.M < 2) throw SpecViolation("height set: M must be at least 2");
    if (h.Gamma < 1 || h.gamma < 1)
        throw SpecViolation("height set: Gamma and gamma must be positive");
    const int m = h.size();
    if (m != 2 * h.Gamma + 2 * h.gamma)
        throw SpecViolation("height set: expected 2*Gamma + 2*gamma elements");
    if (static_cast<int>(h.upper_pairs.size()) != h.Gamma ||
        static_cast<int>(h.lower_pairs.size()) != h.gamma)
        throw SpecViolation("height set: pair counts do not match Gamma/gamma");
    if (h.elements.front() != 0) throw SpecViolation("height set: minimum element must be 0");
    for (int k = 0; k + 1 < m; ++k) {
        const Int gap = h.elements[static_cast<size_t>(k + 1)] - h.elements[static_cast<size_t>(k)];
        if (gap <= 0) throw SpecViolation("height set: elements must be strictly increasing");
        if (gap < min_gap)
            throw SpecViolation("height set: gap " + to_string(gap) + " below required minimum " +
                                to_string(min_gap));
    }
    std::vector<int> seen(static_cast<size_t>(m), 0);
    auto touch = [&](int idx) {
        if (idx < 0 || idx >= m) throw SpecViolation("height set: pair index out of range");
        if (seen[static_cast<size_t>(idx)]++) throw SpecViolation("height set: element in two pairs");
    };
    for (const auto& [a, b] : h.upper_pairs) {
        touch(a);
        touch(b);
    }
    for (const auto& [a, b] : h.lower_pairs) {
        touch(a);
        touch(b);
    }
    // cross-pair sum identity
    for (const auto& [ui, uj] : h.upper_pairs)
        for (const auto& [li, lj] : h.lower_pairs)
            if (h.elements[static_cast<size_t>(ui)] + h.elements[static_cast<size_t>(uj)] !=
                h.elements[static_cast<size_t>(li)] + h.elements[static_cast<size_t>(lj)] - 1)
                throw SpecViolation("height set: V + W = v + w - 1 violated");
}

void append_stage(RankOneSpec& spec, HeightSet h) {
    if (spec.column_heights.empty()) spec.column_heights.push_back(1);
    const int k = spec.stage_count();
    h.stage = k;
    const Int hk = spec.column_heights.back();
    validate_height_set(h, hk);

    const int r = h.size();
    std::vector<Int> spacers;
    spacers.reserve(static_cast<size_t>(r));
    for (int m = 0; m + 1 < r; ++m)
        spacers.push_back(h.elements[static_cast<size_t>(m + 1)] -
                          h.elements[static_cast<size_t>(m)] - hk);
    spacers.push_back(0);  // nothing above the last subcolumn

    Int hnext = hk * r;
    for (const Int& s : spacers) hnext += s;

    spec.cut_counts.push_back(r);
    spec.spacer_counts.push_back(std::move(spacers));
    spec.column_heights.push_back(hnext);
    spec.obstruction_product *= make_rat(Int(4 * h.gamma - 1), Int(4 * h.gamma));
    spec.height_sets.push_back(std::move(h));
}

Int schedule_M(const RankOneSpec& spec_so_far) {
    const Int maxd = spec_so_far.max_descendant(0, spec_so_far.stage_count());
    const Int h = spec_so_far.column_heights.empty() ? Int(1) : spec_so_far.column_heights.back();
    return 2 * maxd + h + 2;
}

RankOneSpec build_family(const std::vector<int>& gamma_seq, int stages, const Int& m_slack) {
    if (stages != static_cast<int>(gamma_seq.size()))
        throw ValidationError("build_family: stages must equal the gamma sequence length");
    if (stages < 1) throw ValidationError("build_family: need at least one stage");
    if (m_slack < 0) throw ValidationError("build_family: m_slack must be nonnegative");
    for (int g : gamma_seq)
        if (g < 1) throw ValidationError("build_family: gamma must be positive");

    RankOneSpec spec;
    spec.column_heights.push_back(1);
    for (int k = 0; k < stages; ++k) {
        const Int M = schedule_M(spec) + m_slack;
        append_stage(spec, comb_construct(M, gamma_seq[static_cast<size_t>(k)],
                                          gamma_seq[static_cast<size_t>(k)]));
    }
    return spec;
}

void validate_spec(const RankOneSpec& spec) {
    const int K = spec.stage_count();
    if (static_cast<int>(spec.cut_counts.size()) != K ||
        static_cast<int>(spec.spacer_counts.size()) != K ||
        static_cast<int>(spec.column_heights.size()) != K + 1)
        throw SpecViolation("spec: derived parameter array sizes inconsistent");
    if (spec.column_heights.front() != 1) throw SpecViolation("spec: h_0 must be 1");

    for (int k = 0; k < K; ++k) {
        const HeightSet& h = spec.height_sets[static_cast<size_t>(k)];
        const Int& hk = spec.column_heights[static_cast<size_t>(k)];
        validate_height_set(h, hk);
        if (h.stage != k) throw SpecViolation("spec: stage index mismatch");
        if (spec.cut_counts[static_cast<size_t>(k)] != h.size())
            throw SpecViolation("spec: cut count must equal |H_k|");
        const auto& sp = spec.spacer_counts[static_cast<size_t>(k)];
        if (static_cast<int>(sp.size()) != h.size())
            throw SpecViolation("spec: spacer count array size must equal r_k");
        Int hnext = hk * h.size();
        for (int m = 0; m < h.size(); ++m) {
            const Int expect = (m + 1 < h.size())
                                   ? Int(h.elements[static_cast<size_t>(m + 1)] -
                                         h.elements[static_cast<size_t>(m)] - hk)
                                   : Int(0);
            if (sp[static_cast<size_t>(m)] != expect)
                throw SpecViolation("spec: spacer s_{" + std::to_string(k) + "," +
                                    std::to_string(m) + "} inconsistent with the height set");
            hnext += sp[static_cast<size_t>(m)];
        }
        if (spec.column_heights[static_cast<size_t>(k + 1)] != hnext)
            throw SpecViolation("spec: column height recurrence violated at stage " +
                                std::to_string(k));
        // Separation hypothesis used by the census classification.
        if (h.M < 2 * spec.max_descendant(0, k) + 2)
            throw SpecViolation("spec: M_" + std::to_string(k) +
                                " below twice the largest descendant plus 2");
        const CombReport rep = verify_comb_properties(h);
        if (!rep.ok())
            throw SpecViolation("spec: stage " + std::to_string(k) +
                                " fails pair properties: " + rep.detail);
    }
}

std::string spec_to_json(const RankOneSpec& spec, int indent) {
    nlohmann::json j;
    j["stages"] = nlohmann::json::array();
    for (const HeightSet& h : spec.height_sets) {
        nlohmann::json s;
        s["k"] = h.stage;
        s["M"] = to_string(h.M);
        s["Gamma"] = h.Gamma;
        s["gamma"] = h.gamma;
        auto elems = nlohmann::json::array();
        for (const Int& e : h.elements) elems.push_back(to_string(e));
        s["elements"] = std::move(elems);
        auto up = nlohmann::json::array();
        for (const auto& [a, b] : h.upper_pairs) up.push_back({a, b});
        s["upper_pairs"] = std::move(up);
        auto lo = nlohmann::json::array();
        for (const auto& [a, b] : h.lower_pairs) lo.push_back({a, b});
        s["lower_pairs"] = std::move(lo);
        j["stages"].push_back(std::move(s));
    }
    auto heights = nlohmann::json::array();
    for (const Int& h : spec.column_heights) heights.push_back(to_string(h));
    j["column_heights"] = std::move(heights);
    return j.dump(indent);
}

RankOneSpec spec_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("spec JSON parse error: ") + e.what());
    }
    RankOneSpec spec;
    spec.column_heights.push_back(1);
    try {
        for (const auto& s : j.at("stages")) {
            HeightSet h;
            h.stage = s.at("k").get<int>();
            if (h.stage != spec.stage_count())
                throw SpecViolation("spec JSON: stage indices must be 0,1,... in order");
            h.M = int_from_string(s.at("M").get<std::string>());
            h.Gamma = s.at("Gamma").get<int>();
            h.gamma = s.at("gamma").get<int>();
            for (const auto& e : s.at("elements"))
                h.elements.push_back(int_from_string(e.get<std::string>()));
            for (const auto& p : s.at("upper_pairs"))
                h.upper_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
            for (const auto& p : s.at("lower_pairs"))
                h.lower_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
            append_stage(spec, std::move(h));
        }
        if (j.contains("column_heights")) {
            const auto& ch = j.at("column_heights");
            if (ch.size() != spec.column_heights.size())
                throw SpecViolation("spec JSON: column_heights length mismatch");
            for (size_t k = 0; k < spec.column_heights.size(); ++k)
                if (int_from_string(ch.at(k).get<std::string>()) != spec.column_heights[k])
                    throw SpecViolation("spec JSON: column height " + std::to_string(k) +
                                        " does not match the height sets");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("spec JSON shape error: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("spec JSON value error: ") + e.what());
    }
    validate_spec(spec);
    return spec;
}

RankOneSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return spec_from_json_text(buf.str());
}

void save_spec_file(const RankOneSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write spec file: " + path);
    out << spec_to_json(spec) << '\n';
}

}  // namespace rankone
