#include <rankone/descendants.hpp>

#include <algorithm>

namespace rankone {

PairLayout::PairLayout(const HeightSet& h) : roles(static_cast<size_t>(h.size())) {
    int id = 0;
    for (const auto& [a, b] : h.upper_pairs) {
        roles[static_cast<size_t>(a)] = {true, id, b};
        roles[static_cast<size_t>(b)] = {true, id, a};
        ++id;
    }
    for (const auto& [a, b] : h.lower_pairs) {
        roles[static_cast<size_t>(a)] = {false, id, b};
        roles[static_cast<size_t>(b)] = {false, id, a};
        ++id;
    }
}

PairKind PairLayout::classify(int xi, int yi) const {
    const Role& rx = roles[static_cast<size_t>(xi)];
    const Role& ry = roles[static_cast<size_t>(yi)];
    if (rx.upper && !ry.upper) return PairKind::NegativeMixed;
    if (!rx.upper && ry.upper) return PairKind::PositiveMixed;
    if (xi != yi && rx.pair_id == ry.pair_id)
        return rx.upper ? PairKind::PureUpper : PairKind::PureLower;
    return PairKind::Other;
}

std::vector<int> DescendantTable::components_of(uint64_t flat) const {
    std::vector<int> c(radices.size());
    for (size_t k = 0; k < radices.size(); ++k) {
        const uint64_t r = static_cast<uint64_t>(radices[k]);
        c[k] = static_cast<int>(flat % r);
        flat /= r;
    }
    return c;
}

uint64_t DescendantTable::flat_of(const std::vector<int>& components) const {
    uint64_t flat = 0;
    for (size_t k = radices.size(); k-- > 0;)
        flat = flat * static_cast<uint64_t>(radices[k]) + static_cast<uint64_t>(components[k]);
    return flat;
}

std::optional<uint64_t> DescendantTable::find(const Int& v) const {
    const auto it = std::lower_bound(values.begin(), values.end(), v);
    if (it == values.end() || *it != v) return std::nullopt;
    return static_cast<uint64_t>(it - values.begin());
}

DescendantTable descendant_table(const RankOneSpec& spec, int i, int j) {
    if (i < 0 || j <= i || j > spec.stage_count())
        throw ValidationError("descendant_table: need 0 <= i < j <= stage count");
    DescendantTable t;
    t.base_stage = i;
    t.target_stage = j;
    uint64_t count = 1;
    for (int k = i; k < j; ++k) {
        const auto& h = spec.height_sets[static_cast<size_t>(k)];
        t.stage_elements.push_back(h.elements);
        t.radices.push_back(h.size());
        if (count > (1ULL << 31) / static_cast<uint64_t>(h.size()))
            throw BudgetExceeded("descendant_table: more than 2^31 descendants");
        count *= static_cast<uint64_t>(h.size());
    }
    // Build values with the new stage as the most significant digit; gaps in
    // each H_k dominate the span of the stages below it, so the result stays
    // sorted. Collisions would mean the construction is broken.
    t.values.assign(1, Int(0));
    for (int k = i; k < j; ++k) {
        const auto& elems = spec.height_sets[static_cast<size_t>(k)].elements;
        std::vector<Int> next;
        next.reserve(t.values.size() * elems.size());
        for (const Int& e : elems)
            for (const Int& v : t.values) next.push_back(v + e);
        t.values = std::move(next);
    }
    for (size_t idx = 0; idx + 1 < t.values.size(); ++idx)
        if (!(t.values[idx] < t.values[idx + 1]))
            throw SpecViolation("descendant_table: values not strictly increasing at index " +
                                std::to_string(idx));
    return t;
}

namespace {

std::optional<Descendant> decompose_impl(const RankOneSpec& spec, const Int& value, int i, int j,
                                         bool throwing) {
    if (i < 0 || j <= i || j > spec.stage_count())
        throw ValidationError("decompose: need 0 <= i < j <= stage count");
    std::vector<Int> below(static_cast<size_t>(j - i) + 1);  // max sum of stages [i, i+t)
    below[0] = 0;
    for (int k = i; k < j; ++k)
        below[static_cast<size_t>(k - i + 1)] =
            below[static_cast<size_t>(k - i)] + spec.height_sets[static_cast<size_t>(k)].max_element();

    Descendant d;
    d.base_stage = i;
    d.target_stage = j;
    d.components.assign(static_cast<size_t>(j - i), 0);
    d.value = value;

    Int rem = value;
    if (rem < 0) {
        if (throwing) throw NotADescendant("decompose: negative value");
        return std::nullopt;
    }
    for (int k = j - 1; k >= i; --k) {
        const auto& elems = spec.height_sets[static_cast<size_t>(k)].elements;
        const Int lo = rem - below[static_cast<size_t>(k - i)];
        // candidates e with lo <= e <= rem
        const auto first = std::lower_bound(elems.begin(), elems.end(), lo);
        const auto last = std::upper_bound(first, elems.end(), rem);
        const auto n = last - first;
        if (n == 0) {
            if (throwing)
                throw NotADescendant("decompose: " + to_string(value) +
                                     " is not a descendant value");
            return std::nullopt;
        }
        if (n > 1)
            throw SpecViolation("decompose: ambiguous component at stage " + std::to_string(k) +
                                " (separation schedule violated)");
        d.components[static_cast<size_t>(k - i)] = static_cast<int>(first - elems.begin());
        rem -= *first;
    }
    if (rem != 0) {
        if (throwing) throw NotADescendant("decompose: residue after all stages");
        return std::nullopt;
    }
    return d;
}

}  // namespace

Descendant decompose(const RankOneSpec& spec, const Int& value, int i, int j) {
    return *decompose_impl(spec, value, i, j, true);
}

std::optional<Descendant> decompose_opt(const RankOneSpec& spec, const Int& value, int i, int j) {
    return decompose_impl(spec, value, i, j, false);
}

PairClass classify_pair(const HeightSet& h, const Int& x, const Int& y) {
    auto index_of = [&](const Int& v) {
        const auto it = std::lower_bound(h.elements.begin(), h.elements.end(), v);
        if (it == h.elements.end() || *it != v)
            throw ValidationError("classify_pair: " + to_string(v) + " is not an element");
        return static_cast<int>(it - h.elements.begin());
    };
    const int xi = index_of(x);
    const int yi = index_of(y);
    const PairLayout layout(h);
    PairClass pc;
    pc.kind = layout.classify(xi, yi);
    if (pc.kind == PairKind::NegativeMixed)
        pc.correspondent = {{h.elements[static_cast<size_t>(layout.partner(yi))],
                             h.elements[static_cast<size_t>(layout.partner(xi))]}};
    return pc;
}

}  // namespace rankone
