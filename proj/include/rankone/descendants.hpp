#pragma once

#include <rankone/heights.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace rankone {

enum class PairKind : uint8_t {
    Other = 0,
    PureUpper,      // {x,y} is one of the designated upper pairs
    PureLower,      // {x,y} is one of the designated lower pairs
    NegativeMixed,  // x on the upper side, y on the lower side
    PositiveMixed,  // x on the lower side, y on the upper side
};

struct PairClass {
    PairKind kind = PairKind::Other;
    // For a negative mixed (x, y): the positive mixed pair
    // (partner(y), partner(x)), which satisfies x - d = y - d' - 1.
    std::optional<std::pair<Int, Int>> correspondent;
};

// Element-role lookup for one stage. Every element of a height set belongs to
// exactly one designated pair; this caches side, pair id and partner index.
struct PairLayout {
    struct Role {
        bool upper = false;
        int pair_id = -1;
        int partner = -1;
    };
    std::vector<Role> roles;

    explicit PairLayout(const HeightSet& h);
    PairKind classify(int xi, int yi) const;
    int partner(int xi) const { return roles[static_cast<size_t>(xi)].partner; }
};

struct Descendant {
    int base_stage = 0;
    int target_stage = 0;
    std::vector<int> components;  // index into H_k for k = base..target-1
    Int value;                    // sum of the indexed elements
};

// D(I, j) for I the base of column C_i, materialized as exact values in
// increasing order. The flat index runs with stage i as the fastest digit;
// because element gaps dominate everything below them, flat order equals
// value order (asserted).
struct DescendantTable {
    int base_stage = 0;
    int target_stage = 0;
    std::vector<std::vector<Int>> stage_elements;  // H_k values, k in [i, j)
    std::vector<int> radices;                      // |H_k|
    std::vector<Int> values;                       // ascending

    uint64_t count() const { return values.size(); }
    std::vector<int> components_of(uint64_t flat) const;
    uint64_t flat_of(const std::vector<int>& components) const;
    const Int& value_at(uint64_t flat) const { return values[flat]; }
    std::optional<uint64_t> find(const Int& v) const;  // binary search
};

DescendantTable descendant_table(const RankOneSpec& spec, int i, int j);

// Unique component vector of a descendant value, found by walking stages from
// the top: at each stage exactly one element keeps the remainder inside the
// span of the stages below (ambiguity means the separation schedule is
// broken and raises SpecViolation).
Descendant decompose(const RankOneSpec& spec, const Int& value, int i, int j);

// Same, but returns nullopt instead of throwing NotADescendant. Used as a
// membership oracle when the value table is too large to materialize.
std::optional<Descendant> decompose_opt(const RankOneSpec& spec, const Int& value, int i, int j);

// Classifies the ordered pair (x, y) of elements of h.
PairClass classify_pair(const HeightSet& h, const Int& x, const Int& y);

}  // namespace rankone
