#pragma once

#include <rankone/errors.hpp>
#include <rankone/numeric.hpp>

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rankone {

// One stage of a cutting-and-stacking construction: the height set H_k (the
// offsets at which copies of column C_k sit inside C_{k+1}) together with a
// designated pair structure. The elements are partitioned into Gamma "upper"
// pairs {V_r, W_r} and gamma "lower" pairs {v_s, w_s}; every cross choice
// satisfies V + W = v + w - 1, and quadruple sums that land within M of each
// other are forced into a short list of shapes (see verify_comb_properties).
struct HeightSet {
    int stage = 0;
    std::vector<Int> elements;                     // strictly increasing, front() == 0
    std::vector<std::pair<int, int>> upper_pairs;  // index pairs, first < second
    std::vector<std::pair<int, int>> lower_pairs;
    Int M = 0;  // separation parameter used to build the set
    int Gamma = 0;
    int gamma = 0;

    int size() const { return static_cast<int>(elements.size()); }
    const Int& max_element() const { return elements.back(); }
};

struct CombReport {
    bool property1_ok = true;
    bool property2_ok = true;
    std::optional<std::array<Int, 4>> counterexample;  // first offending quadruple
    std::string detail;

    bool ok() const { return property1_ok && property2_ok; }
};

// Builds a height set with the designated pair structure for separation
// parameter M >= 2 and pair counts Gamma, gamma >= 1. The base set lives on
// {2, 4, ..., 2^(Gamma+gamma)} and its mirror below an even n; every element
// is then scaled by M, each V_r drops by 1, and the whole set is shifted so
// its minimum is 0 (sum differences are shift-invariant). The defaulted
// n = 2^(2(Gamma+gamma)+2) is the smallest accepted choice.
HeightSet comb_construct(const Int& M, int Gamma, int gamma,
                         std::optional<Int> n_choice = std::nullopt);

// Property 1: V + W = v + w - 1 for every upper/lower cross choice.
// Property 2: for every ordered quadruple x1,x2,x3,x4 of elements with
// |x1+x2-x3-x4| < M, exactly one holds:
//   - {x1,x2} = {x3,x4} as multisets;
//   - equal sums, both pairs designated and of the same kind;
//   - sum short by 1, {x1,x2} upper and {x3,x4} lower;
//   - sum over by 1, {x1,x2} lower and {x3,x4} upper.
// Enumeration is exhaustive over |H|^4 for small sets and switches to an
// equivalent sorted pair-sum window scan for large ones (only quadruples
// whose pair sums land within M of each other are constrained).
CombReport verify_comb_properties(const HeightSet& h);

// Structural checks: element count 2*Gamma + 2*gamma, strictly increasing,
// minimum 0, pairs partition the index range, cross-pair sums, consecutive
// gaps at least min_gap, M >= 2. Throws SpecViolation.
void validate_height_set(const HeightSet& h, const Int& min_gap);

// A rank-one transformation given by its height sets, with the derived
// cutting-and-stacking parameters. Column heights satisfy
// h_{k+1} = r_k h_k + sum_m s_{k,m} and the spacer above the last subcolumn
// is always 0, so h_{k+1} = max(H_k) + h_k.
struct RankOneSpec {
    std::vector<HeightSet> height_sets;
    std::vector<int> cut_counts;                  // r_k = |H_k|
    std::vector<std::vector<Int>> spacer_counts;  // s_{k,m}, 0 <= m < r_k
    std::vector<Int> column_heights;              // h_0..h_K, h_0 = 1
    Rat obstruction_product = Rat(1);             // prod_k (1 - 1/(4 gamma_k))

    int stage_count() const { return static_cast<int>(height_sets.size()); }
    const Int& column_height(int k) const { return column_heights.at(static_cast<size_t>(k)); }
    // max of H_i + ... + H_{j-1} (0 for an empty range)
    Int max_descendant(int i, int j) const;
};

// Appends one stage, deriving (r, s, h) and checking the gap restriction
// against the height of the column being cut.
void append_stage(RankOneSpec& spec, HeightSet h);

// Separation parameter for the next stage: twice the largest descendant value
// so far, plus the current column height, plus 2. This dominates both the
// within-window hypothesis of the pair censuses and the element-gap bound.
Int schedule_M(const RankOneSpec& spec_so_far);

RankOneSpec build_family(const std::vector<int>& gamma_seq, int stages,
                         const Int& m_slack = Int(0));

// Full re-validation: per-stage structure and properties, derived parameters
// consistent with the height sets, and M_k >= 2 max D(k) + 2 for every stage
// (the hypothesis the constant-time census classification depends on).
void validate_spec(const RankOneSpec& spec);

std::string spec_to_json(const RankOneSpec& spec, int indent = 2);
RankOneSpec spec_from_json_text(const std::string& text);
RankOneSpec load_spec_file(const std::string& path);
void save_spec_file(const RankOneSpec& spec, const std::string& path);

}  // namespace rankone
