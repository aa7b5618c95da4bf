#pragma once

#include <rankone/heights.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

namespace rankone {

// Explicit column built by iterating the stacking, independent of the
// direct-sum algebra. descendant_heights lists the levels of C_n occupied by
// descendants of the unit interval; width is the formal product of 1/r_k.
struct Column {
    int stage = 0;
    Int height = 1;
    std::vector<Int> descendant_heights;  // ascending, contains 0
    Rat width = Rat(1);
};

Column build_column(const RankOneSpec& spec, int n);

// A point of the space as a column level plus a deterministic tail of
// subcolumn choices (drawn up-front from the seed) that resolves refinements.
// Copies retrace the same choices, so orbits are reproducible and invertible.
struct SymbolicPoint {
    int created_stage = 0;
    int stage = 0;
    Int level = 0;
    uint64_t seed = 0;
    std::vector<int> choices;  // choices[t] refines stage created_stage + t

    int next_choice_index() const { return stage - created_stage; }
};

SymbolicPoint make_point(const RankOneSpec& spec, int stage, Int level, uint64_t seed);

// T^power on a symbolic point. Within-column translation is a single level
// shift; crossing a column boundary refines to the next stage using the
// point's choice tail. Throws StagesExhausted past the last built stage.
SymbolicPoint apply_T(const RankOneSpec& spec, SymbolicPoint p, const Int& power);

// Refines a point to the given stage without moving it.
SymbolicPoint lift_to(const RankOneSpec& spec, SymbolicPoint p, int stage);

// Equal as points of the space: lift both to a common stage and compare.
bool same_point(const RankOneSpec& spec, const SymbolicPoint& a, const SymbolicPoint& b);

// Translates a tuple of C_j levels by (alpha_0 m, ..., alpha_{k-1} m).
// Returns nullopt if any coordinate leaves [0, h_j) — a within-column
// translate does not witness the intersection in that case.
std::optional<std::vector<Int>> product_translate(const RankOneSpec& spec, int j,
                                                  const std::vector<Int>& levels,
                                                  const std::vector<long long>& alphas,
                                                  const Int& m);

// CSV rows: stage, height, descendant_count, spacer_count.
void column_csv(std::ostream& out, const RankOneSpec& spec, int max_stage);

}  // namespace rankone
