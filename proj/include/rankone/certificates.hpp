#pragma once

#include <rankone/descendants.hpp>
#include <rankone/heights.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rankone {

struct CensusOptions {
    uint64_t pair_budget = 100000000ULL;  // 1e8 ordered pairs
    uint64_t tuple_budget = 10000000ULL;  // 1e7 tuples
    int threads = 0;                      // 0 = hardware concurrency
    std::optional<uint64_t> sample_count; // sampled (estimate) mode
    uint64_t seed = 0;
    bool verify_witnesses = true;         // exact check of every constructed witness
    bool report_timing = false;           // emit measured elapsed_ms instead of 0
};

// Exhaustive census result with its analytic bound. Counts are exact unless
// estimate is set (sampled mode); fractions are exact rationals either way.
struct CertificateReport {
    std::string kind;
    int i = 0;
    int j = 0;
    Int b = 0;
    long long n = 0;
    std::vector<long long> alphas;
    std::vector<Int> bs;

    uint64_t total = 0;
    uint64_t satisfied = 0;     // pairs/tuples admitting a complementary tuple
    uint64_t constructive = 0;  // pairs witnessed by the direct construction
    Rat fraction = Rat(0);
    Rat constructive_fraction = Rat(0);
    Rat analytic_bound = Rat(0);
    std::string bound_kind = "none";  // "lower" | "upper" | "none"
    bool bound_ok = true;
    bool estimate = false;
    int kprime = -1;                        // first stage counted by the swap bound
    std::vector<uint64_t> stage_swap_counts;  // |R_k| per stage (inverse census)
    uint64_t witness_checks = 0;
    uint64_t elapsed_ms = 0;
    bool timing_reported = false;
};

// Census of ordered pairs (a, a') in D(I,j)^2 admitting (d, d') with
// a - d = a' - d' - b. Per pair the constructive route is tried first: if at
// least b component pairs are negative mixed, flipping the first b of them to
// their positive correspondents gives a verified witness. Pairs without the
// constructive witness fall back to a full shift search over d with value
// membership lookups. Reports both counts; the analytic lower bound for the
// constructive count is the exact tail of the per-stage mixing distribution
// (Binomial(j-i, 1/4) when Gamma_k = gamma_k).
CertificateReport certify_txt(const RankOneSpec& spec, int i, int j, const Int& b,
                              const CensusOptions& opts = {});

// Census of pairs admitting (d, d') with a + a' = d + d' + 1. A pair
// qualifies exactly when some component pair {a_k, a_k'} is a lower pure
// pair (then any upper pair at that stage is a verified witness; without a
// pure component no witness exists because unequal component sums inside the
// separation window force designated pairs). The analytic upper bound is the
// fraction of pairs with at least one pure component of either kind.
CertificateReport certify_u_obstruction(const RankOneSpec& spec, int i, int j,
                                        const CensusOptions& opts = {});

// Census of pairs admitting (d, d') with a - d = d' - a' in nZ \ {0}.
// Constructive route: swap the components at a stage k >= kprime where
// n | a_k - a_k', a_k != a_k'; kprime is the first stage whose accumulated
// descendant count exceeds 2 n^2 (where the pigeonhole lower bound
// |R'| >= |D|^2 / n^2 leaves room below the diagonal). Pairs with no swap
// stage anywhere fall back to a full shift search.
CertificateReport certify_conservative_inverse(const RankOneSpec& spec, int i, int j,
                                               long long n,
                                               const CensusOptions& opts = {});

// Census of k-tuples (a_0..a_{k-1}) in D(I,j)^k admitting an integer m != 0
// with a_l - b_l - alpha_l m in D(I,j) for every l. Pure search: candidate m
// values are enumerated through d_0 with membership lookups for the rest.
CertificateReport certify_general_product(const RankOneSpec& spec, int i, int j,
                                          const std::vector<long long>& alphas,
                                          const std::vector<Int>& bs,
                                          const CensusOptions& opts = {});

// For a + a' = d + d' + 1 with all four in D(I,j): returns the largest stage
// whose component sums differ and asserts both component pairs there are
// designated pairs split between the upper and lower sides.
int lemma_mixed_witness(const RankOneSpec& spec, const Int& a, const Int& a2,
                        const Int& d, const Int& d2, int i, int j);

std::string report_csv_header();
std::string report_csv_row(const CertificateReport& r);
std::string report_json(const CertificateReport& r, int indent = 2);

}  // namespace rankone
