#pragma once

#include <rankone/errors.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace rankone::markov {

// Nearest-neighbour shift on Z with drift epsilon/i toward the origin:
//   p_{i,i+1} = (1 - eps/i)/2,  p_{i,i-1} = (1 + eps/i)/2  (i != 0),
//   p_{0,1} = p_{0,-1} = 1/2.
// The same formulas applied literally at negative i mirror the chain through
// 0, which is the reading under which the symmetric stationary vector is
// reversible. epsilon = 0 is admitted as the classical simple-walk analogue
// used by the return-probability oracle.
struct MarkovChainSpec {
    double epsilon = 0.5;
    int radius = 100;      // truncation window |i| <= R
    bool squared = false;  // work with Q = P*P where an op calls for it
};

void validate(const MarkovChainSpec& spec);

double kernel_entry(const MarkovChainSpec& spec, long long i, long long j);

// Band matrix over states -R..R. Entries whose row magnitude exceeds
// exact_radius involve paths through the window edge and are truncated.
struct BandMatrix {
    int radius = 0;
    int bandwidth = 0;
    int exact_radius = 0;
    std::vector<double> a;  // (2R+1) rows x (2*bandwidth+1) offsets

    int dim() const { return 2 * radius + 1; }
    double get(long long i, long long j) const;
    void set(long long i, long long j, double v);
};

BandMatrix kernel_window(const MarkovChainSpec& spec);
BandMatrix band_multiply(const BandMatrix& A, const BandMatrix& B);

struct StationaryVector {
    int radius = 0;
    std::vector<double> values;  // index i + R
    double max_residual = 0.0;   // max interior |(lambda P - lambda)_i|

    double at(long long i) const { return values[static_cast<size_t>(i + radius)]; }
};

// lambda_i = i Gamma(1+eps) Gamma(i-eps) / (Gamma(1-eps) Gamma(i+1+eps)) for
// i >= 1, lambda_0 = 1, lambda_{-i} = lambda_i; evaluated in log space so the
// window can reach R = 2000 without overflow.
StationaryVector stationary(const MarkovChainSpec& spec);

struct ReversibilityReport {
    bool pass = false;
    double max_rel_gap = 0.0;  // max |lambda_i p_ij - lambda_j p_ji| / scale
    long long worst_i = 0;
    long long worst_j = 0;
    double tolerance = 1e-12;
};

ReversibilityReport check_reversible(const BandMatrix& kernel, const StationaryVector& lam,
                                     double rel_tol = 1e-12);

struct CylinderWord {
    long long offset = 0;
    std::vector<long long> states;
};

struct CylinderMeasure {
    double value = 0.0;
    bool admissible = false;
};

// mu([s_0 ... s_n]_k) = lambda_{s_0} p_{s_0,s_1} ... p_{s_{n-1},s_n};
// inadmissible words get value 0 with the flag cleared.
CylinderMeasure cylinder_measure(const MarkovChainSpec& spec, const StationaryVector& lam,
                                 const CylinderWord& w);

struct ReturnSeries {
    std::vector<double> p00;  // p00[m] = p_{00}^{(m+1)}, m+1 = 1..steps
    std::vector<double> partial_sums;
    double leaked_mass = 0.0;  // probability that left the window (0 when R >= N+10)
};

// Row 0 of the kernel powers by iterated vector-band products. Requires
// R >= steps + 10 so the walk cannot feel the truncation.
ReturnSeries return_probabilities(const MarkovChainSpec& spec, int steps);

struct ProductDiagnostic {
    int fold = 1;
    int steps = 0;
    std::vector<double> q00;  // q00[m] = q_{00}^{(m+1)} for Q = P*P
    std::vector<double> fold_partial_sums;  // partial sums of (q00^(n))^fold
    double exponent = 0.0;        // beta from the log-log fit over [N/2, N]
    double fit_residual = 0.0;    // rms residual of the fit
    double leaked_mass = 0.0;
    bool diverges = false;        // fold * beta <= 1
    std::string verdict;
};

// Finite-N divergence heuristic for sum (q00^(n))^fold: fits the decay
// exponent of q00 over the back half of the series and reports the verdict.
// Requires spec.squared, steps >= 100 and R >= 2*steps + 10.
ProductDiagnostic product_conservativity_diagnostic(const MarkovChainSpec& spec, int fold,
                                                    int steps);

struct McEstimate {
    std::vector<int> checkpoints;
    std::vector<double> p_hat;     // estimated P[X_n = 0]
    std::vector<double> std_err;
    uint64_t paths = 0;
    uint64_t seed = 0;
};

// Independent Monte Carlo walker used as an oracle for the matrix-power
// series. Work is split over a fixed shard count with per-shard seeds, so
// results do not depend on the thread count.
McEstimate mc_return_estimate(const MarkovChainSpec& spec, const std::vector<int>& checkpoints,
                              uint64_t paths, uint64_t seed, int threads = 0);

void stationary_csv(std::ostream& out, const StationaryVector& lam);
void returns_csv(std::ostream& out, const ReturnSeries& s);
void diagnostic_csv(std::ostream& out, const ProductDiagnostic& d);
std::string diagnostic_json(const ProductDiagnostic& d, int indent = 2);

}  // namespace rankone::markov
