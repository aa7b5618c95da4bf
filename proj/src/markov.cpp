#include <rankone/markov.hpp>
#include <rankone/numeric.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <thread>

namespace rankone::markov {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void validate(const MarkovChainSpec& spec) {
    if (!(spec.epsilon >= 0.0 && spec.epsilon < 1.0))
        throw ValidationError("markov: epsilon must lie in [0, 1); 0 is the simple-walk analogue");
    if (spec.radius < 2) throw ValidationError("markov: radius must be at least 2");
}

double kernel_entry(const MarkovChainSpec& spec, long long i, long long j) {
    validate(spec);
    if (std::llabs(i) > spec.radius || std::llabs(j) > spec.radius)
        throw ValidationError("kernel_entry: state outside the window");
    // The i != 0 formulas applied verbatim at negative i mirror the chain
    // through the origin; rows then sum to 1 everywhere.
    if (j == i + 1) return i == 0 ? 0.5 : 0.5 * (1.0 - spec.epsilon / static_cast<double>(i));
    if (j == i - 1) return i == 0 ? 0.5 : 0.5 * (1.0 + spec.epsilon / static_cast<double>(i));
    return 0.0;
}

double BandMatrix::get(long long i, long long j) const {
    if (std::llabs(i) > radius || std::llabs(j) > radius) return 0.0;
    const long long off = j - i;
    if (std::llabs(off) > bandwidth) return 0.0;
    return a[static_cast<size_t>(i + radius) * static_cast<size_t>(2 * bandwidth + 1) +
             static_cast<size_t>(off + bandwidth)];
}

void BandMatrix::set(long long i, long long j, double v) {
    const long long off = j - i;
    a[static_cast<size_t>(i + radius) * static_cast<size_t>(2 * bandwidth + 1) +
      static_cast<size_t>(off + bandwidth)] = v;
}

BandMatrix kernel_window(const MarkovChainSpec& spec) {
    validate(spec);
    BandMatrix P;
    P.radius = spec.radius;
    P.bandwidth = 1;
    P.exact_radius = spec.radius;
    P.a.assign(static_cast<size_t>(P.dim()) * 3, 0.0);
    for (long long i = -spec.radius; i <= spec.radius; ++i) {
        if (i + 1 <= spec.radius) P.set(i, i + 1, kernel_entry(spec, i, i + 1));
        if (i - 1 >= -spec.radius) P.set(i, i - 1, kernel_entry(spec, i, i - 1));
    }
    return P;
}

BandMatrix band_multiply(const BandMatrix& A, const BandMatrix& B) {
    if (A.radius != B.radius) throw ValidationError("band_multiply: window mismatch");
    BandMatrix C;
    C.radius = A.radius;
    C.bandwidth = A.bandwidth + B.bandwidth;
    C.exact_radius = std::min(A.exact_radius, B.exact_radius - A.bandwidth);
    C.a.assign(static_cast<size_t>(C.dim()) * static_cast<size_t>(2 * C.bandwidth + 1), 0.0);
    for (long long i = -C.radius; i <= C.radius; ++i)
        for (long long j = std::max<long long>(-C.radius, i - C.bandwidth);
             j <= std::min<long long>(C.radius, i + C.bandwidth); ++j) {
            double s = 0.0;
            for (long long k = std::max<long long>(-C.radius, i - A.bandwidth);
                 k <= std::min<long long>(C.radius, i + A.bandwidth); ++k)
                s += A.get(i, k) * B.get(k, j);
            C.set(i, j, s);
        }
    return C;
}

StationaryVector stationary(const MarkovChainSpec& spec) {
    validate(spec);
    const int R = spec.radius;
    const double e = spec.epsilon;
    StationaryVector lam;
    lam.radius = R;
    lam.values.assign(static_cast<size_t>(2 * R + 1), 0.0);
    lam.values[static_cast<size_t>(R)] = 1.0;
    // log-space evaluation: the Gamma factors overflow directly past i ~ 170.
    // The logs themselves reach ~1e4, so extended precision is needed for the
    // exponentiated differences to stay good to 1e-12 relative.
    const long double el = static_cast<long double>(e);
    const long double base = lgammal(1.0L + el) - lgammal(1.0L - el);
    for (int i = 1; i <= R; ++i) {
        const long double lg = logl(static_cast<long double>(i)) + base +
                               lgammal(static_cast<long double>(i) - el) -
                               lgammal(static_cast<long double>(i) + 1.0L + el);
        const double v = static_cast<double>(expl(lg));
        lam.values[static_cast<size_t>(R + i)] = v;
        lam.values[static_cast<size_t>(R - i)] = v;
    }
    double worst = 0.0;
    for (long long i = -(R - 1); i <= R - 1; ++i) {
        const double in = lam.at(i - 1) * kernel_entry(spec, i - 1, i) +
                          lam.at(i + 1) * kernel_entry(spec, i + 1, i);
        worst = std::max(worst, std::fabs(in - lam.at(i)));
    }
    lam.max_residual = worst;
    return lam;
}

ReversibilityReport check_reversible(const BandMatrix& kernel, const StationaryVector& lam,
                                     double rel_tol) {
    if (kernel.radius != lam.radius)
        throw ValidationError("check_reversible: kernel and stationary windows disagree");
    ReversibilityReport rep;
    rep.tolerance = rel_tol;
    const long long R = kernel.exact_radius;
    for (long long i = -R; i <= R; ++i)
        for (long long off = 1; off <= kernel.bandwidth; ++off) {
            const long long j = i + off;
            if (j > R) break;
            const double lhs = lam.at(i) * kernel.get(i, j);
            const double rhs = lam.at(j) * kernel.get(j, i);
            const double scale = std::max(std::fabs(lhs), std::fabs(rhs));
            const double rel = scale > 0.0 ? std::fabs(lhs - rhs) / scale : 0.0;
            if (rel > rep.max_rel_gap) {
                rep.max_rel_gap = rel;
                rep.worst_i = i;
                rep.worst_j = j;
            }
        }
    rep.pass = rep.max_rel_gap < rel_tol;
    return rep;
}

CylinderMeasure cylinder_measure(const MarkovChainSpec& spec, const StationaryVector& lam,
                                 const CylinderWord& w) {
    validate(spec);
    if (w.states.empty()) throw ValidationError("cylinder_measure: empty word");
    for (long long s : w.states)
        if (std::llabs(s) > spec.radius)
            throw ValidationError("cylinder_measure: state outside the window");
    CylinderMeasure out;
    double v = lam.at(w.states.front());
    for (size_t t = 0; t + 1 < w.states.size(); ++t) {
        if (std::llabs(w.states[t + 1] - w.states[t]) != 1) return out;  // value 0, flag unset
        v *= kernel_entry(spec, w.states[t], w.states[t + 1]);
    }
    out.value = v;
    out.admissible = true;
    return out;
}

namespace {

// One in-place step of the row vector u <- u P, returning the mass that fell
// off the window edge.
double step_row(const MarkovChainSpec& spec, const std::vector<double>& pr,
                const std::vector<double>& pl, std::vector<double>& u, std::vector<double>& v) {
    const int R = spec.radius;
    const size_t dim = static_cast<size_t>(2 * R + 1);
    double in = 0.0, out = 0.0;
    for (size_t t = 0; t < dim; ++t) {
        double s = 0.0;
        if (t > 0) s += u[t - 1] * pr[t - 1];       // from state below, moving up
        if (t + 1 < dim) s += u[t + 1] * pl[t + 1];  // from state above, moving down
        v[t] = s;
        in += u[t];
        out += s;
    }
    u.swap(v);
    return in - out;
}

}  // namespace

ReturnSeries return_probabilities(const MarkovChainSpec& spec, int steps) {
    validate(spec);
    if (steps < 1) throw ValidationError("return_probabilities: steps must be positive");
    if (spec.radius < steps + 10)
        throw ValidationError("return_probabilities: window too small, need radius >= steps + 10");
    const int R = spec.radius;
    const size_t dim = static_cast<size_t>(2 * R + 1);
    std::vector<double> pr(dim), pl(dim);
    for (long long i = -R; i <= R; ++i) {
        pr[static_cast<size_t>(i + R)] = i == 0 ? 0.5 : 0.5 * (1.0 - spec.epsilon / static_cast<double>(i));
        pl[static_cast<size_t>(i + R)] = i == 0 ? 0.5 : 0.5 * (1.0 + spec.epsilon / static_cast<double>(i));
    }
    std::vector<double> u(dim, 0.0), v(dim, 0.0);
    u[static_cast<size_t>(R)] = 1.0;
    ReturnSeries series;
    series.p00.reserve(static_cast<size_t>(steps));
    series.partial_sums.reserve(static_cast<size_t>(steps));
    double leaked = 0.0, sum = 0.0;
    for (int n = 1; n <= steps; ++n) {
        leaked += step_row(spec, pr, pl, u, v);
        const double p = u[static_cast<size_t>(R)];
        sum += p;
        series.p00.push_back(p);
        series.partial_sums.push_back(sum);
    }
    series.leaked_mass = leaked;
    return series;
}

ProductDiagnostic product_conservativity_diagnostic(const MarkovChainSpec& spec, int fold,
                                                    int steps) {
    validate(spec);
    if (!spec.squared)
        throw ValidationError("product diagnostic works on the squared kernel; set squared");
    if (fold < 1) throw ValidationError("product diagnostic: fold count must be positive");
    if (steps < 100) throw ValidationError("product diagnostic: need at least 100 steps");
    if (spec.radius < 2 * steps + 10)
        throw ValidationError("product diagnostic: window too small, need radius >= 2*steps + 10");

    const int R = spec.radius;
    const size_t dim = static_cast<size_t>(2 * R + 1);
    std::vector<double> pr(dim), pl(dim);
    for (long long i = -R; i <= R; ++i) {
        pr[static_cast<size_t>(i + R)] = i == 0 ? 0.5 : 0.5 * (1.0 - spec.epsilon / static_cast<double>(i));
        pl[static_cast<size_t>(i + R)] = i == 0 ? 0.5 : 0.5 * (1.0 + spec.epsilon / static_cast<double>(i));
    }
    std::vector<double> u(dim, 0.0), v(dim, 0.0);
    u[static_cast<size_t>(R)] = 1.0;

    ProductDiagnostic d;
    d.fold = fold;
    d.steps = steps;
    double leaked = 0.0, foldsum = 0.0;
    for (int n = 1; n <= steps; ++n) {
        leaked += step_row(spec, pr, pl, u, v);  // Q step = two P steps
        leaked += step_row(spec, pr, pl, u, v);
        const double q = u[static_cast<size_t>(R)];
        d.q00.push_back(q);
        foldsum += std::pow(q, fold);
        d.fold_partial_sums.push_back(foldsum);
    }
    d.leaked_mass = leaked;

    // least-squares slope of log q00 against log n over the back half
    const int lo = steps / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int n = lo; n <= steps; ++n) {
        const double x = std::log(static_cast<double>(n));
        const double y = std::log(d.q00[static_cast<size_t>(n - 1)]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / cnt;
    double rss = 0.0;
    for (int n = lo; n <= steps; ++n) {
        const double x = std::log(static_cast<double>(n));
        const double y = std::log(d.q00[static_cast<size_t>(n - 1)]);
        const double r = y - (slope * x + intercept);
        rss += r * r;
    }
    d.exponent = -slope;
    d.fit_residual = std::sqrt(rss / cnt);
    d.diverges = static_cast<double>(fold) * d.exponent <= 1.0;
    d.verdict = d.diverges ? "diverges" : "converges";
    return d;
}

McEstimate mc_return_estimate(const MarkovChainSpec& spec, const std::vector<int>& checkpoints,
                              uint64_t paths, uint64_t seed, int threads) {
    validate(spec);
    if (checkpoints.empty()) throw ValidationError("mc_return_estimate: no checkpoints");
    std::vector<int> cps = checkpoints;
    std::sort(cps.begin(), cps.end());
    const int maxstep = cps.back();
    if (maxstep < 1) throw ValidationError("mc_return_estimate: checkpoints must be positive");

    // Integer thresholds: move right iff the next raw draw is below
    // round(p_right * 2^64). |X| never exceeds the step count.
    const int span = maxstep + 2;
    std::vector<uint64_t> thr(static_cast<size_t>(2 * span + 1));
    for (int x = -span; x <= span; ++x) {
        const double p = x == 0 ? 0.5 : 0.5 * (1.0 - spec.epsilon / static_cast<double>(x));
        thr[static_cast<size_t>(x + span)] = static_cast<uint64_t>(std::ldexp(p, 64));
    }

    constexpr int SHARDS = 64;
    std::vector<std::vector<uint64_t>> counts(SHARDS,
                                              std::vector<uint64_t>(cps.size(), 0));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= SHARDS) return;
            const uint64_t count = paths / SHARDS +
                                   (static_cast<uint64_t>(c) < paths % SHARDS ? 1 : 0);
            std::mt19937_64 rng(seed ^ splitmix64(static_cast<uint64_t>(c) + 1));
            auto& mine = counts[static_cast<size_t>(c)];
            for (uint64_t p = 0; p < count; ++p) {
                int x = 0;
                size_t cp = 0;
                for (int s = 1; s <= maxstep; ++s) {
                    x += rng() < thr[static_cast<size_t>(x + span)] ? 1 : -1;
                    if (s == cps[cp]) {
                        if (x == 0) ++mine[cp];
                        if (++cp == cps.size()) break;
                    }
                }
            }
        }
    };
    int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (nthreads < 1) nthreads = 1;
    nthreads = std::min(nthreads, SHARDS);
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    McEstimate est;
    est.checkpoints = cps;
    est.paths = paths;
    est.seed = seed;
    for (size_t c = 0; c < cps.size(); ++c) {
        uint64_t total = 0;
        for (int s = 0; s < SHARDS; ++s) total += counts[static_cast<size_t>(s)][c];
        const double p = static_cast<double>(total) / static_cast<double>(paths);
        est.p_hat.push_back(p);
        est.std_err.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(paths)));
    }
    return est;
}

void stationary_csv(std::ostream& out, const StationaryVector& lam) {
    out << "i,lambda_i\n";
    for (long long i = -lam.radius; i <= lam.radius; ++i)
        out << i << ',' << fmt(lam.at(i)) << '\n';
}

void returns_csv(std::ostream& out, const ReturnSeries& s) {
    out << "n,p00_n,partial_sum\n";
    for (size_t n = 0; n < s.p00.size(); ++n)
        out << (n + 1) << ',' << fmt(s.p00[n]) << ',' << fmt(s.partial_sums[n]) << '\n';
}

void diagnostic_csv(std::ostream& out, const ProductDiagnostic& d) {
    out << "n,q00_n,q00k_n,partial_sum_k\n";
    for (size_t n = 0; n < d.q00.size(); ++n)
        out << (n + 1) << ',' << fmt(d.q00[n]) << ','
            << fmt(std::pow(d.q00[n], d.fold)) << ',' << fmt(d.fold_partial_sums[n]) << '\n';
}

std::string diagnostic_json(const ProductDiagnostic& d, int indent) {
    nlohmann::json j;
    j["fold"] = d.fold;
    j["steps"] = d.steps;
    j["exponent"] = d.exponent;
    j["fit_residual"] = d.fit_residual;
    j["fit_window"] = {d.steps / 2, d.steps};
    j["leaked_mass"] = d.leaked_mass;
    j["diverges"] = d.diverges;
    j["verdict"] = d.verdict;
    j["caveat"] = "finite-horizon heuristic: the verdict reports fold * exponent <= 1 for the "
                  "fitted decay exponent, not a proof";
    return j.dump(indent);
}

}  // namespace rankone::markov
