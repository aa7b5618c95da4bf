#include <rankone/certificates.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <random>
#include <thread>

namespace rankone {

namespace {

constexpr int BIT_NEG = 0;      // component pair is negative mixed
constexpr int BIT_PURE_L = 1;   // component pair is a lower pure pair
constexpr int BIT_SWAP = 2;     // n | x - y, x != y
constexpr int BIT_SWAP_KP = 3;  // same, at a stage counted by the swap bound

// Open-addressing set over u64 values (stored as v+1 so 0 marks empty).
class FlatSet64 {
public:
    void build(const std::vector<uint64_t>& vals) {
        size_t cap = 16;
        while (cap < vals.size() * 2) cap <<= 1;
        slots_.assign(cap, 0);
        mask_ = cap - 1;
        for (uint64_t v : vals) {
            size_t h = splitmix64(v) & mask_;
            while (slots_[h] != 0) h = (h + 1) & mask_;
            slots_[h] = v + 1;
        }
    }
    bool contains(uint64_t v) const {
        size_t h = splitmix64(v) & mask_;
        while (slots_[h] != 0) {
            if (slots_[h] == v + 1) return true;
            h = (h + 1) & mask_;
        }
        return false;
    }

private:
    std::vector<uint64_t> slots_;
    uint64_t mask_ = 0;
};

struct StageTable {
    int size = 0;
    const std::vector<Int>* elems = nullptr;
    std::vector<uint8_t> kind;  // PairKind per x*size + y
    std::vector<int> partner;
    int vw_lo = -1, vw_hi = -1;  // indices of the first upper pair
    uint64_t neg_ordered = 0, pure_ordered = 0, pure_lower_ordered = 0, swap_ordered = 0;
    std::vector<uint8_t> flags;  // census flags per x*size + y

    const Int& elem(int idx) const { return (*elems)[static_cast<size_t>(idx)]; }
};

struct CensusContext {
    const RankOneSpec* spec = nullptr;
    int i = 0, j = 0, nstages = 0;
    std::vector<StageTable> st;
    uint64_t dcount = 1;
    Int max_value;
    bool has_values = false;
    std::vector<Int> values;  // ascending descendant values
    bool fits64 = false;
    std::vector<uint64_t> values64;
    FlatSet64 set64;

    void build(const RankOneSpec& s, int i_, int j_) {
        if (i_ < 0 || j_ <= i_ || j_ > s.stage_count())
            throw ValidationError("certificate: need 0 <= i < j <= stage count");
        spec = &s;
        i = i_;
        j = j_;
        nstages = j - i;
        for (int k = i; k < j; ++k) {
            const HeightSet& h = s.height_sets[static_cast<size_t>(k)];
            // The constant-time pair classification is only sound under the
            // separation schedule; refuse to certify sets that violate it.
            if (h.M < 2 * s.max_descendant(0, k) + 2)
                throw SpecViolation("certificate: stage " + std::to_string(k) +
                                    " violates the separation schedule");
            StageTable t;
            t.size = h.size();
            t.elems = &h.elements;
            const PairLayout layout(h);
            t.partner.resize(static_cast<size_t>(t.size));
            for (int x = 0; x < t.size; ++x) t.partner[static_cast<size_t>(x)] = layout.partner(x);
            t.vw_lo = h.upper_pairs.front().first;
            t.vw_hi = h.upper_pairs.front().second;
            t.kind.resize(static_cast<size_t>(t.size) * static_cast<size_t>(t.size));
            for (int x = 0; x < t.size; ++x)
                for (int y = 0; y < t.size; ++y) {
                    const PairKind pk = layout.classify(x, y);
                    t.kind[static_cast<size_t>(x * t.size + y)] = static_cast<uint8_t>(pk);
                    if (pk == PairKind::NegativeMixed) ++t.neg_ordered;
                    if (pk == PairKind::PureUpper || pk == PairKind::PureLower) ++t.pure_ordered;
                    if (pk == PairKind::PureLower) ++t.pure_lower_ordered;
                }
            t.flags.assign(t.kind.size(), 0);
            st.push_back(std::move(t));
            if (dcount > (1ULL << 31) / static_cast<uint64_t>(h.size()))
                throw BudgetExceeded("certificate: descendant count exceeds 2^31");
            dcount *= static_cast<uint64_t>(h.size());
        }
        max_value = s.max_descendant(i, j);
    }

    void build_values() {
        if (has_values) return;
        DescendantTable t = descendant_table(*spec, i, j);
        values = std::move(t.values);
        has_values = true;
        fits64 = mpz_sizeinbase(max_value.get_mpz_t(), 2) <= 62;
        if (fits64) {
            values64.reserve(values.size());
            for (const Int& v : values) values64.push_back(to_uint64(v));
            set64.build(values64);
        }
    }

    bool contains(const Int& v) const {
        if (v < 0 || v > max_value) return false;
        if (fits64) return set64.contains(to_uint64(v));
        return std::binary_search(values.begin(), values.end(), v);
    }

    // index range [lo, hi) of values within [vlo, vhi]
    std::pair<size_t, size_t> value_range(const Int& vlo, const Int& vhi) const {
        const auto lo = std::lower_bound(values.begin(), values.end(), vlo);
        const auto hi = std::upper_bound(lo, values.end(), vhi);
        return {static_cast<size_t>(lo - values.begin()), static_cast<size_t>(hi - values.begin())};
    }

    void reconstruct(Int& out, const int* digits) const {
        out = 0;
        for (int k = 0; k < nstages; ++k) out += st[static_cast<size_t>(k)].elem(digits[k]);
    }
};

// Walks ordered pairs of component vectors as a mixed-radix counter (stage
// base_stage fastest) while maintaining how many stages carry each census
// flag. Amortized O(1) per step.
class PairOdometer {
public:
    PairOdometer(const CensusContext& ctx, uint64_t flat) : ctx_(&ctx) {
        const int n = ctx.nstages;
        xs_.resize(static_cast<size_t>(n));
        ys_.resize(static_cast<size_t>(n));
        flags_.resize(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            const auto& t = ctx.st[static_cast<size_t>(k)];
            const uint64_t sq = static_cast<uint64_t>(t.size) * static_cast<uint64_t>(t.size);
            const int digit = static_cast<int>(flat % sq);
            flat /= sq;
            xs_[static_cast<size_t>(k)] = digit / t.size;
            ys_[static_cast<size_t>(k)] = digit % t.size;
            const uint8_t f = t.flags[static_cast<size_t>(digit)];
            flags_[static_cast<size_t>(k)] = f;
            for (int b = 0; b < 4; ++b) counts_[b] += (f >> b) & 1;
        }
    }

    void advance() {
        for (size_t k = 0; k < xs_.size(); ++k) {
            const auto& t = ctx_->st[k];
            int x = xs_[k], y = ys_[k] + 1;
            if (y == t.size) {
                y = 0;
                if (++x == t.size) x = 0;
            }
            xs_[k] = x;
            ys_[k] = y;
            const uint8_t nf = t.flags[static_cast<size_t>(x * t.size + y)];
            const uint8_t of = flags_[k];
            if (nf != of) {
                for (int b = 0; b < 4; ++b) counts_[b] += ((nf >> b) & 1) - ((of >> b) & 1);
                flags_[k] = nf;
            }
            if (x != 0 || y != 0) return;  // no carry
        }
    }

    int count(int bit) const { return counts_[bit]; }
    const int* xs() const { return xs_.data(); }
    const int* ys() const { return ys_.data(); }
    int first_stage_with(uint8_t mask) const {
        for (size_t k = 0; k < flags_.size(); ++k)
            if (flags_[k] & mask) return static_cast<int>(k);
        return -1;
    }

private:
    const CensusContext* ctx_;
    std::vector<int> xs_, ys_;
    std::vector<uint8_t> flags_;
    int counts_[4] = {0, 0, 0, 0};
};

struct ChunkTally {
    uint64_t satisfied = 0;
    uint64_t constructive = 0;
    uint64_t witness_checks = 0;
};

int resolve_threads(const CensusOptions& opts) {
    if (opts.threads > 0) return opts.threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Fixed chunk grid regardless of thread count, aggregated in chunk order, so
// counts cannot depend on scheduling.
template <class Body>
ChunkTally run_chunks(uint64_t total, int threads, const Body& body) {
    const int nchunks = total < 4096 ? 1 : 128;
    const uint64_t per = total / static_cast<uint64_t>(nchunks);
    const uint64_t extra = total % static_cast<uint64_t>(nchunks);
    std::vector<ChunkTally> tallies(static_cast<size_t>(nchunks));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(nchunks));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= nchunks) return;
            const uint64_t begin = static_cast<uint64_t>(c) * per +
                                   std::min<uint64_t>(static_cast<uint64_t>(c), extra);
            const uint64_t end = begin + per + (static_cast<uint64_t>(c) < extra ? 1 : 0);
            try {
                body(begin, end, tallies[static_cast<size_t>(c)]);
            } catch (...) {
                errors[static_cast<size_t>(c)] = std::current_exception();
            }
        }
    };
    const int nthreads = std::max(1, std::min(threads, nchunks));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nthreads - 1));
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    ChunkTally out;
    for (const auto& t : tallies) {
        out.satisfied += t.satisfied;
        out.constructive += t.constructive;
        out.witness_checks += t.witness_checks;
    }
    return out;
}

uint64_t checked_pair_total(const CensusContext& ctx, const CensusOptions& opts, int j) {
    const unsigned __int128 sq =
        static_cast<unsigned __int128>(ctx.dcount) * static_cast<unsigned __int128>(ctx.dcount);
    if (sq > opts.pair_budget)
        throw BudgetExceeded("pair census at j=" + std::to_string(j) + " needs " +
                             std::to_string(ctx.dcount) + "^2 pairs, over budget " +
                             std::to_string(opts.pair_budget));
    return static_cast<uint64_t>(sq);
}

// Scratch big integers reused across a chunk.
struct Scratch {
    Int a, a2, d, d2, t1, t2, base;
};

void reconstruct_pair(const CensusContext& ctx, const int* xs, const int* ys, Scratch& s) {
    ctx.reconstruct(s.a, xs);
    ctx.reconstruct(s.a2, ys);
}

// --- txt census -------------------------------------------------------------

void verify_txt_witness(const CensusContext& ctx, const int* xs, const int* ys, const Int& b,
                        int bsmall, Scratch& s) {
    reconstruct_pair(ctx, xs, ys, s);
    s.d = s.a;
    s.d2 = s.a2;
    int flips = 0;
    for (int k = 0; k < ctx.nstages && flips < bsmall; ++k) {
        const auto& t = ctx.st[static_cast<size_t>(k)];
        if (t.kind[static_cast<size_t>(xs[k] * t.size + ys[k])] ==
            static_cast<uint8_t>(PairKind::NegativeMixed)) {
            s.d += t.elem(t.partner[static_cast<size_t>(ys[k])]) - t.elem(xs[k]);
            s.d2 += t.elem(t.partner[static_cast<size_t>(xs[k])]) - t.elem(ys[k]);
            ++flips;
        }
    }
    s.t1 = s.a - s.d;
    s.t2 = s.a2 - s.d2 - b;
    if (s.t1 != s.t2)
        throw SpecViolation("txt census: constructive witness fails a - d = a' - d' - b");
}

bool txt_fallback(const CensusContext& ctx, const int* xs, const int* ys, const Int& b,
                  Scratch& s) {
    if (b > 2 * ctx.max_value) return false;  // every candidate d' would be negative
    reconstruct_pair(ctx, xs, ys, s);
    s.base = s.a2 - s.a - b;  // candidate d' = base + d
    // need d in D and base + d in [0, max]
    s.t1 = s.base >= 0 ? Int(0) : Int(-s.base);
    s.t2 = ctx.max_value - s.base;
    if (s.t2 > ctx.max_value) s.t2 = ctx.max_value;
    const auto [lo, hi] = ctx.value_range(s.t1, s.t2);
    if (ctx.fits64) {
        const __int128 base = mpz_fits_slong_p(s.base.get_mpz_t())
                                  ? static_cast<__int128>(mpz_get_si(s.base.get_mpz_t()))
                                  : (s.base > 0 ? static_cast<__int128>(to_uint64(s.base))
                                                : -static_cast<__int128>(to_uint64(Int(-s.base))));
        for (size_t idx = lo; idx < hi; ++idx) {
            const uint64_t cand = static_cast<uint64_t>(base + ctx.values64[idx]);
            if (ctx.set64.contains(cand)) return true;
        }
        return false;
    }
    for (size_t idx = lo; idx < hi; ++idx) {
        s.t1 = s.base + ctx.values[idx];
        if (ctx.contains(s.t1)) return true;
    }
    return false;
}

// --- inverse census ---------------------------------------------------------

void verify_swap_witness(const CensusContext& ctx, const int* xs, const int* ys, int k,
                         long long n, Scratch& s) {
    reconstruct_pair(ctx, xs, ys, s);
    const auto& t = ctx.st[static_cast<size_t>(k)];
    s.d = s.a - t.elem(xs[k]) + t.elem(ys[k]);
    s.d2 = s.a2 - t.elem(ys[k]) + t.elem(xs[k]);
    s.t1 = s.a - s.d;
    s.t2 = s.d2 - s.a2;
    if (s.t1 != s.t2 || s.t1 == 0 || !mpz_divisible_ui_p(s.t1.get_mpz_t(), static_cast<unsigned long>(n > 0 ? n : -n)))
        throw SpecViolation("inverse census: swap witness fails a - d = d' - a' in nZ \\ {0}");
}

bool inverse_fallback(const CensusContext& ctx, const int* xs, const int* ys, long long n,
                      Scratch& s) {
    reconstruct_pair(ctx, xs, ys, s);
    const unsigned long an = static_cast<unsigned long>(n > 0 ? n : -n);
    // need d in D, t = a - d != 0, n | t, and a' + t = a + a' - d in [0, max]
    s.base = s.a + s.a2;
    s.t1 = s.base - ctx.max_value;
    if (s.t1 < 0) s.t1 = 0;
    s.t2 = s.base;
    if (s.t2 > ctx.max_value) s.t2 = ctx.max_value;
    const auto [lo, hi] = ctx.value_range(s.t1, s.t2);
    if (ctx.fits64) {
        const uint64_t a64 = to_uint64(s.a);
        const uint64_t sum64 = to_uint64(s.base);
        for (size_t idx = lo; idx < hi; ++idx) {
            const uint64_t dv = ctx.values64[idx];
            if (dv == a64) continue;
            const uint64_t diff = dv > a64 ? dv - a64 : a64 - dv;
            if (diff % an != 0) continue;
            if (ctx.set64.contains(sum64 - dv)) return true;
        }
        return false;
    }
    for (size_t idx = lo; idx < hi; ++idx) {
        s.t1 = s.a - ctx.values[idx];
        if (s.t1 == 0) continue;
        if (!mpz_divisible_ui_p(s.t1.get_mpz_t(), an)) continue;
        s.t2 = s.base - ctx.values[idx];
        if (ctx.contains(s.t2)) return true;
    }
    return false;
}

// --- obstruction census -----------------------------------------------------

// Builds the witness for a pair with a lower pure component at stage k and
// checks both the sum identity and the pure-pair split at the largest
// differing stage (which is k, the only differing one).
void verify_obstruction_witness(const CensusContext& ctx, const int* xs, const int* ys, int k,
                                Scratch& s) {
    const auto& t = ctx.st[static_cast<size_t>(k)];
    reconstruct_pair(ctx, xs, ys, s);
    s.d = s.a - t.elem(xs[k]) + t.elem(t.vw_lo);
    s.d2 = s.a2 - t.elem(ys[k]) + t.elem(t.vw_hi);
    s.t1 = s.a + s.a2;
    s.t2 = s.d + s.d2 + 1;
    if (s.t1 != s.t2)
        throw SpecViolation("obstruction census: witness fails a + a' = d + d' + 1");
    const uint8_t ka = t.kind[static_cast<size_t>(xs[k] * t.size + ys[k])];
    const uint8_t kd = t.kind[static_cast<size_t>(t.vw_lo * t.size + t.vw_hi)];
    if (ka != static_cast<uint8_t>(PairKind::PureLower) ||
        kd != static_cast<uint8_t>(PairKind::PureUpper))
        throw SpecViolation("obstruction census: witness stage is not a lower/upper pure split");
}

// --- bound formulas ---------------------------------------------------------

Rat txt_constructive_bound(const CensusContext& ctx, const Int& b) {
    const int m = ctx.nstages;
    if (b == 0) return Rat(1);
    if (b > m) return Rat(0);
    const int bs = static_cast<int>(b.get_si());
    // exact distribution of the number of negative mixed stages, truncated at b
    std::vector<Rat> dist(static_cast<size_t>(bs), Rat(0));
    dist[0] = 1;
    for (int k = 0; k < m; ++k) {
        const auto& t = ctx.st[static_cast<size_t>(k)];
        const Rat p = make_rat(t.neg_ordered,
                               static_cast<uint64_t>(t.size) * static_cast<uint64_t>(t.size));
        const Rat q = Rat(1) - p;
        for (int v = bs - 1; v >= 1; --v) dist[static_cast<size_t>(v)] =
            dist[static_cast<size_t>(v)] * q + dist[static_cast<size_t>(v - 1)] * p;
        dist[0] *= q;
    }
    Rat below(0);
    for (const Rat& r : dist) below += r;
    Rat bound = Rat(1) - below;
    bound.canonicalize();
    return bound;
}

Rat product_complement_bound(const CensusContext& ctx, int from_stage,
                             uint64_t StageTable::*member) {
    Rat prod(1);
    for (int k = from_stage; k < ctx.nstages; ++k) {
        const auto& t = ctx.st[static_cast<size_t>(k)];
        const Rat f = make_rat(t.*member,
                               static_cast<uint64_t>(t.size) * static_cast<uint64_t>(t.size));
        prod *= Rat(1) - f;
    }
    Rat bound = Rat(1) - prod;
    bound.canonicalize();
    return bound;
}

// --- sampled mode -----------------------------------------------------------

constexpr int SAMPLE_SHARDS = 64;

// eval(xs, ys) -> {constructive, satisfied, witness_checked}
template <class Eval>
ChunkTally run_sampled(const CensusContext& ctx, const CensusOptions& opts, const Eval& eval) {
    const uint64_t total = *opts.sample_count;
    std::vector<ChunkTally> tallies(SAMPLE_SHARDS);
    std::vector<std::exception_ptr> errors(SAMPLE_SHARDS);
    std::atomic<int> next{0};
    auto worker = [&]() {
        std::vector<int> xs(static_cast<size_t>(ctx.nstages)),
            ys(static_cast<size_t>(ctx.nstages));
        Scratch s;
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= SAMPLE_SHARDS) return;
            const uint64_t count = total / SAMPLE_SHARDS +
                                   (static_cast<uint64_t>(c) < total % SAMPLE_SHARDS ? 1 : 0);
            std::mt19937_64 rng(opts.seed ^ splitmix64(static_cast<uint64_t>(c) + 1));
            try {
                for (uint64_t p = 0; p < count; ++p) {
                    for (int k = 0; k < ctx.nstages; ++k) {
                        const uint64_t sz =
                            static_cast<uint64_t>(ctx.st[static_cast<size_t>(k)].size);
                        xs[static_cast<size_t>(k)] = static_cast<int>(bounded_u64(rng, sz));
                        ys[static_cast<size_t>(k)] = static_cast<int>(bounded_u64(rng, sz));
                    }
                    eval(xs.data(), ys.data(), s, tallies[static_cast<size_t>(c)]);
                }
            } catch (...) {
                errors[static_cast<size_t>(c)] = std::current_exception();
            }
        }
    };
    const int nthreads = std::max(1, std::min(resolve_threads(opts), SAMPLE_SHARDS));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    ChunkTally out;
    for (const auto& t : tallies) {
        out.satisfied += t.satisfied;
        out.constructive += t.constructive;
        out.witness_checks += t.witness_checks;
    }
    return out;
}

uint64_t now_ms() {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now().time_since_epoch())
                                     .count());
}

void finalize_report(CertificateReport& rep, const ChunkTally& tally, uint64_t total,
                     const CensusOptions& opts, uint64_t t0) {
    rep.total = total;
    rep.satisfied = tally.satisfied;
    rep.constructive = tally.constructive;
    rep.witness_checks = tally.witness_checks;
    rep.fraction = total ? make_rat(tally.satisfied, total) : Rat(0);
    rep.constructive_fraction = total ? make_rat(tally.constructive, total) : Rat(0);
    rep.estimate = opts.sample_count.has_value();
    rep.timing_reported = opts.report_timing;
    rep.elapsed_ms = now_ms() - t0;
}

}  // namespace

CertificateReport certify_txt(const RankOneSpec& spec, int i, int j, const Int& b,
                              const CensusOptions& opts) {
    const uint64_t t0 = now_ms();
    if (b < 0) throw ValidationError("certify_txt: b must be nonnegative");
    CensusContext ctx;
    ctx.build(spec, i, j);
    for (auto& t : ctx.st)
        for (size_t c = 0; c < t.kind.size(); ++c)
            if (t.kind[c] == static_cast<uint8_t>(PairKind::NegativeMixed))
                t.flags[c] |= 1 << BIT_NEG;
    ctx.build_values();

    const int m = ctx.nstages;
    const int bsmall = (b > m) ? m + 1 : static_cast<int>(b.get_si());

    CertificateReport rep;
    rep.kind = "txt";
    rep.i = i;
    rep.j = j;
    rep.b = b;
    rep.bound_kind = "lower";
    rep.analytic_bound = txt_constructive_bound(ctx, b);

    auto eval = [&](const int* xs, const int* ys, int negcount, Scratch& s, ChunkTally& tally) {
        const bool cons = negcount >= bsmall;
        bool sat = cons;
        if (cons) {
            ++tally.constructive;
            if (opts.verify_witnesses && bsmall > 0) {
                verify_txt_witness(ctx, xs, ys, b, bsmall, s);
                ++tally.witness_checks;
            }
        } else {
            sat = txt_fallback(ctx, xs, ys, b, s);
        }
        if (sat) ++tally.satisfied;
    };

    ChunkTally tally;
    uint64_t total;
    if (opts.sample_count) {
        total = *opts.sample_count;
        tally = run_sampled(ctx, opts, [&](const int* xs, const int* ys, Scratch& s, ChunkTally& t) {
            int neg = 0;
            for (int k = 0; k < ctx.nstages; ++k) {
                const auto& tk = ctx.st[static_cast<size_t>(k)];
                if (tk.flags[static_cast<size_t>(xs[k] * tk.size + ys[k])] & (1 << BIT_NEG)) ++neg;
            }
            eval(xs, ys, neg, s, t);
        });
    } else {
        total = checked_pair_total(ctx, opts, j);
        tally = run_chunks(total, resolve_threads(opts),
                           [&](uint64_t begin, uint64_t end, ChunkTally& t) {
                               PairOdometer od(ctx, begin);
                               Scratch s;
                               for (uint64_t p = begin; p < end; ++p) {
                                   if (p != begin) od.advance();
                                   eval(od.xs(), od.ys(), od.count(BIT_NEG), s, t);
                               }
                           });
    }
    finalize_report(rep, tally, total, opts, t0);
    rep.bound_ok = !rep.estimate ? (rep.constructive_fraction >= rep.analytic_bound &&
                                    rep.satisfied >= rep.constructive)
                                 : true;
    return rep;
}

CertificateReport certify_u_obstruction(const RankOneSpec& spec, int i, int j,
                                        const CensusOptions& opts) {
    const uint64_t t0 = now_ms();
    CensusContext ctx;
    ctx.build(spec, i, j);
    for (auto& t : ctx.st)
        for (size_t c = 0; c < t.kind.size(); ++c)
            if (t.kind[c] == static_cast<uint8_t>(PairKind::PureLower))
                t.flags[c] |= 1 << BIT_PURE_L;

    CertificateReport rep;
    rep.kind = "u-obstruction";
    rep.i = i;
    rep.j = j;
    rep.bound_kind = "upper";
    rep.analytic_bound = product_complement_bound(ctx, 0, &StageTable::pure_ordered);

    auto eval = [&](const int* xs, const int* ys, int first_lpure, Scratch& s, ChunkTally& tally) {
        if (first_lpure < 0) return;
        ++tally.satisfied;
        ++tally.constructive;
        if (opts.verify_witnesses) {
            verify_obstruction_witness(ctx, xs, ys, first_lpure, s);
            ++tally.witness_checks;
        }
    };

    ChunkTally tally;
    uint64_t total;
    if (opts.sample_count) {
        total = *opts.sample_count;
        tally = run_sampled(ctx, opts, [&](const int* xs, const int* ys, Scratch& s, ChunkTally& t) {
            int first = -1;
            for (int k = 0; k < ctx.nstages && first < 0; ++k) {
                const auto& tk = ctx.st[static_cast<size_t>(k)];
                if (tk.flags[static_cast<size_t>(xs[k] * tk.size + ys[k])] & (1 << BIT_PURE_L))
                    first = k;
            }
            eval(xs, ys, first, s, t);
        });
    } else {
        total = checked_pair_total(ctx, opts, j);
        tally = run_chunks(total, resolve_threads(opts),
                           [&](uint64_t begin, uint64_t end, ChunkTally& t) {
                               PairOdometer od(ctx, begin);
                               Scratch s;
                               for (uint64_t p = begin; p < end; ++p) {
                                   if (p != begin) od.advance();
                                   if (od.count(BIT_PURE_L) > 0)
                                       eval(od.xs(), od.ys(),
                                            od.first_stage_with(1 << BIT_PURE_L), s, t);
                               }
                           });
    }
    finalize_report(rep, tally, total, opts, t0);
    rep.bound_ok = rep.estimate || rep.fraction <= rep.analytic_bound;
    return rep;
}

CertificateReport certify_conservative_inverse(const RankOneSpec& spec, int i, int j, long long n,
                                               const CensusOptions& opts) {
    const uint64_t t0 = now_ms();
    if (n == 0) throw ValidationError("certify_conservative_inverse: n must be nonzero");
    if (n == std::numeric_limits<long long>::min())
        throw ValidationError("certify_conservative_inverse: |n| out of range");
    const unsigned long an = static_cast<unsigned long>(n > 0 ? n : -n);

    CensusContext ctx;
    ctx.build(spec, i, j);
    ctx.build_values();

    // first stage where the accumulated descendant count clears 2 n^2, so the
    // pigeonhole estimate leaves room below the diagonal
    const Int threshold = 2 * Int(static_cast<unsigned long>(an)) * Int(static_cast<unsigned long>(an));
    int kprime = ctx.nstages;
    {
        Int acc = 1;
        for (int k = 0; k < ctx.nstages; ++k) {
            if (acc > threshold) {
                kprime = k;
                break;
            }
            acc *= ctx.st[static_cast<size_t>(k)].size;
        }
    }

    CertificateReport rep;
    rep.kind = "inverse-conservative";
    rep.i = i;
    rep.j = j;
    rep.n = n;
    rep.bound_kind = "lower";
    rep.kprime = kprime + i;

    for (int k = 0; k < ctx.nstages; ++k) {
        auto& t = ctx.st[static_cast<size_t>(k)];
        std::vector<unsigned long> res(static_cast<size_t>(t.size));
        for (int x = 0; x < t.size; ++x)
            res[static_cast<size_t>(x)] = mpz_fdiv_ui(t.elem(x).get_mpz_t(), an);
        for (int x = 0; x < t.size; ++x)
            for (int y = 0; y < t.size; ++y)
                if (x != y && res[static_cast<size_t>(x)] == res[static_cast<size_t>(y)]) {
                    t.flags[static_cast<size_t>(x * t.size + y)] |= 1 << BIT_SWAP;
                    if (k >= kprime)
                        t.flags[static_cast<size_t>(x * t.size + y)] |= 1 << BIT_SWAP_KP;
                    ++t.swap_ordered;
                }
        // pigeonhole on residue classes: pairs with equal residue (diagonal
        // included) are at least |H|^2 / n^2
        const Int lhs = (Int(t.swap_ordered) + t.size) * Int(static_cast<unsigned long>(an)) *
                        Int(static_cast<unsigned long>(an));
        if (lhs < Int(t.size) * Int(t.size))
            throw SpecViolation("inverse census: residue pigeonhole bound failed at stage " +
                                std::to_string(k + i));
        rep.stage_swap_counts.push_back(t.swap_ordered);
    }
    rep.analytic_bound = product_complement_bound(ctx, kprime, &StageTable::swap_ordered);

    auto eval = [&](const int* xs, const int* ys, bool swap_any, bool swap_kp, int first_swap,
                    Scratch& s, ChunkTally& tally) {
        if (swap_kp) ++tally.constructive;
        bool sat = swap_any;
        if (swap_any) {
            if (opts.verify_witnesses) {
                verify_swap_witness(ctx, xs, ys, first_swap, n, s);
                ++tally.witness_checks;
            }
        } else {
            sat = inverse_fallback(ctx, xs, ys, n, s);
        }
        if (sat) ++tally.satisfied;
    };

    ChunkTally tally;
    uint64_t total;
    if (opts.sample_count) {
        total = *opts.sample_count;
        tally = run_sampled(ctx, opts, [&](const int* xs, const int* ys, Scratch& s, ChunkTally& t) {
            bool any = false, kp = false;
            int first = -1;
            for (int k = 0; k < ctx.nstages; ++k) {
                const auto& tk = ctx.st[static_cast<size_t>(k)];
                const uint8_t f = tk.flags[static_cast<size_t>(xs[k] * tk.size + ys[k])];
                if (f & (1 << BIT_SWAP)) {
                    if (first < 0) first = k;
                    any = true;
                    if (f & (1 << BIT_SWAP_KP)) kp = true;
                }
            }
            eval(xs, ys, any, kp, first, s, t);
        });
    } else {
        total = checked_pair_total(ctx, opts, j);
        tally = run_chunks(total, resolve_threads(opts),
                           [&](uint64_t begin, uint64_t end, ChunkTally& t) {
                               PairOdometer od(ctx, begin);
                               Scratch s;
                               for (uint64_t p = begin; p < end; ++p) {
                                   if (p != begin) od.advance();
                                   const bool any = od.count(BIT_SWAP) > 0;
                                   eval(od.xs(), od.ys(), any, od.count(BIT_SWAP_KP) > 0,
                                        any ? od.first_stage_with(1 << BIT_SWAP) : -1, s, t);
                               }
                           });
    }
    finalize_report(rep, tally, total, opts, t0);
    rep.bound_ok = rep.estimate || (rep.constructive_fraction >= rep.analytic_bound &&
                                    rep.satisfied >= rep.constructive);
    return rep;
}

CertificateReport certify_general_product(const RankOneSpec& spec, int i, int j,
                                          const std::vector<long long>& alphas,
                                          const std::vector<Int>& bs,
                                          const CensusOptions& opts) {
    const uint64_t t0 = now_ms();
    const size_t k = alphas.size();
    if (k < 2) throw ValidationError("certify_general_product: need at least 2 factors");
    if (bs.size() != k)
        throw ValidationError("certify_general_product: alphas and bs must have equal length");
    for (long long a : alphas)
        if (a == 0) throw ValidationError("certify_general_product: alphas must be nonzero");

    CensusContext ctx;
    ctx.build(spec, i, j);
    ctx.build_values();

    uint64_t total = 1;
    if (!opts.sample_count) {
        for (size_t l = 0; l < k; ++l) {
            if (ctx.dcount != 0 && total > opts.tuple_budget / ctx.dcount)
                throw BudgetExceeded("tuple census at j=" + std::to_string(j) + " needs " +
                                     std::to_string(ctx.dcount) + "^" + std::to_string(k) +
                                     " tuples, over budget " + std::to_string(opts.tuple_budget));
            total *= ctx.dcount;
        }
    }

    CertificateReport rep;
    rep.kind = "general";
    rep.i = i;
    rep.j = j;
    rep.alphas = alphas;
    rep.bs = bs;
    rep.bound_kind = "none";

    const auto& vals = ctx.values;
    auto sat_tuple = [&](const std::vector<uint64_t>& idx) -> bool {
        // m-window keeping every coordinate's candidate inside [0, max]
        Int mlo, mhi, num;
        bool have = false;
        for (size_t l = 0; l < k; ++l) {
            const Int& al = vals[idx[l]];
            Int top = al - bs[l];            // alpha_l * m <= top
            Int bot = top - ctx.max_value;   // alpha_l * m >= bot
            Int lo, hi;
            const Int alpha = int_from_ll(alphas[l]);
            if (alphas[l] > 0) {
                mpz_cdiv_q(lo.get_mpz_t(), bot.get_mpz_t(), alpha.get_mpz_t());
                mpz_fdiv_q(hi.get_mpz_t(), top.get_mpz_t(), alpha.get_mpz_t());
            } else {
                mpz_cdiv_q(lo.get_mpz_t(), top.get_mpz_t(), alpha.get_mpz_t());
                mpz_fdiv_q(hi.get_mpz_t(), bot.get_mpz_t(), alpha.get_mpz_t());
            }
            if (!have) {
                mlo = lo;
                mhi = hi;
                have = true;
            } else {
                if (lo > mlo) mlo = lo;
                if (hi < mhi) mhi = hi;
            }
            if (mlo > mhi) return false;
        }
        // candidate d_0 values over the m-window
        const Int alpha0 = int_from_ll(alphas[0]);
        Int v1 = vals[idx[0]] - bs[0] - alpha0 * mlo;
        Int v2 = vals[idx[0]] - bs[0] - alpha0 * mhi;
        if (v1 > v2) std::swap(v1, v2);
        if (v1 < 0) v1 = 0;
        if (v2 > ctx.max_value) v2 = ctx.max_value;
        const auto [lo0, hi0] = ctx.value_range(v1, v2);
        Int m, target;
        for (size_t c = lo0; c < hi0; ++c) {
            num = vals[idx[0]] - bs[0] - vals[c];
            if (!mpz_divisible_p(num.get_mpz_t(), alpha0.get_mpz_t())) continue;
            mpz_divexact(m.get_mpz_t(), num.get_mpz_t(), alpha0.get_mpz_t());
            if (m == 0 || m < mlo || m > mhi) continue;
            bool ok = true;
            for (size_t l = 1; l < k && ok; ++l) {
                target = vals[idx[l]] - bs[l] - int_from_ll(alphas[l]) * m;
                ok = ctx.contains(target);
            }
            if (ok) return true;
        }
        return false;
    };

    ChunkTally tally;
    if (opts.sample_count) {
        total = *opts.sample_count;
        std::vector<ChunkTally> tallies(SAMPLE_SHARDS);
        std::atomic<int> next{0};
        std::vector<std::exception_ptr> errors(SAMPLE_SHARDS);
        auto worker = [&]() {
            std::vector<uint64_t> idx(k);
            for (;;) {
                const int c = next.fetch_add(1);
                if (c >= SAMPLE_SHARDS) return;
                const uint64_t count = total / SAMPLE_SHARDS +
                                       (static_cast<uint64_t>(c) < total % SAMPLE_SHARDS ? 1 : 0);
                std::mt19937_64 rng(opts.seed ^ splitmix64(static_cast<uint64_t>(c) + 1));
                try {
                    for (uint64_t p = 0; p < count; ++p) {
                        for (size_t l = 0; l < k; ++l) idx[l] = bounded_u64(rng, ctx.dcount);
                        if (sat_tuple(idx)) ++tallies[static_cast<size_t>(c)].satisfied;
                    }
                } catch (...) {
                    errors[static_cast<size_t>(c)] = std::current_exception();
                }
            }
        };
        const int nthreads = std::max(1, std::min(resolve_threads(opts), SAMPLE_SHARDS));
        std::vector<std::thread> pool;
        for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (const auto& t : tallies) tally.satisfied += t.satisfied;
    } else {
        tally = run_chunks(total, resolve_threads(opts),
                           [&](uint64_t begin, uint64_t end, ChunkTally& t) {
                               std::vector<uint64_t> idx(k);
                               uint64_t flat = begin;
                               for (size_t l = 0; l < k; ++l) {
                                   idx[l] = flat % ctx.dcount;
                                   flat /= ctx.dcount;
                               }
                               for (uint64_t p = begin; p < end; ++p) {
                                   if (p != begin) {
                                       for (size_t l = 0; l < k; ++l) {
                                           if (++idx[l] < ctx.dcount) break;
                                           idx[l] = 0;
                                       }
                                   }
                                   if (sat_tuple(idx)) ++t.satisfied;
                               }
                           });
    }
    finalize_report(rep, tally, total, opts, t0);
    rep.constructive = 0;
    rep.constructive_fraction = Rat(0);
    return rep;
}

int lemma_mixed_witness(const RankOneSpec& spec, const Int& a, const Int& a2, const Int& d,
                        const Int& d2, int i, int j) {
    if (a + a2 != d + d2 + 1)
        throw ValidationError("lemma_mixed_witness: requires a + a' = d + d' + 1");
    const Descendant da = decompose(spec, a, i, j);
    const Descendant da2 = decompose(spec, a2, i, j);
    const Descendant dd = decompose(spec, d, i, j);
    const Descendant dd2 = decompose(spec, d2, i, j);

    for (int k = j - 1; k >= i; --k) {
        const HeightSet& h = spec.height_sets[static_cast<size_t>(k)];
        const size_t t = static_cast<size_t>(k - i);
        const Int sa = h.elements[static_cast<size_t>(da.components[t])] +
                       h.elements[static_cast<size_t>(da2.components[t])];
        const Int sd = h.elements[static_cast<size_t>(dd.components[t])] +
                       h.elements[static_cast<size_t>(dd2.components[t])];
        if (sa == sd) continue;
        const PairLayout layout(h);
        const PairKind ka = layout.classify(da.components[t], da2.components[t]);
        const PairKind kd = layout.classify(dd.components[t], dd2.components[t]);
        const bool a_pure = ka == PairKind::PureUpper || ka == PairKind::PureLower;
        const bool d_pure = kd == PairKind::PureUpper || kd == PairKind::PureLower;
        const bool split =
            (ka == PairKind::PureLower && kd == PairKind::PureUpper && sa == sd + 1) ||
            (ka == PairKind::PureUpper && kd == PairKind::PureLower && sa == sd - 1);
        if (!a_pure || !d_pure || !split)
            throw SpecViolation(
                "lemma_mixed_witness: largest differing stage is not an upper/lower pure split "
                "(separation schedule violated)");
        return k;
    }
    throw SpecViolation("lemma_mixed_witness: no differing stage found");
}

// --- report emission ---------------------------------------------------------

std::string report_csv_header() {
    return "j,total,satisfied,fraction_num,fraction_den,bound_num,bound_den,bound_kind,elapsed_ms";
}

std::string report_csv_row(const CertificateReport& r) {
    std::string row;
    row += std::to_string(r.j);
    row += ',' + std::to_string(r.total);
    row += ',' + std::to_string(r.satisfied);
    row += ',' + Int(r.fraction.get_num()).get_str();
    row += ',' + Int(r.fraction.get_den()).get_str();
    row += ',' + Int(r.analytic_bound.get_num()).get_str();
    row += ',' + Int(r.analytic_bound.get_den()).get_str();
    row += ',' + r.bound_kind;
    row += ',' + std::to_string(r.timing_reported ? r.elapsed_ms : 0);
    return row;
}

std::string report_json(const CertificateReport& r, int indent) {
    nlohmann::json j;
    j["kind"] = r.kind;
    j["i"] = r.i;
    j["j"] = r.j;
    j["b"] = to_string(r.b);
    j["n"] = r.n;
    j["alphas"] = r.alphas;
    auto bsj = nlohmann::json::array();
    for (const Int& b : r.bs) bsj.push_back(to_string(b));
    j["bs"] = std::move(bsj);
    j["total"] = r.total;
    j["satisfied"] = r.satisfied;
    j["constructive"] = r.constructive;
    j["fraction"] = {{"num", Int(r.fraction.get_num()).get_str()},
                     {"den", Int(r.fraction.get_den()).get_str()}};
    j["constructive_fraction"] = {{"num", Int(r.constructive_fraction.get_num()).get_str()},
                                  {"den", Int(r.constructive_fraction.get_den()).get_str()}};
    j["analytic_bound"] = {{"num", Int(r.analytic_bound.get_num()).get_str()},
                           {"den", Int(r.analytic_bound.get_den()).get_str()}};
    j["bound_kind"] = r.bound_kind;
    j["bound_ok"] = r.bound_ok;
    j["estimate"] = r.estimate;
    if (r.kind == "inverse-conservative") {
        j["kprime"] = r.kprime;
        j["stage_swap_counts"] = r.stage_swap_counts;
    }
    j["witness_checks"] = r.witness_checks;
    j["elapsed_ms"] = r.timing_reported ? r.elapsed_ms : 0;
    return j.dump(indent);
}

}  // namespace rankone
