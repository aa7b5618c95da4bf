#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace rankone {

// Heights and descendant values grow doubly exponentially in the stage count,
// so all set arithmetic runs on unbounded integers. Census fractions and
// analytic bounds are exact rationals; floating point never enters a count.
using Int = mpz_class;
using Rat = mpq_class;

inline std::string to_string(const Int& v) { return v.get_str(); }

inline Int int_from_string(const std::string& s) {
    try {
        return Int(s, 10);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("not a decimal integer: '" + s + "'");
    }
}

// gmpxx lacks a long long constructor; route through signed long (LP64).
inline Int int_from_ll(long long v) {
    Int r;
    mpz_set_si(r.get_mpz_t(), static_cast<long>(v));
    return r;
}

inline Int pow2(unsigned long e) {
    Int r;
    mpz_ui_pow_ui(r.get_mpz_t(), 2, e);
    return r;
}

inline Rat make_rat(const Int& num, const Int& den) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

inline Rat make_rat(uint64_t num, uint64_t den) {
    Int n, d;
    mpz_set_ui(n.get_mpz_t(), num);
    mpz_set_ui(d.get_mpz_t(), den);
    return make_rat(n, d);
}

inline Int binomial(unsigned long n, unsigned long k) {
    Int r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

inline bool fits_uint64(const Int& v) {
    return sgn(v) >= 0 && mpz_fits_ulong_p(v.get_mpz_t()) != 0;
}

inline uint64_t to_uint64(const Int& v) { return mpz_get_ui(v.get_mpz_t()); }

// Derives well-separated per-shard seeds from a user seed.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// std::uniform_int_distribution is implementation-defined; these keep
// randomized paths byte-reproducible across standard libraries.
template <class Rng>
inline uint64_t bounded_u64(Rng& rng, uint64_t n) {
    return rng() % n;
}

template <class Rng>
inline double unit_double(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace rankone
