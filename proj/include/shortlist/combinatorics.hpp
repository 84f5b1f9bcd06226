#pragma once

#include <cstdint>

#include "shortlist/rational.hpp"

namespace shortlist {

/// C(n, k); zero when k < 0 or k > n. Requires n >= 0.
BigInt binomial(std::int64_t n, std::int64_t k);

BigInt factorial(std::int64_t n);

/// floor(sqrt(x)) computed exactly.
std::uint64_t isqrt(std::uint64_t x);

/// m(m+1)/2
constexpr std::int64_t triangular(std::int64_t m) { return m * (m + 1) / 2; }

struct TriangularIndex {
    std::int64_t m = 0;
    std::int64_t value = 0; // T_m

    friend bool operator==(const TriangularIndex&, const TriangularIndex&) = default;
};

/// The unique m with T_{m-1} < x <= T_m. Requires x >= 2.
TriangularIndex triangular_bracket(std::int64_t x);

/// Checks sum_{d=0}^{N} C(d,a) C(N-d,b) == C(N+1, a+b+1) by direct summation.
bool vandermonde_check(std::int64_t n, std::int64_t a, std::int64_t b);

} // namespace shortlist
