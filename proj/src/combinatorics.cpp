#include "shortlist/combinatorics.hpp"

#include <stdexcept>
#include <string>

namespace shortlist {

BigInt binomial(std::int64_t n, std::int64_t k) {
    if (n < 0) {
        throw std::invalid_argument("binomial: n must be non-negative, got " + std::to_string(n));
    }
    if (k < 0 || k > n) {
        return 0;
    }
    k = std::min(k, n - k);

    // result holds C(n-k+i, i) after step i. Dividing out gcd(result, i)
    // first keeps every intermediate no larger than the final value.
    BigInt result = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
        std::int64_t factor = n - k + i;
        std::int64_t divisor = i;
        BigInt g = boost::multiprecision::gcd(result, BigInt(divisor));
        result /= g;
        divisor /= static_cast<std::int64_t>(g);
        // divisor now divides factor exactly
        result *= factor / divisor;
    }
    return result;
}

BigInt factorial(std::int64_t n) {
    if (n < 0) {
        throw std::invalid_argument("factorial: n must be non-negative, got " + std::to_string(n));
    }
    BigInt result = 1;
    for (std::int64_t i = 2; i <= n; ++i) {
        result *= i;
    }
    return result;
}

std::uint64_t isqrt(std::uint64_t x) {
    if (x < 2) {
        return x;
    }
    // Newton iteration from an overestimate; monotonically decreasing.
    std::uint64_t r = (x >> 1) + 1;
    std::uint64_t next = (r + x / r) / 2;
    while (next < r) {
        r = next;
        next = (r + x / r) / 2;
    }
    return r;
}

TriangularIndex triangular_bracket(std::int64_t x) {
    if (x < 2) {
        throw std::invalid_argument("triangular_bracket: need N+1 >= 2, got " + std::to_string(x));
    }
    // T_m >= x  <=>  (2m+1)^2 >= 8x+1
    const auto disc = static_cast<std::uint64_t>(8 * x + 1);
    auto root = static_cast<std::int64_t>(isqrt(disc));
    std::int64_t m = (root - 1) / 2;
    while (triangular(m) < x) {
        ++m;
    }
    while (m > 1 && triangular(m - 1) >= x) {
        --m;
    }
    return {m, triangular(m)};
}

bool vandermonde_check(std::int64_t n, std::int64_t a, std::int64_t b) {
    BigInt lhs = 0;
    for (std::int64_t d = 0; d <= n; ++d) {
        lhs += binomial(d, a) * binomial(n - d, b);
    }
    return lhs == binomial(n + 1, a + b + 1);
}

} // namespace shortlist
