#include "shortlist/two_party.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shortlist/combinatorics.hpp"

namespace shortlist {

void TwoPartyParams::validate() const {
    if (n < 1) {
        throw std::invalid_argument("menu size must be at least 1, got " + std::to_string(n));
    }
    if (k < 1 || k > n) {
        throw std::invalid_argument("shortlist size must satisfy 1 <= k <= " + std::to_string(n) +
                                    ", got " + std::to_string(k));
    }
}

Rational RankDistribution::at(std::int64_t d) const {
    if (d < 1 || d > max_rank()) {
        return 0;
    }
    return pmf[static_cast<std::size_t>(d - 1)];
}

Rational RankDistribution::mean() const {
    Rational sum;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        sum += pmf[i] * static_cast<std::int64_t>(i + 1);
    }
    return sum;
}

RankDistribution rank_pmf(const TwoPartyParams& params) {
    params.validate();
    const auto [n, k] = params;
    RankDistribution dist{n, k, {}};
    const BigInt total = binomial(n, k);
    dist.pmf.reserve(static_cast<std::size_t>(n - k + 1));
    for (std::int64_t d = 1; d <= n - k + 1; ++d) {
        // the other K-1 offered items all rank below d for the chooser
        dist.pmf.emplace_back(binomial(n - d, k - 1), total);
    }
    return dist;
}

Rational expected_chooser_rank(const TwoPartyParams& params) {
    params.validate();
    return Rational(params.n + 1, params.k + 1);
}

Rational expected_proposer_rank(const TwoPartyParams& params) {
    params.validate();
    return Rational(params.k + 1, 2);
}

Rational expected_total(const TwoPartyParams& params) {
    return expected_chooser_rank(params) + expected_proposer_rank(params);
}

double ideal_k(std::int64_t n) {
    if (n < 1) {
        throw std::invalid_argument("menu size must be at least 1, got " + std::to_string(n));
    }
    return std::sqrt(2.0 * static_cast<double>(n) + 2.0) - 1.0;
}

OptimalK optimal_integer_k(std::int64_t n) {
    if (n < 1) {
        throw std::invalid_argument("menu size must be at least 1, got " + std::to_string(n));
    }
    const TriangularIndex bracket = triangular_bracket(n + 1);
    OptimalK result;
    result.candidates.push_back(bracket.m - 1);
    if (bracket.value == n + 1) {
        result.candidates.push_back(bracket.m);
    }
    result.expected_total = expected_total({n, bracket.m - 1});
    return result;
}

std::int64_t k_floor_formula(std::int64_t n) {
    if (n < 1) {
        throw std::invalid_argument("menu size must be at least 1, got " + std::to_string(n));
    }
    // floor((sqrt(x) - 1) / 2) == floor((isqrt(x) - 1) / 2) for integer x
    const auto root = static_cast<std::int64_t>(isqrt(static_cast<std::uint64_t>(8 * n + 9)));
    return (root - 1) / 2;
}

double sigma_bound(std::int64_t n) {
    return std::sqrt(2.0 * (static_cast<double>(n) + 1.0) / 3.0);
}

ProtocolReport second_moments(const TwoPartyParams& params) {
    params.validate();
    const auto [n, k] = params;
    ProtocolReport report;
    report.n = n;
    report.k = k;
    report.expected_chooser = expected_chooser_rank(params);
    report.expected_proposer = expected_proposer_rank(params);
    report.expected_total = report.expected_chooser + report.expected_proposer;
    report.fairness_gap = report.expected_chooser - report.expected_proposer;

    report.chooser_second_moment =
        Rational(BigInt(n + 1) * (2 * n - k + 2), BigInt(k + 1) * (k + 2));
    report.proposer_second_moment = Rational(BigInt(k + 1) * (2 * k + 1), 6);

    // T and D are independent
    report.second_moment_diff = report.chooser_second_moment + report.proposer_second_moment -
                                Rational(2) * report.expected_chooser * report.expected_proposer;
    report.variance_diff = report.second_moment_diff - report.fairness_gap * report.fairness_gap;
    report.sigma_bound = sigma_bound(n);
    return report;
}

std::pair<Rational, Rational> worst_case_probabilities(const TwoPartyParams& params) {
    params.validate();
    const BigInt subsets = binomial(params.n, params.k);
    return {Rational(1, subsets), Rational(1, subsets * params.k)};
}

} // namespace shortlist
