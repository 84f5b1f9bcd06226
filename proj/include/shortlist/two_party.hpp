#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "shortlist/rational.hpp"

namespace shortlist {

/// Menu size and the proposer's shortlist size for the two-person protocol:
/// the proposer offers his top `k` of `n` items and the chooser takes her
/// favourite among them.
struct TwoPartyParams {
    std::int64_t n = 1;
    std::int64_t k = 1;

    /// Throws std::invalid_argument unless 1 <= k <= n.
    void validate() const;
};

/// Distribution of the chooser's rank of the selected item.
struct RankDistribution {
    std::int64_t n = 0;
    std::int64_t k = 0;
    std::vector<Rational> pmf; // pmf[d - 1] for d in 1..n-k+1

    std::int64_t max_rank() const { return n - k + 1; }
    /// Probability of rank d; zero outside the support.
    Rational at(std::int64_t d) const;
    Rational mean() const;
};

struct ProtocolReport {
    std::int64_t n = 0;
    std::int64_t k = 0;
    Rational expected_chooser;       // E(T)
    Rational expected_proposer;      // E(D)
    Rational expected_total;
    Rational fairness_gap;           // E(T) - E(D)
    Rational chooser_second_moment;  // E(T^2)
    Rational proposer_second_moment; // E(D^2)
    Rational second_moment_diff;     // E((T-D)^2)
    Rational variance_diff;          // Var(T-D)
    double sigma_bound = 0.0;        // sqrt(2(N+1)/3)
};

struct OptimalK {
    std::vector<std::int64_t> candidates; // ascending; two entries on a tie
    Rational expected_total;

    std::int64_t canonical() const { return candidates.front(); }
    bool tie() const { return candidates.size() > 1; }
};

RankDistribution rank_pmf(const TwoPartyParams& params);

/// (N+1)/(K+1)
Rational expected_chooser_rank(const TwoPartyParams& params);
/// (K+1)/2
Rational expected_proposer_rank(const TwoPartyParams& params);
Rational expected_total(const TwoPartyParams& params);

/// sqrt(2N+2) - 1
double ideal_k(std::int64_t n);

/// The integer K minimising the expected total rank. On a tie (N+1
/// triangular) both minimisers are returned and the smaller is canonical.
OptimalK optimal_integer_k(std::int64_t n);

/// floor((sqrt(8N+9) - 1) / 2) with an exact integer square root. Agrees with
/// the canonical K except on ties, where it yields the larger minimiser.
std::int64_t k_floor_formula(std::int64_t n);

ProtocolReport second_moments(const TwoPartyParams& params);

/// (P(chooser gets rank N-K+1), P(both get their protocol-worst ranks))
std::pair<Rational, Rational> worst_case_probabilities(const TwoPartyParams& params);

/// sqrt(2(N+1)/3)
double sigma_bound(std::int64_t n);

} // namespace shortlist
