#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "shortlist/multi_party.hpp"
#include "shortlist/rational.hpp"

namespace shortlist {

// Brute-force ground truth. Throughout, the proposer's ranking is fixed to
// the identity: item i is his i-th favourite, and a permutation p gives the
// chooser's rank p[i-1] of that same item.

struct PairRanks {
    std::int64_t proposer = 0;
    std::int64_t chooser = 0;

    friend auto operator<=>(const PairRanks&, const PairRanks&) = default;
};

struct BordaMin {
    std::int64_t rank_sum = 0;
    PairRanks pair;
};

struct OracleResult {
    std::int64_t n = 0;
    BigInt total_sum;     // A129591(n)
    Rational expectation; // total_sum / n!
};

struct TwoPartyOutcome {
    Rational expected_proposer; // E(D)
    Rational expected_chooser;  // E(T)
    std::map<PairRanks, Rational> joint;

    /// Marginal of the chooser's rank, indexed by rank - 1.
    std::vector<Rational> chooser_marginal(std::int64_t n) const;
};

inline constexpr std::int64_t kBruteForceCap = 10;
inline constexpr std::int64_t kTwoPartyCap = 8;
inline constexpr std::int64_t kMultiPartyMenuCap = 6;
inline constexpr std::int64_t kMultiPartyPeopleCap = 3;

/// Throws std::invalid_argument unless p is a permutation of 1..p.size().
void require_permutation(std::span<const std::int64_t> p);

/// Minimum of p(i) + i, first index on ties.
BordaMin borda_min_of_permutation(std::span<const std::int64_t> p);

/// sum_{i=0}^{N-1} (N-i+1) i! ((i+1)^{N-i} - i^{N-i})
BigInt a129591_closed(std::int64_t n);

/// Sum of the Borda minimum over all n! permutations.
BigInt a129591_brute(std::int64_t n, std::int64_t cap = kBruteForceCap);

/// Expected minimum rank sum under independent uniform rankings.
OracleResult borda_expected(std::int64_t n);

/// Runs the protocol against every chooser permutation of 1..n.
TwoPartyOutcome exhaustive_two_party(std::int64_t n, std::int64_t k);

/// Exact E(R_i) by enumerating the rankings of persons 2..s, each keeping her
/// best C_i of what she is offered.
std::vector<Rational> exhaustive_multi_party(const ShortlistSchedule& schedule);

/// Item minimising |p(i) - i|, then rank sum, then proposer rank.
PairRanks fairness_first_baseline(std::span<const std::int64_t> p);

} // namespace shortlist
