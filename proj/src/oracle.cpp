#include "shortlist/oracle.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>

#include "shortlist/combinatorics.hpp"

namespace shortlist {

namespace {

std::vector<std::int64_t> identity(std::int64_t n) {
    std::vector<std::int64_t> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 1);
    return p;
}

std::vector<std::vector<std::int64_t>> all_permutations(std::int64_t n) {
    std::vector<std::vector<std::int64_t>> out;
    auto p = identity(n);
    do {
        out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

} // namespace

std::vector<Rational> TwoPartyOutcome::chooser_marginal(std::int64_t n) const {
    std::vector<Rational> marginal(static_cast<std::size_t>(n));
    for (const auto& [pair, prob] : joint) {
        marginal[static_cast<std::size_t>(pair.chooser - 1)] += prob;
    }
    return marginal;
}

void require_permutation(std::span<const std::int64_t> p) {
    if (p.empty()) {
        throw std::invalid_argument("permutation must be non-empty");
    }
    std::vector<bool> seen(p.size() + 1, false);
    for (std::int64_t v : p) {
        if (v < 1 || v > static_cast<std::int64_t>(p.size())) {
            throw std::invalid_argument("permutation entry " + std::to_string(v) + " out of range 1.." +
                                        std::to_string(p.size()));
        }
        if (seen[static_cast<std::size_t>(v)]) {
            throw std::invalid_argument("permutation entry " + std::to_string(v) + " repeated");
        }
        seen[static_cast<std::size_t>(v)] = true;
    }
}

BordaMin borda_min_of_permutation(std::span<const std::int64_t> p) {
    require_permutation(p);
    BordaMin best{p[0] + 1, {1, p[0]}};
    for (std::size_t i = 1; i < p.size(); ++i) {
        const auto proposer = static_cast<std::int64_t>(i + 1);
        if (p[i] + proposer < best.rank_sum) {
            best = {p[i] + proposer, {proposer, p[i]}};
        }
    }
    return best;
}

BigInt a129591_closed(std::int64_t n) {
    if (n < 1) {
        throw std::invalid_argument("A129591 is defined for n >= 1, got " + std::to_string(n));
    }
    using boost::multiprecision::pow;
    BigInt total = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto e = static_cast<unsigned>(n - i);
        total += BigInt(n - i + 1) * factorial(i) * (pow(BigInt(i + 1), e) - pow(BigInt(i), e));
    }
    return total;
}

BigInt a129591_brute(std::int64_t n, std::int64_t cap) {
    if (n < 1) {
        throw std::invalid_argument("A129591 is defined for n >= 1, got " + std::to_string(n));
    }
    if (n > cap) {
        throw std::invalid_argument("brute-force enumeration refused: n = " + std::to_string(n) +
                                    " exceeds cap " + std::to_string(cap));
    }
    auto p = identity(n);
    std::int64_t total = 0; // 10! * 11 fits comfortably
    do {
        std::int64_t m = p[0] + 1;
        for (std::size_t i = 1; i < p.size(); ++i) {
            m = std::min(m, p[i] + static_cast<std::int64_t>(i + 1));
        }
        total += m;
    } while (std::next_permutation(p.begin(), p.end()));
    return total;
}

OracleResult borda_expected(std::int64_t n) {
    OracleResult result;
    result.n = n;
    result.total_sum = a129591_closed(n);
    result.expectation = Rational(result.total_sum, factorial(n));
    return result;
}

TwoPartyOutcome exhaustive_two_party(std::int64_t n, std::int64_t k) {
    if (n < 1 || k < 1 || k > n) {
        throw std::invalid_argument("need 1 <= k <= n, got n = " + std::to_string(n) +
                                    ", k = " + std::to_string(k));
    }
    if (n > kTwoPartyCap) {
        throw std::invalid_argument("two-party enumeration refused: n = " + std::to_string(n) +
                                    " exceeds cap " + std::to_string(kTwoPartyCap));
    }
    std::map<PairRanks, std::int64_t> counts;
    std::int64_t outcomes = 0;
    auto p = identity(n);
    do {
        // proposer offers items 1..k; chooser takes her best of them
        std::size_t pick = 0;
        for (std::size_t i = 1; i < static_cast<std::size_t>(k); ++i) {
            if (p[i] < p[pick]) {
                pick = i;
            }
        }
        ++counts[{static_cast<std::int64_t>(pick + 1), p[pick]}];
        ++outcomes;
    } while (std::next_permutation(p.begin(), p.end()));

    TwoPartyOutcome out;
    for (const auto& [pair, count] : counts) {
        Rational prob(count, outcomes);
        out.expected_proposer += prob * pair.proposer;
        out.expected_chooser += prob * pair.chooser;
        out.joint.emplace(pair, std::move(prob));
    }
    return out;
}

std::vector<Rational> exhaustive_multi_party(const ShortlistSchedule& schedule) {
    const std::int64_t n = schedule.menu_size();
    const std::int64_t s = schedule.participants();
    if (n > kMultiPartyMenuCap || s > kMultiPartyPeopleCap) {
        throw std::invalid_argument("multi-party enumeration refused: needs n <= " +
                                    std::to_string(kMultiPartyMenuCap) + " and s <= " +
                                    std::to_string(kMultiPartyPeopleCap));
    }

    const auto perms = all_permutations(n);
    const auto people = static_cast<std::size_t>(s);
    const auto menu = static_cast<std::size_t>(n);

    // choice[j] indexes the ranking of person j+2; person 1 is the identity
    std::vector<std::size_t> choice(people - 1, 0);
    std::vector<std::int64_t> rank_sums(people, 0);
    std::int64_t outcomes = 0;
    std::vector<std::size_t> offered;
    const auto own_identity = identity(n);

    while (true) {
        offered.resize(menu);
        std::iota(offered.begin(), offered.end(), std::size_t{0});
        for (std::size_t person = 0; person < people; ++person) {
            const auto& ranking = person == 0 ? own_identity : perms[choice[person - 1]];
            std::sort(offered.begin(), offered.end(),
                      [&](std::size_t a, std::size_t b) { return ranking[a] < ranking[b]; });
            offered.resize(static_cast<std::size_t>(schedule[person + 1]));
        }
        const std::size_t final_item = offered.front();
        for (std::size_t person = 0; person < people; ++person) {
            const auto& ranking = person == 0 ? own_identity : perms[choice[person - 1]];
            rank_sums[person] += ranking[final_item];
        }
        ++outcomes;

        // odometer over the (n!)^{s-1} ranking tuples
        std::size_t digit = 0;
        while (digit < choice.size() && ++choice[digit] == perms.size()) {
            choice[digit++] = 0;
        }
        if (digit == choice.size()) {
            break;
        }
    }

    std::vector<Rational> expected;
    expected.reserve(people);
    for (std::int64_t sum : rank_sums) {
        expected.emplace_back(sum, outcomes);
    }
    return expected;
}

PairRanks fairness_first_baseline(std::span<const std::int64_t> p) {
    require_permutation(p);
    PairRanks best{1, p[0]};
    auto key = [](const PairRanks& r) {
        return std::tuple(std::llabs(r.chooser - r.proposer), r.chooser + r.proposer, r.proposer);
    };
    for (std::size_t i = 1; i < p.size(); ++i) {
        PairRanks candidate{static_cast<std::int64_t>(i + 1), p[i]};
        if (key(candidate) < key(best)) {
            best = candidate;
        }
    }
    return best;
}

} // namespace shortlist
