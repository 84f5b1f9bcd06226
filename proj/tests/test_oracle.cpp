#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "shortlist/combinatorics.hpp"
#include "shortlist/multi_party.hpp"
#include "shortlist/oracle.hpp"
#include "shortlist/two_party.hpp"

using namespace shortlist;
using Perm = std::vector<std::int64_t>;

namespace {

Rational frac(std::int64_t p, std::int64_t q) { return Rational(BigInt(p), BigInt(q)); }

const char* const kListedA129591[] = {"2",    "5",     "17",     "75",      "407",
                                      "2619", "19487", "164571", "1555007", "16252779"};

} // namespace

TEST_CASE("Borda minimum of a permutation") {
    auto m = borda_min_of_permutation(Perm{1, 2, 3});
    CHECK(m.rank_sum == 2);
    CHECK(m.pair == PairRanks{1, 1});

    m = borda_min_of_permutation(Perm{5, 6, 4, 3, 2, 1});
    CHECK(m.rank_sum == 6);
    CHECK(m.pair == PairRanks{1, 5});

    m = borda_min_of_permutation(Perm{5, 1, 2, 3, 4, 6});
    CHECK(m.rank_sum == 3);
    CHECK(m.pair == PairRanks{2, 1});

    // ties resolve to the smallest proposer rank: sums are 3, 3
    m = borda_min_of_permutation(Perm{2, 1});
    CHECK(m.pair == PairRanks{1, 2});

    CHECK_THROWS_AS(borda_min_of_permutation(Perm{1, 1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(borda_min_of_permutation(Perm{1, 4, 2}), std::invalid_argument);
    CHECK_THROWS_AS(borda_min_of_permutation(Perm{0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(borda_min_of_permutation(Perm{}), std::invalid_argument);
}

TEST_CASE("Borda minimum never exceeds N+1 and names one item") {
    for (std::int64_t n = 1; n <= 7; ++n) {
        Perm p(static_cast<std::size_t>(n));
        std::iota(p.begin(), p.end(), 1);
        do {
            const auto m = borda_min_of_permutation(p);
            REQUIRE(m.rank_sum <= n + 1);
            REQUIRE(m.pair.proposer >= 1);
            REQUIRE(m.pair.proposer <= n);
            REQUIRE(p[static_cast<std::size_t>(m.pair.proposer - 1)] == m.pair.chooser);
            REQUIRE(m.pair.proposer + m.pair.chooser == m.rank_sum);
        } while (std::next_permutation(p.begin(), p.end()));
    }
}

TEST_CASE("A129591 closed formula reproduces the listed terms") {
    for (std::int64_t n = 1; n <= 10; ++n) {
        CHECK(a129591_closed(n).str() == kListedA129591[n - 1]);
    }
    CHECK_THROWS_AS(a129591_closed(0), std::invalid_argument);
}

TEST_CASE("A129591 brute force equals the closed formula") {
    CHECK(a129591_brute(2) == 5);
    CHECK(a129591_brute(4) == 75);
    CHECK(a129591_brute(6) == 2619);
    for (std::int64_t n = 1; n <= 9; ++n) {
        REQUIRE(a129591_brute(n) == a129591_closed(n));
    }
    CHECK_THROWS_AS(a129591_brute(11), std::invalid_argument);
    CHECK_THROWS_AS(a129591_brute(5, 4), std::invalid_argument);
    CHECK_THROWS_AS(a129591_brute(0), std::invalid_argument);
}

TEST_CASE("expected Borda minimum") {
    CHECK(borda_expected(1).expectation == 2);
    CHECK(borda_expected(2).expectation == frac(5, 2));
    CHECK(borda_expected(3).expectation == frac(17, 6));
    for (std::int64_t n = 1; n <= 20; ++n) {
        const auto r = borda_expected(n);
        REQUIRE(r.n == n);
        REQUIRE(r.expectation * Rational(factorial(n)) == Rational(r.total_sum));
    }
}

TEST_CASE("exhaustive two-party examples") {
    auto out = exhaustive_two_party(3, 2);
    CHECK(out.expected_proposer == frac(3, 2));
    CHECK(out.expected_chooser == frac(4, 3));

    out = exhaustive_two_party(2, 2);
    CHECK(out.expected_chooser == 1);

    out = exhaustive_two_party(6, 3);
    CHECK(out.joint.at(PairRanks{3, 4}) == frac(1, 60));

    CHECK_THROWS_AS(exhaustive_two_party(9, 3), std::invalid_argument);
    CHECK_THROWS_AS(exhaustive_two_party(4, 5), std::invalid_argument);
    CHECK_THROWS_AS(exhaustive_two_party(4, 0), std::invalid_argument);
}

TEST_CASE("exhaustive two-party agrees with the closed forms") {
    for (std::int64_t n = 1; n <= kTwoPartyCap; ++n) {
        for (std::int64_t k = 1; k <= n; ++k) {
            const TwoPartyParams params{n, k};
            const auto out = exhaustive_two_party(n, k);
            REQUIRE(out.expected_chooser == expected_chooser_rank(params));
            REQUIRE(out.expected_proposer == expected_proposer_rank(params));

            const auto pmf = rank_pmf(params);
            const auto marginal = out.chooser_marginal(n);
            for (std::int64_t d = 1; d <= n; ++d) {
                REQUIRE(marginal[static_cast<std::size_t>(d - 1)] == pmf.at(d));
            }

            // proposer rank is uniform on 1..K
            std::vector<Rational> proposer(static_cast<std::size_t>(n));
            Rational t_sq, d_sq, cross;
            for (const auto& [pair, prob] : out.joint) {
                proposer[static_cast<std::size_t>(pair.proposer - 1)] += prob;
                const std::int64_t diff = pair.chooser - pair.proposer;
                cross += prob * (diff * diff);
            }
            for (std::int64_t d = 1; d <= n; ++d) {
                REQUIRE(proposer[static_cast<std::size_t>(d - 1)] == (d <= k ? frac(1, k) : Rational(0)));
            }
            REQUIRE(cross == second_moments(params).second_moment_diff);

            const auto [chooser_worst, both_worst] = worst_case_probabilities(params);
            REQUIRE(marginal[static_cast<std::size_t>(n - k)] == chooser_worst);
            const auto it = out.joint.find(PairRanks{k, n - k + 1});
            REQUIRE(it != out.joint.end());
            REQUIRE(it->second == both_worst);
        }
    }
}

TEST_CASE("exhaustive multi-party examples") {
    auto ranks = exhaustive_multi_party(ShortlistSchedule({4, 2, 1}));
    REQUIRE(ranks.size() == 2);
    CHECK(ranks[0] == frac(3, 2));
    CHECK(ranks[1] == frac(5, 3));

    ranks = exhaustive_multi_party(ShortlistSchedule({3, 3, 1}));
    CHECK(ranks[0] == 2);
    CHECK(ranks[1] == 1);

    ranks = exhaustive_multi_party(ShortlistSchedule({5, 3, 2, 1}));
    CHECK(ranks == multi_party_report(ShortlistSchedule({5, 3, 2, 1})).expected_rank);

    CHECK_THROWS_AS(exhaustive_multi_party(ShortlistSchedule({7, 3, 1})), std::invalid_argument);
    CHECK_THROWS_AS(exhaustive_multi_party(ShortlistSchedule({4, 3, 2, 1, 1})), std::invalid_argument);
}

TEST_CASE("exhaustive multi-party agrees with the per-person formula") {
    for (std::int64_t n = 1; n <= 5; ++n) {
        for (std::int64_t c1 = 1; c1 <= n; ++c1) {
            for (std::int64_t c2 = 1; c2 <= c1; ++c2) {
                const ShortlistSchedule three({n, c1, c2, 1});
                REQUIRE(exhaustive_multi_party(three) == multi_party_report(three).expected_rank);
            }
            const ShortlistSchedule two({n, c1, 1});
            REQUIRE(exhaustive_multi_party(two) == multi_party_report(two).expected_rank);
        }
        const ShortlistSchedule one({n, 1});
        REQUIRE(exhaustive_multi_party(one) == std::vector<Rational>{Rational(1)});
    }
}

TEST_CASE("fairness-first baseline") {
    CHECK(fairness_first_baseline(Perm{5, 1, 2, 3, 4, 6}) == PairRanks{6, 6});
    CHECK(fairness_first_baseline(Perm{1, 2, 3, 4}) == PairRanks{1, 1});
    CHECK(fairness_first_baseline(Perm{5, 6, 4, 3, 2, 1}) == PairRanks{3, 4});
    CHECK_THROWS_AS(fairness_first_baseline(Perm{2, 2}), std::invalid_argument);
}
