#include "shortlist/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "shortlist/rational.hpp"

namespace shortlist {

namespace {

using u128 = unsigned __int128;

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::int64_t kMaxMenu = 1'000'000;
constexpr std::uint64_t kMaxTrials = 1'000'000'000;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

BigInt to_big(u128 v) {
    BigInt hi = static_cast<std::uint64_t>(v >> 64);
    return (hi << 64) | BigInt(static_cast<std::uint64_t>(v));
}

// First and second raw moments of an integer statistic, summed exactly.
struct Moments {
    u128 sum = 0;
    u128 sum_sq = 0;

    void add(std::uint64_t x) {
        sum += x;
        sum_sq += static_cast<u128>(x) * x;
    }
    Moments& operator+=(const Moments& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
        return *this;
    }

    double mean(std::uint64_t n) const { return Rational(to_big(sum), n).to_double(); }

    // sqrt(sample variance / n); zero for a single trial
    double standard_error(std::uint64_t n) const {
        if (n < 2) {
            return 0.0;
        }
        const BigInt bn = n;
        const BigInt s1 = to_big(sum);
        const BigInt numerator = bn * to_big(sum_sq) - s1 * s1;
        const Rational variance(numerator, bn * (bn - 1));
        return std::sqrt(variance.to_double() / static_cast<double>(n));
    }
};

struct Accumulator {
    std::vector<Moments> rank;
    Moments total;
    Moments abs_diff;
    Moments sq_diff;

    explicit Accumulator(std::size_t people) : rank(people) {}

    Accumulator& operator+=(const Accumulator& o) {
        for (std::size_t i = 0; i < rank.size(); ++i) {
            rank[i] += o.rank[i];
        }
        total += o.total;
        abs_diff += o.abs_diff;
        sq_diff += o.sq_diff;
        return *this;
    }
};

void run_trials(const SimulationConfig& config, std::uint64_t begin, std::uint64_t end, Accumulator& acc) {
    const auto& sizes = config.schedule.sizes();
    const auto n = config.schedule.menu_size();
    const auto people = static_cast<std::size_t>(config.schedule.participants());

    std::vector<std::vector<std::int64_t>> rankings(people);
    std::vector<std::size_t> offered;
    std::vector<std::uint64_t> realized(people);

    for (std::uint64_t trial = begin; trial < end; ++trial) {
        SplitMix64 rng = SplitMix64::stream(config.seed, trial);
        for (std::size_t p = 1; p < people; ++p) {
            rankings[p] = random_permutation(n, rng);
        }

        // person 1 ranks items in index order and keeps the first C_1
        offered.resize(static_cast<std::size_t>(sizes[1]));
        std::iota(offered.begin(), offered.end(), std::size_t{0});
        for (std::size_t p = 1; p < people; ++p) {
            const auto& ranking = rankings[p];
            const auto keep = static_cast<std::size_t>(sizes[p + 1]);
            std::nth_element(offered.begin(), offered.begin() + static_cast<std::ptrdiff_t>(keep - 1),
                             offered.end(),
                             [&](std::size_t a, std::size_t b) { return ranking[a] < ranking[b]; });
            offered.resize(keep);
        }
        const std::size_t final_item = offered.front();

        std::uint64_t total = 0;
        for (std::size_t p = 0; p < people; ++p) {
            realized[p] = p == 0 ? final_item + 1 : static_cast<std::uint64_t>(rankings[p][final_item]);
            acc.rank[p].add(realized[p]);
            total += realized[p];
        }
        acc.total.add(total);
        if (people == 2) {
            const std::uint64_t diff =
                realized[1] > realized[0] ? realized[1] - realized[0] : realized[0] - realized[1];
            acc.abs_diff.add(diff);
            acc.sq_diff.add(diff * diff);
        }
    }
}

} // namespace

SplitMix64::result_type SplitMix64::operator()() {
    state_ += kGolden;
    return mix64(state_);
}

std::uint64_t SplitMix64::below(std::uint64_t bound) {
    // Lemire's multiply-and-reject
    u128 product = static_cast<u128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            product = static_cast<u128>((*this)()) * bound;
            low = static_cast<std::uint64_t>(product);
        }
    }
    return static_cast<std::uint64_t>(product >> 64);
}

SplitMix64 SplitMix64::stream(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(mix64(seed) ^ mix64(index + kGolden));
}

std::vector<std::int64_t> random_permutation(std::int64_t n, SplitMix64& rng) {
    if (n < 1) {
        throw std::invalid_argument("permutation size must be at least 1, got " + std::to_string(n));
    }
    std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    for (auto i = static_cast<std::uint64_t>(n) - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.below(i + 1)]);
    }
    return perm;
}

SimulationSummary simulate(const SimulationConfig& config) {
    if (config.trials == 0) {
        throw std::invalid_argument("trials must be at least 1");
    }
    if (config.trials > kMaxTrials) {
        throw std::invalid_argument("trials must not exceed " + std::to_string(kMaxTrials));
    }
    if (config.schedule.menu_size() > kMaxMenu) {
        throw std::invalid_argument("menu size must not exceed " + std::to_string(kMaxMenu));
    }

    const auto people = static_cast<std::size_t>(config.schedule.participants());
    unsigned workers = config.workers != 0 ? config.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, config.trials));

    // Each trial draws from its own stream, and the integer sums are
    // order-independent, so the split into chunks cannot change the result.
    std::vector<Accumulator> partial(workers, Accumulator(people));
    std::vector<std::thread> threads;
    const std::uint64_t chunk = config.trials / workers;
    const std::uint64_t extra = config.trials % workers;
    std::uint64_t begin = 0;
    for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t end = begin + chunk + (w < extra ? 1 : 0);
        if (w + 1 == workers) {
            run_trials(config, begin, end, partial[w]);
        } else {
            threads.emplace_back(run_trials, std::cref(config), begin, end, std::ref(partial[w]));
        }
        begin = end;
    }
    for (auto& t : threads) {
        t.join();
    }
    Accumulator acc(people);
    for (const auto& part : partial) {
        acc += part;
    }

    const std::uint64_t n = config.trials;
    SimulationSummary summary;
    summary.seed = config.seed;
    summary.trials = n;
    for (const auto& m : acc.rank) {
        summary.mean_rank.push_back(m.mean(n));
        summary.standard_error.push_back(m.standard_error(n));
    }
    for (double mean : summary.mean_rank) {
        summary.mean_total += mean;
    }
    summary.standard_error_total = acc.total.standard_error(n);
    if (people == 2) {
        summary.mean_abs_diff = acc.abs_diff.mean(n);
        summary.standard_error_abs_diff = acc.abs_diff.standard_error(n);
        summary.second_moment_diff = acc.sq_diff.mean(n);
        summary.standard_error_second_moment_diff = acc.sq_diff.standard_error(n);
    }
    return summary;
}

} // namespace shortlist
