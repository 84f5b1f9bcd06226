#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "shortlist/multi_party.hpp"

namespace shortlist {

/// SplitMix64. Small, fast, and splittable by hashing a stream index into
/// the seed, which is how per-trial streams are derived.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()();

    /// Uniform integer in [0, bound) without modulo bias. bound > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Independent generator for stream `index` under `seed`.
    static SplitMix64 stream(std::uint64_t seed, std::uint64_t index);

private:
    std::uint64_t state_;
};

/// Uniform permutation of 1..n; out[item] is that item's rank.
std::vector<std::int64_t> random_permutation(std::int64_t n, SplitMix64& rng);

struct SimulationConfig {
    ShortlistSchedule schedule{{1, 1}};
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    /// Worker threads; 0 picks the hardware concurrency. Results do not
    /// depend on this value.
    unsigned workers = 0;
};

struct SimulationSummary {
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    std::vector<double> mean_rank;       // per person
    std::vector<double> standard_error;  // per person
    double mean_total = 0.0;
    double standard_error_total = 0.0;

    // two-person schedules only; person 1 is the proposer (D), person 2 the chooser (T)
    std::optional<double> mean_abs_diff;
    std::optional<double> standard_error_abs_diff;
    std::optional<double> second_moment_diff;
    std::optional<double> standard_error_second_moment_diff;

    friend bool operator==(const SimulationSummary&, const SimulationSummary&) = default;
};

/// Runs `trials` independent protocol executions under independent uniform
/// rankings (person 1 fixed to the identity). Deterministic in the seed.
SimulationSummary simulate(const SimulationConfig& config);

} // namespace shortlist
