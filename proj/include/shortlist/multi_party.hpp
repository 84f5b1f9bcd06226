#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shortlist/rational.hpp"

namespace shortlist {

/// Narrowing chain N = C_0 >= C_1 >= ... >= C_s = 1. Participant i receives
/// C_{i-1} items and passes on her top C_i.
class ShortlistSchedule {
public:
    /// Throws std::invalid_argument if `sizes` is not a valid chain.
    explicit ShortlistSchedule(std::vector<std::int64_t> sizes);

    std::int64_t menu_size() const { return sizes_.front(); }
    std::int64_t participants() const { return static_cast<std::int64_t>(sizes_.size()) - 1; }
    const std::vector<std::int64_t>& sizes() const { return sizes_; }
    /// C_i for i in 0..s
    std::int64_t operator[](std::size_t i) const { return sizes_[i]; }
    bool strictly_decreasing() const;

    friend bool operator==(const ShortlistSchedule&, const ShortlistSchedule&) = default;

private:
    std::vector<std::int64_t> sizes_;
};

struct MultiPartyReport {
    std::vector<Rational> expected_rank; // E(R_i), i = 1..s
    Rational expected_total;
    double ideal_common_rank = 0.0;
};

/// E(W_i) = i(N+1)/(a+1) for the i-th smallest of a uniform a-subset of 1..N.
Rational order_stat_expectation(std::int64_t n, std::int64_t a, std::int64_t i);

/// Expected value of a uniform pick among the b smallest of a uniform
/// a-subset of 1..N: (N+1)(b+1) / (2(a+1)).
Rational uniform_top_block_expectation(std::int64_t n, std::int64_t a, std::int64_t b);

/// Per-person expected ranks (N+1)(C_i+1) / (2(C_{i-1}+1)) for any schedule.
MultiPartyReport multi_party_report(const ShortlistSchedule& schedule);

/// Real-valued optimum C_i = 2^{i/s} (N+1)^{(s-i)/s} - 1, with the endpoints
/// pinned to N and 1.
std::vector<double> real_schedule(std::int64_t n, std::int64_t s);

struct IntegerSchedule {
    ShortlistSchedule schedule;
    MultiPartyReport report;
};

/// Exact minimiser of the expected total rank over all non-increasing integer
/// chains from N to 1 of length s+1. Ties go to the lexicographically
/// smallest chain.
IntegerSchedule integer_schedule(std::int64_t n, std::int64_t s);

/// ((N+1)/2)^{1 - 1/s}
double common_ideal_rank(std::int64_t n, std::int64_t s);

} // namespace shortlist
