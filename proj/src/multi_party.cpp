#include "shortlist/multi_party.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace shortlist {

namespace {

void require_menu(std::int64_t n) {
    if (n < 1) {
        throw std::invalid_argument("menu size must be at least 1, got " + std::to_string(n));
    }
}

void require_participants(std::int64_t s) {
    if (s < 1) {
        throw std::invalid_argument("need at least one participant, got " + std::to_string(s));
    }
}

} // namespace

ShortlistSchedule::ShortlistSchedule(std::vector<std::int64_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) {
        throw std::invalid_argument("schedule needs at least C_0 and C_1");
    }
    if (sizes_.front() < 1) {
        throw std::invalid_argument("schedule must start at a menu size >= 1");
    }
    if (sizes_.back() != 1) {
        throw std::invalid_argument("schedule must end with 1");
    }
    for (std::size_t i = 1; i < sizes_.size(); ++i) {
        if (sizes_[i] < 1 || sizes_[i] > sizes_[i - 1]) {
            throw std::invalid_argument("schedule must be non-increasing and positive (C_" +
                                        std::to_string(i) + " = " + std::to_string(sizes_[i]) + ")");
        }
    }
}

bool ShortlistSchedule::strictly_decreasing() const {
    for (std::size_t i = 1; i < sizes_.size(); ++i) {
        if (sizes_[i] >= sizes_[i - 1]) {
            return false;
        }
    }
    return true;
}

Rational order_stat_expectation(std::int64_t n, std::int64_t a, std::int64_t i) {
    require_menu(n);
    if (a < 1 || a > n) {
        throw std::invalid_argument("subset size must satisfy 1 <= a <= N, got " + std::to_string(a));
    }
    if (i < 1 || i > a) {
        throw std::invalid_argument("order statistic index must satisfy 1 <= i <= a, got " +
                                    std::to_string(i));
    }
    return Rational(BigInt(i) * (n + 1), a + 1);
}

Rational uniform_top_block_expectation(std::int64_t n, std::int64_t a, std::int64_t b) {
    require_menu(n);
    if (a < 1 || a > n) {
        throw std::invalid_argument("subset size must satisfy 1 <= a <= N, got " + std::to_string(a));
    }
    if (b < 1 || b > a) {
        throw std::invalid_argument("block size must satisfy 1 <= b <= a, got " + std::to_string(b));
    }
    return Rational(BigInt(n + 1) * (b + 1), BigInt(2) * (a + 1));
}

MultiPartyReport multi_party_report(const ShortlistSchedule& schedule) {
    const std::int64_t n = schedule.menu_size();
    const std::int64_t s = schedule.participants();
    MultiPartyReport report;
    report.expected_rank.reserve(static_cast<std::size_t>(s));
    for (std::size_t i = 1; i <= static_cast<std::size_t>(s); ++i) {
        // person i keeps her top C_i of the C_{i-1} offered; the final item is
        // a uniform pick from that block
        report.expected_rank.push_back(uniform_top_block_expectation(n, schedule[i - 1], schedule[i]));
        report.expected_total += report.expected_rank.back();
    }
    report.ideal_common_rank = common_ideal_rank(n, s);
    return report;
}

std::vector<double> real_schedule(std::int64_t n, std::int64_t s) {
    require_menu(n);
    require_participants(s);
    std::vector<double> sizes(static_cast<std::size_t>(s) + 1);
    const double np1 = static_cast<double>(n) + 1.0;
    const double sd = static_cast<double>(s);
    for (std::int64_t i = 0; i <= s; ++i) {
        const double id = static_cast<double>(i);
        sizes[static_cast<std::size_t>(i)] =
            std::exp2(id / sd) * std::pow(np1, (sd - id) / sd) - 1.0;
    }
    sizes.front() = static_cast<double>(n);
    sizes.back() = 1.0;
    return sizes;
}

namespace {

// Exact search over non-increasing chains. A double-precision DP over all
// (step, size) states bounds the optimum; exact rationals then only compare
// successors whose approximate cost is within kSlack of the approximate
// minimum, which always contains every true minimiser.
class ChainOptimizer {
public:
    ChainOptimizer(std::int64_t n, std::int64_t s)
        : n_(n), rows_(static_cast<std::size_t>(s) + 1),
          approx_(rows_, std::vector<double>(static_cast<std::size_t>(n), 0.0)),
          exact_(rows_, std::vector<std::optional<Rational>>(static_cast<std::size_t>(n))) {
        for (std::size_t i = rows_ - 1; i-- > 0;) {
            const std::int64_t lo = (i == 0) ? n : 1;
            for (std::int64_t c = lo; c <= n; ++c) {
                double min = 0.0;
                for (std::int64_t next = 1; next <= last_size(i + 1, c); ++next) {
                    const double cost = approx_cost(i, c, next);
                    if (next == 1 || cost < min) {
                        min = cost;
                    }
                }
                approx_[i][idx(c)] = min;
            }
        }
        exact_[rows_ - 1][0] = Rational(0);
    }

    std::vector<std::int64_t> best_chain() {
        std::vector<std::int64_t> sizes{n_};
        for (std::size_t i = 0; i + 1 < rows_; ++i) {
            const std::int64_t c = sizes.back();
            const Rational& target = value(i, c);
            for (std::int64_t next : candidates(i, c)) {
                if (Rational(next + 1, c + 1) + value(i + 1, next) == target) {
                    sizes.push_back(next);
                    break;
                }
            }
        }
        return sizes;
    }

private:
    static constexpr double kSlack = 1e-9;

    static std::size_t idx(std::int64_t c) { return static_cast<std::size_t>(c - 1); }

    // The final size is pinned to 1.
    std::int64_t last_size(std::size_t row, std::int64_t c) const { return row + 1 == rows_ ? 1 : c; }

    double approx_cost(std::size_t i, std::int64_t c, std::int64_t next) const {
        return static_cast<double>(next + 1) / static_cast<double>(c + 1) + approx_[i + 1][idx(next)];
    }

    std::vector<std::int64_t> candidates(std::size_t i, std::int64_t c) const {
        std::vector<std::int64_t> out;
        const double bound = approx_[i][idx(c)] + kSlack;
        for (std::int64_t next = 1; next <= last_size(i + 1, c); ++next) {
            if (approx_cost(i, c, next) <= bound) {
                out.push_back(next);
            }
        }
        return out;
    }

    // Exact optimal remaining cost sum_{j>i} (C_j+1)/(C_{j-1}+1) given C_i = c.
    const Rational& value(std::size_t i, std::int64_t c) {
        auto& slot = exact_[i][idx(c)];
        if (!slot) {
            std::optional<Rational> min;
            for (std::int64_t next : candidates(i, c)) {
                Rational cost = Rational(next + 1, c + 1) + value(i + 1, next);
                if (!min || cost < *min) {
                    min = std::move(cost);
                }
            }
            slot = std::move(min);
        }
        return *slot;
    }

    std::int64_t n_;
    std::size_t rows_;
    std::vector<std::vector<double>> approx_;
    std::vector<std::vector<std::optional<Rational>>> exact_;
};

} // namespace

IntegerSchedule integer_schedule(std::int64_t n, std::int64_t s) {
    require_menu(n);
    require_participants(s);

    // The total is (N+1)/2 times the chain cost, so minimising one minimises the other.
    ShortlistSchedule schedule(ChainOptimizer(n, s).best_chain());
    MultiPartyReport report = multi_party_report(schedule);
    return {std::move(schedule), std::move(report)};
}

double common_ideal_rank(std::int64_t n, std::int64_t s) {
    require_menu(n);
    require_participants(s);
    const double sd = static_cast<double>(s);
    return std::pow((static_cast<double>(n) + 1.0) / 2.0, (sd - 1.0) / sd);
}

} // namespace shortlist
