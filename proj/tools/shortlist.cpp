#include <charconv>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "shortlist/api_service.hpp"
#include "shortlist/combinatorics.hpp"
#include "shortlist/json_codec.hpp"
#include "shortlist/multi_party.hpp"
#include "shortlist/oracle.hpp"
#include "shortlist/simulator.hpp"
#include "shortlist/two_party.hpp"

using namespace shortlist;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;

constexpr std::int64_t kMaxTableRows = 10'000;
constexpr std::int64_t kOracleBruteCap = 8;
constexpr std::int64_t kMaxOracleMenu = 1000;
constexpr double kHardFailZ = 6.0;

/// Bad flag values that CLI11 cannot catch on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool use_color() { return std::getenv("NO_COLOR") == nullptr && isatty(STDOUT_FILENO); }

std::string paint(const std::string& text, bool good) {
    if (!use_color()) {
        return text;
    }
    return fmt::format("\x1b[{}m{}\x1b[0m", good ? 32 : 31, text);
}

// Three decimals with trailing zeros dropped; exact values stay short.
std::string short_decimal(const Rational& value) {
    std::string s = value.to_decimal(3);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') {
            s.pop_back();
        }
        if (s.back() == '.') {
            s.pop_back();
        }
    }
    return s;
}

std::string short_decimal(double value) { return fmt::format("{:.3f}", value); }

// sqrt(2N+2), printed as an integer when it is one.
std::string ideal_total_text(std::int64_t n) {
    const auto x = static_cast<std::uint64_t>(2 * n + 2);
    const auto root = isqrt(x);
    if (root * root == x) {
        return std::to_string(root);
    }
    return short_decimal(std::sqrt(static_cast<double>(x)));
}

std::string csv_rational(const Rational& value) {
    return fmt::format("{},{}", value.to_string(), value.to_decimal(kDecimalDigits));
}

std::string join_sizes(const std::vector<std::int64_t>& sizes, const char* sep) {
    return fmt::format("{}", fmt::join(sizes, sep));
}

void require_range(const char* flag, std::int64_t value, std::int64_t lo, std::int64_t hi) {
    if (value < lo || value > hi) {
        throw UsageError(fmt::format("{} must be in {}..{}, got {}", flag, lo, hi, value));
    }
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
    std::int64_t n = 0;
    std::optional<std::int64_t> to;
    std::optional<std::int64_t> k;
    std::optional<std::int64_t> s;
    std::string format = "table";
};

struct ComparisonRow {
    std::int64_t n;
    std::optional<Rational> brute;
    double ideal_k;
    double ideal_total;
    OptimalK optimal;
};

ComparisonRow comparison_row(std::int64_t n) {
    ComparisonRow row{n, std::nullopt, ideal_k(n), std::sqrt(2.0 * static_cast<double>(n) + 2.0),
                      optimal_integer_k(n)};
    if (n <= kMaxBordaMenu) {
        row.brute = borda_expected(n).expectation;
    }
    return row;
}

int analyze_comparison(const AnalyzeOptions& opt) {
    const std::int64_t last = opt.to.value_or(opt.n);
    if (last < opt.n) {
        throw UsageError("--to must not be below --n");
    }
    if (last - opt.n >= kMaxTableRows) {
        throw UsageError(fmt::format("at most {} rows per table", kMaxTableRows));
    }
    std::vector<ComparisonRow> rows;
    for (std::int64_t n = opt.n; n <= last; ++n) {
        rows.push_back(comparison_row(n));
    }

    if (opt.format == "json") {
        json out = json::array();
        for (const auto& r : rows) {
            out.push_back({{"n", r.n},
                           {"brute_force", r.brute ? to_json(*r.brute) : json(nullptr)},
                           {"ideal_k", r.ideal_k},
                           {"ideal_total", r.ideal_total},
                           {"optimal_k", r.optimal.candidates},
                           {"integer_total", to_json(r.optimal.expected_total)}});
        }
        std::cout << (opt.to ? out : out[0]).dump(2) << '\n';
    } else if (opt.format == "csv") {
        std::cout << "n,brute_force,brute_force_decimal,ideal_k,ideal_total,optimal_k,integer_total,"
                     "integer_total_decimal\n";
        for (const auto& r : rows) {
            std::cout << fmt::format("{},{},{:.12f},{:.12f},{},{}\n", r.n, r.brute ? csv_rational(*r.brute) : ",",
                                     r.ideal_k, r.ideal_total, join_sizes(r.optimal.candidates, "|"),
                                     csv_rational(r.optimal.expected_total));
        }
    } else {
        std::cout << fmt::format("{:>8}  {:>11}  {:>8}  {:>9}  {}\n", "N", "brute force", "ideal K", "integer K",
                                 "K*");
        for (const auto& r : rows) {
            std::cout << fmt::format("{:>8}  {:>11}  {:>8}  {:>9}  {}\n", r.n, r.brute ? short_decimal(*r.brute) : "-",
                                     ideal_total_text(r.n), short_decimal(r.optimal.expected_total),
                                     join_sizes(r.optimal.candidates, " or "));
        }
    }
    return kExitOk;
}

int analyze_two_party(const AnalyzeOptions& opt) {
    require_range("--k", *opt.k, 1, opt.n);
    const auto report = second_moments({opt.n, *opt.k});
    if (opt.format == "json") {
        std::cout << two_party_analysis(opt.n, opt.k).dump(2) << '\n';
        return kExitOk;
    }
    if (opt.format == "csv") {
        std::cout << "n,k,expected_chooser,expected_chooser_decimal,expected_proposer,expected_proposer_decimal,"
                     "expected_total,expected_total_decimal,fairness_gap,fairness_gap_decimal,second_moment_diff,"
                     "second_moment_diff_decimal,variance_diff,variance_diff_decimal,sigma_bound\n";
        std::cout << fmt::format("{},{},{},{},{},{},{},{},{:.12f}\n", report.n, report.k,
                                 csv_rational(report.expected_chooser), csv_rational(report.expected_proposer),
                                 csv_rational(report.expected_total), csv_rational(report.fairness_gap),
                                 csv_rational(report.second_moment_diff), csv_rational(report.variance_diff),
                                 report.sigma_bound);
        return kExitOk;
    }
    std::cout << fmt::format("N = {}, K = {}\n", report.n, report.k);
    const std::pair<const char*, const Rational*> rows[] = {
        {"E(T)  chooser rank", &report.expected_chooser},
        {"E(D)  proposer rank", &report.expected_proposer},
        {"E(T+D)", &report.expected_total},
        {"E(T)-E(D)", &report.fairness_gap},
        {"E((T-D)^2)", &report.second_moment_diff},
        {"Var(T-D)", &report.variance_diff},
    };
    for (const auto& [label, value] : rows) {
        std::cout << fmt::format("  {:<20} {:>10}  {}\n", label, short_decimal(*value), value->to_string());
    }
    std::cout << fmt::format("  {:<20} {:>10}\n", "sqrt(2(N+1)/3)", short_decimal(report.sigma_bound));
    return kExitOk;
}

int analyze_schedule(const AnalyzeOptions& opt) {
    require_range("--n", opt.n, 1, kMaxScheduleMenu);
    require_range("--s", *opt.s, 1, kMaxScheduleParticipants);
    const auto best = integer_schedule(opt.n, *opt.s);
    const auto real = real_schedule(opt.n, *opt.s);
    if (opt.format == "json") {
        std::cout << schedule_analysis(opt.n, *opt.s).dump(2) << '\n';
        return kExitOk;
    }
    if (opt.format == "csv") {
        std::cout << "n,s,sizes,expected_total,expected_total_decimal,expected_rank\n";
        std::vector<std::string> ranks;
        for (const auto& r : best.report.expected_rank) {
            ranks.push_back(r.to_string());
        }
        std::cout << fmt::format("{},{},{},{},{}\n", opt.n, *opt.s, join_sizes(best.schedule.sizes(), "|"),
                                 csv_rational(best.report.expected_total), fmt::join(ranks, "|"));
        return kExitOk;
    }
    std::cout << fmt::format("N = {}, s = {}\n", opt.n, *opt.s);
    std::cout << fmt::format("  schedule  {}\n", join_sizes(best.schedule.sizes(), " -> "));
    std::cout << fmt::format("  total     {}  ({})\n", best.report.expected_total.to_string(),
                             short_decimal(best.report.expected_total));
    std::cout << fmt::format("  common rank without rounding  {}\n", short_decimal(best.report.ideal_common_rank));
    std::cout << fmt::format("  {:>6}  {:>6}  {:>9}  {}\n", "person", "C_i", "real C_i", "E(R_i)");
    for (std::size_t i = 0; i < best.report.expected_rank.size(); ++i) {
        const auto& rank = best.report.expected_rank[i];
        std::cout << fmt::format("  {:>6}  {:>6}  {:>9}  {} ({})\n", i + 1, best.schedule[i + 1],
                                 short_decimal(real[i + 1]), short_decimal(rank), rank.to_string());
    }
    return kExitOk;
}

int analyze(const AnalyzeOptions& opt) {
    require_range("--n", opt.n, 1, kMaxAnalysisMenu);
    if (opt.to && (opt.k || opt.s)) {
        throw UsageError("--to only applies to the comparison table");
    }
    if (opt.k) {
        return analyze_two_party(opt);
    }
    if (opt.s) {
        return analyze_schedule(opt);
    }
    require_range("--to", opt.to.value_or(opt.n), 1, kMaxAnalysisMenu);
    return analyze_comparison(opt);
}

// ---------------------------------------------------------------- oracle

int oracle(std::int64_t n, const std::string& format) {
    require_range("--n", n, 1, kMaxOracleMenu);
    const BigInt closed = a129591_closed(n);
    std::optional<BigInt> brute;
    if (n <= kOracleBruteCap) {
        brute = a129591_brute(n, kOracleBruteCap);
    } else {
        std::cerr << fmt::format("note: N = {} is above the enumeration cap of {}; closed formula only\n", n,
                                 kOracleBruteCap);
    }
    const bool match = !brute || *brute == closed;
    const Rational expectation = Rational(closed) / Rational(factorial(n));

    if (format == "json") {
        json out{{"n", n},
                 {"closed_form", closed.str()},
                 {"brute_force", brute ? json(brute->str()) : json(nullptr)},
                 {"expectation", to_json(expectation)},
                 {"verdict", brute ? (match ? "MATCH" : "MISMATCH") : "UNCHECKED"}};
        std::cout << out.dump(2) << '\n';
    } else {
        std::cout << fmt::format("A129591({})\n", n);
        std::cout << fmt::format("  closed formula  {}\n", closed.str());
        if (brute) {
            std::cout << fmt::format("  brute force     {}\n", brute->str());
        }
        std::cout << fmt::format("  expected minimum rank sum  {}\n", expectation.to_decimal(4));
        if (brute) {
            std::cout << fmt::format("{} {}\n", closed.str(), paint(match ? "MATCH" : "MISMATCH", match));
        }
    }
    return match ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::int64_t n = 0;
    std::optional<std::int64_t> k;
    std::optional<std::string> schedule;
    std::uint64_t trials = 0;
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;
    std::string format = "table";
};

ShortlistSchedule parse_schedule(std::int64_t n, const std::string& text) {
    std::vector<std::int64_t> sizes{n};
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        std::int64_t value = 0;
        const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (part.empty() || ec != std::errc{} || end != part.data() + part.size()) {
            throw UsageError(fmt::format("malformed --schedule '{}': '{}' is not an integer", text, part));
        }
        sizes.push_back(value);
    }
    if (text.empty() || text.back() == ',') {
        throw UsageError(fmt::format("malformed --schedule '{}'", text));
    }
    sizes.push_back(1);
    try {
        return ShortlistSchedule(std::move(sizes));
    } catch (const std::invalid_argument& e) {
        throw UsageError(fmt::format("invalid --schedule '{}': {}", text, e.what()));
    }
}

double z_score(double observed, double exact, double se) {
    if (se == 0.0) {
        return observed == exact ? 0.0 : INFINITY;
    }
    return (observed - exact) / se;
}

int simulate_cmd(const SimulateOptions& opt) {
    require_range("--n", opt.n, 1, 1'000'000);
    if (opt.trials < 1 || opt.trials > 1'000'000'000) {
        throw UsageError(fmt::format("--trials must be in 1..1000000000, got {}", opt.trials));
    }
    ShortlistSchedule schedule{{opt.n, 1}};
    if (opt.schedule) {
        schedule = parse_schedule(opt.n, *opt.schedule);
    } else {
        const std::int64_t k = opt.k.value_or(opt.n == 1 ? 1 : optimal_integer_k(opt.n).canonical());
        require_range("--k", k, 1, opt.n);
        schedule = ShortlistSchedule({opt.n, k, 1});
    }
    const std::uint64_t seed = opt.seed.value_or(std::random_device{}() * 0x100000000ULL + std::random_device{}());

    const auto summary = simulate({schedule, opt.trials, seed, opt.workers});
    const auto exact = multi_party_report(schedule);

    std::vector<double> z;
    for (std::size_t i = 0; i < exact.expected_rank.size(); ++i) {
        z.push_back(z_score(summary.mean_rank[i], exact.expected_rank[i].to_double(), summary.standard_error[i]));
    }
    const double z_total =
        z_score(summary.mean_total, exact.expected_total.to_double(), summary.standard_error_total);
    std::optional<double> z_second;
    std::optional<ProtocolReport> two;
    if (schedule.participants() == 2) {
        two = second_moments({schedule[0], schedule[1]});
        z_second = z_score(*summary.second_moment_diff, two->second_moment_diff.to_double(),
                           *summary.standard_error_second_moment_diff);
    }
    double worst = std::abs(z_total);
    for (double v : z) {
        worst = std::max(worst, std::abs(v));
    }
    if (z_second) {
        worst = std::max(worst, std::abs(*z_second));
    }
    const bool pass = worst <= kHardFailZ;

    if (opt.format == "json") {
        json out{{"schedule", schedule.sizes()},
                 {"summary", to_json(summary)},
                 {"exact_rank", json::array()},
                 {"exact_total", to_json(exact.expected_total)},
                 {"z", z},
                 {"z_total", z_total},
                 {"max_abs_z", worst},
                 {"verdict", pass ? "PASS" : "FAIL"}};
        for (const auto& r : exact.expected_rank) {
            out["exact_rank"].push_back(to_json(r));
        }
        if (two) {
            out["exact_second_moment_diff"] = to_json(two->second_moment_diff);
            out["z_second_moment_diff"] = *z_second;
            out["sigma_bound"] = two->sigma_bound;
        }
        std::cout << out.dump(2) << '\n';
    } else if (opt.format == "csv") {
        std::cout << "quantity,exact,exact_decimal,mean,standard_error,z\n";
        for (std::size_t i = 0; i < z.size(); ++i) {
            std::cout << fmt::format("rank_{},{},{:.12f},{:.12f},{:.6f}\n", i + 1,
                                     csv_rational(exact.expected_rank[i]), summary.mean_rank[i],
                                     summary.standard_error[i], z[i]);
        }
        std::cout << fmt::format("total,{},{:.12f},{:.12f},{:.6f}\n", csv_rational(exact.expected_total),
                                 summary.mean_total, summary.standard_error_total, z_total);
        if (two) {
            std::cout << fmt::format("second_moment_diff,{},{:.12f},{:.12f},{:.6f}\n",
                                     csv_rational(two->second_moment_diff), *summary.second_moment_diff,
                                     *summary.standard_error_second_moment_diff, *z_second);
        }
    } else {
        std::cout << fmt::format("schedule {}, {} trials, seed {}\n", join_sizes(schedule.sizes(), " -> "),
                                 summary.trials, summary.seed);
        std::cout << fmt::format("  {:<12} {:>12} {:>12} {:>10} {:>8}\n", "", "exact", "mean", "std err", "z");
        auto line = [](const std::string& label, const Rational& ex, double mean, double se, double zv) {
            std::cout << fmt::format("  {:<12} {:>12.6f} {:>12.6f} {:>10.6f} {:>8.2f}\n", label, ex.to_double(),
                                     mean, se, zv);
        };
        for (std::size_t i = 0; i < z.size(); ++i) {
            line(fmt::format("person {}", i + 1), exact.expected_rank[i], summary.mean_rank[i],
                 summary.standard_error[i], z[i]);
        }
        line("total", exact.expected_total, summary.mean_total, summary.standard_error_total, z_total);
        if (two) {
            line("E((T-D)^2)", two->second_moment_diff, *summary.second_moment_diff,
                 *summary.standard_error_second_moment_diff, *z_second);
            std::cout << fmt::format("  E|T-D| = {:.6f} (std err {:.6f}); sqrt(2(N+1)/3) = {:.6f}\n",
                                     *summary.mean_abs_diff, *summary.standard_error_abs_diff, two->sigma_bound);
        }
        std::cout << fmt::format("max |z| = {:.2f}  {}\n", worst, paint(pass ? "PASS" : "FAIL", pass));
    }
    if (!pass) {
        std::cerr << fmt::format("simulation disagrees with theory: |z| = {:.2f} > {}\n", worst, kHardFailZ);
    }
    return pass ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------- serve

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') {
        return std::nullopt;
    }
    return std::string(v);
}

int serve(std::optional<int> port_flag, const std::string& host, std::optional<std::string> log_flag) {
    int port = 8080;
    if (port_flag) {
        port = *port_flag;
    } else if (auto p = env("SHORTLIST_PORT")) {
        try {
            std::size_t used = 0;
            port = std::stoi(*p, &used);
            if (used != p->size()) {
                throw std::invalid_argument(*p);
            }
        } catch (const std::exception&) {
            throw UsageError(fmt::format("SHORTLIST_PORT is not a port number: '{}'", *p));
        }
    }
    require_range("--port", port, 0, 65535);
    if (!log_flag) {
        log_flag = env("SHORTLIST_LOG");
    }

    // SIGINT/SIGTERM are taken synchronously by a watcher thread, so block
    // them before the server spawns its workers.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    ApiService::Options options;
    if (log_flag) {
        options.store.log_path = *log_flag;
    }
    ApiService service(std::move(options));
    const int bound = service.bind(host, port);
    std::cout << fmt::format("listening on http://{}:{}", host, bound) << std::endl;
    if (log_flag) {
        std::cout << fmt::format("session log {} ({} sessions loaded)", *log_flag, service.sessions().size())
                  << std::endl;
    }

    std::thread watcher([&service, signals] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    service.run();
    // run() can also end without a signal; wake the watcher so it can exit
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    return kExitOk;
}

const char* const kCsvHelp = R"(CSV columns:
  analyze (default)  n, brute_force, brute_force_decimal, ideal_k, ideal_total,
                     optimal_k (ties joined by '|'), integer_total, integer_total_decimal
  analyze --k        n, k, then fraction and decimal columns for expected_chooser,
                     expected_proposer, expected_total, fairness_gap, second_moment_diff,
                     variance_diff, and finally sigma_bound
  analyze --s        n, s, sizes ('|'-joined), expected_total, expected_total_decimal,
                     expected_rank ('|'-joined fractions)
  simulate           quantity, exact, exact_decimal, mean, standard_error, z
Fractions are written p/q; brute_force is empty above N = 20.
Exit codes: 0 success, 1 usage error, 2 verification failure.
Colour is disabled when NO_COLOR is set or stdout is not a terminal.)";

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal shortlist sizes for groups choosing one item from a menu"};
    app.require_subcommand(1);
    app.footer(kCsvHelp);

    const std::vector<std::string> formats{"table", "json", "csv"};

    AnalyzeOptions an;
    auto* analyze_cmd = app.add_subcommand("analyze", "Expected total rank for two people, or an s-person schedule");
    analyze_cmd->add_option("--n", an.n, "Menu size N")->required();
    analyze_cmd->add_option("--to", an.to, "Print rows for N..TO");
    auto* k_opt = analyze_cmd->add_option("--k", an.k, "Shortlist size K for a two-person report");
    auto* s_opt = analyze_cmd->add_option("--s", an.s, "Number of people for a schedule report");
    k_opt->excludes(s_opt);
    analyze_cmd->add_option("--format", an.format, "table, json or csv")->check(CLI::IsMember(formats));

    std::int64_t oracle_n = 0;
    std::string oracle_format = "table";
    auto* oracle_cmd = app.add_subcommand("oracle", "Check A129591 by enumeration against the closed formula");
    oracle_cmd->add_option("--n", oracle_n, "Menu size N (enumeration up to 8)")->required();
    oracle_cmd->add_option("--format", oracle_format, "table or json")->check(CLI::IsMember({"table", "json"}));

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo check of expected ranks");
    sim_cmd->add_option("--n", sim.n, "Menu size N")->required();
    auto* sk = sim_cmd->add_option("--k", sim.k, "Two-person shortlist size (default: optimal K)");
    auto* ss = sim_cmd->add_option("--schedule", sim.schedule,
                                   "Shortlist sizes after the menu, comma separated; the final 1 is implied");
    sk->excludes(ss);
    sim_cmd->add_option("--trials", sim.trials, "Number of trials")->required();
    sim_cmd->add_option("--seed", sim.seed, "Random seed (default: random, printed)");
    sim_cmd->add_option("--workers", sim.workers, "Worker threads (0 = all cores)");
    sim_cmd->add_option("--format", sim.format, "table, json or csv")->check(CLI::IsMember(formats));

    std::optional<int> port;
    std::string host = "127.0.0.1";
    std::optional<std::string> log;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--port", port, "Port, 0 for any free port (env SHORTLIST_PORT, default 8080)");
    serve_cmd->add_option("--host", host, "Address to bind");
    serve_cmd->add_option("--log", log, "Append-only session log (env SHORTLIST_LOG)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*analyze_cmd) {
            return analyze(an);
        }
        if (*oracle_cmd) {
            return oracle(oracle_n, oracle_format);
        }
        if (*sim_cmd) {
            return simulate_cmd(sim);
        }
        if (*serve_cmd) {
            return serve(port, host, log);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
