#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "shortlist/session.hpp"
#include "shortlist/simulator.hpp"

using namespace shortlist;
namespace fs = std::filesystem;

namespace {

std::vector<MenuItem> menu_of(std::int64_t n) {
    std::vector<MenuItem> items;
    for (std::int64_t i = 1; i <= n; ++i) {
        items.push_back({std::to_string(i), "dessert " + std::to_string(i)});
    }
    return items;
}

std::vector<std::string> people(std::int64_t s) {
    static const char* const names[] = {"Dan", "Tanya", "Eric", "Ann", "Bo", "Cy", "Di", "Ed"};
    std::vector<std::string> out;
    for (std::int64_t i = 0; i < s; ++i) {
        out.push_back(i < 8 ? names[i] : "p" + std::to_string(i));
    }
    return out;
}

SessionStore::Options counting_options() {
    auto counter = std::make_shared<std::atomic<int>>(0);
    return {std::nullopt, [counter] { return "s" + std::to_string((*counter)++); }, [] { return std::string("t"); }};
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const SessionError& e) {
        return e.code();
    }
    FAIL("expected a SessionError");
    return ErrorCode::conflict;
}

// Replay ignores timestamps, so compare everything else.
void check_replays(const SessionStore& store, const std::string& id) {
    const auto events = store.events(id);
    REQUIRE(replay(events) == store.get(id));

    std::vector<SessionEvent> round_trip;
    for (std::size_t i = 0; i < events.size(); ++i) {
        REQUIRE(events[i].seq == i);
        round_trip.push_back(event_from_json(nlohmann::json::parse(to_json(events[i]).dump())));
    }
    REQUIRE(round_trip == events);
    REQUIRE(replay(round_trip) == store.get(id));
}

struct TempLog {
    fs::path path;
    explicit TempLog(const std::string& name) : path(fs::temp_directory_path() / name) { fs::remove(path); }
    ~TempLog() { fs::remove(path); }
};

} // namespace

TEST_CASE("menus") {
    CHECK(Menu(menu_of(3)).size() == 3);
    CHECK(Menu(menu_of(3)).index_of("2") == 1u);
    CHECK_FALSE(Menu(menu_of(3)).index_of("9").has_value());
    CHECK(code_of([] { Menu(std::vector<MenuItem>{}); }) == ErrorCode::invalid_params);
    CHECK(code_of([] { Menu(std::vector<MenuItem>{{"a", "x"}, {"a", "y"}}); }) == ErrorCode::invalid_params);
    CHECK(code_of([] { Menu(std::vector<MenuItem>{{"", "x"}}); }) == ErrorCode::invalid_params);
}

TEST_CASE("error codes map to http statuses") {
    CHECK(http_status(ErrorCode::invalid_params) == 400);
    CHECK(http_status(ErrorCode::not_found) == 404);
    CHECK(http_status(ErrorCode::wrong_turn) == 409);
    CHECK(http_status(ErrorCode::conflict) == 409);
    CHECK(http_status(ErrorCode::wrong_count) == 422);
    CHECK(http_status(ErrorCode::item_not_offered) == 422);
    CHECK(to_string(ErrorCode::item_not_offered) == "item_not_offered");
}

TEST_CASE("default schedules") {
    SessionStore store(counting_options());
    auto st = store.create(menu_of(12), {"Dan", "Tanya", "Eric"});
    CHECK(st.schedule.sizes() == std::vector<std::int64_t>{12, 6, 3, 1});
    CHECK(st.turn == 1);
    CHECK(st.offered.size() == 12);
    CHECK(st.required_count() == 6);
    CHECK(st.status == SessionStatus::awaiting_shortlist);
    CHECK(st.id == "s0");

    st = store.create(menu_of(7), {"Dan", "Tanya"});
    CHECK(st.schedule.sizes() == std::vector<std::int64_t>{7, 3, 1});

    st = store.create(menu_of(1), people(4));
    CHECK(st.schedule.sizes() == std::vector<std::int64_t>{1, 1, 1, 1, 1});

    // schedule fidelity
    for (std::int64_t n = 1; n <= 15; ++n) {
        for (std::int64_t s = 1; s <= 4; ++s) {
            REQUIRE(store.create(menu_of(n), people(s)).schedule == integer_schedule(n, s).schedule);
        }
    }
}

TEST_CASE("creation errors") {
    SessionStore store(counting_options());
    CHECK(code_of([&] { store.create({}, {"Dan"}); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.create(menu_of(3), {}); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.create(menu_of(3), {"Dan", ""}); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.create(menu_of(3), people(kMaxParticipants + 1)); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.create(menu_of(kMaxSessionMenu + 1), {"Dan"}); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.create(menu_of(6), people(2), std::vector<std::int64_t>{6, 3}); }) ==
          ErrorCode::invalid_params);
    CHECK(code_of([&] { store.create(menu_of(6), people(2), std::vector<std::int64_t>{5, 3, 1}); }) ==
          ErrorCode::invalid_params);
    CHECK(code_of([&] { store.create(menu_of(6), people(2), std::vector<std::int64_t>{6, 7, 1}); }) ==
          ErrorCode::invalid_params);
    CHECK(code_of([&] { store.create(menu_of(6), people(2), std::vector<std::int64_t>{6, 3, 2}); }) ==
          ErrorCode::invalid_params);
    CHECK(code_of([&] { store.create(menu_of(6), people(2), std::vector<std::int64_t>{6, 0, 1}); }) ==
          ErrorCode::invalid_params);
    CHECK(store.size() == 0);

    const auto st = store.create(menu_of(6), people(2), std::vector<std::int64_t>{6, 2, 1});
    CHECK(st.schedule.sizes() == std::vector<std::int64_t>{6, 2, 1});
}

TEST_CASE("a six-item session runs to completion") {
    SessionStore store(counting_options());
    const auto id = store.create(menu_of(6), {"Dan", "Tanya"}).id;
    REQUIRE(store.get(id).schedule.sizes() == std::vector<std::int64_t>{6, 3, 1});

    // wrong count leaves the state untouched
    const auto before = store.get(id);
    CHECK(code_of([&] { store.submit_shortlist(id, 1, {"1", "2", "3", "4"}); }) == ErrorCode::wrong_count);
    CHECK(store.get(id) == before);
    CHECK(store.events(id).size() == 1);

    auto st = store.submit_shortlist(id, 1, {"5", "1", "3"});
    CHECK(st.turn == 2);
    CHECK(st.offered == std::vector<std::string>{"1", "3", "5"}); // menu order
    CHECK(st.required_count() == 1);
    REQUIRE(st.history.size() == 1);
    CHECK(st.history[0].participant == 1);

    st = store.submit_shortlist(id, 2, {"3"});
    CHECK(st.status == SessionStatus::complete);
    CHECK(st.final_choice == "3");
    CHECK(st.turn == 0);
    CHECK(st.offered == std::vector<std::string>{"3"});
    CHECK(st.required_count() == 0);

    const auto events = store.events(id);
    REQUIRE(events.size() == 4);
    CHECK(events[0].kind == EventKind::created);
    CHECK(events[1].kind == EventKind::shortlist_submitted);
    CHECK(events[2].kind == EventKind::shortlist_submitted);
    CHECK(events[3].kind == EventKind::completed);
    check_replays(store, id);

    CHECK(code_of([&] { store.submit_shortlist(id, 2, {"3"}); }) == ErrorCode::conflict);
    CHECK(code_of([&] { store.abort(id, "late"); }) == ErrorCode::conflict);
}

TEST_CASE("submission errors") {
    SessionStore store(counting_options());
    const auto id = store.create(menu_of(12), people(3)).id;
    const auto six = std::vector<std::string>{"1", "2", "3", "4", "5", "6"};

    CHECK(code_of([&] { store.submit_shortlist("nope", 1, six); }) == ErrorCode::not_found);
    CHECK(code_of([&] { store.submit_shortlist(id, 2, {"1", "2", "3"}); }) == ErrorCode::wrong_turn);
    CHECK(code_of([&] { store.submit_shortlist(id, 0, six); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.submit_shortlist(id, 4, six); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.submit_shortlist(id, 1, {"1", "1", "2", "3", "4", "5"}); }) ==
          ErrorCode::invalid_params);
    CHECK(code_of([&] { store.submit_shortlist(id, 1, {"1", "2", "3", "4", "5", "zz"}); }) ==
          ErrorCode::item_not_offered);
    CHECK(code_of([&] { store.submit_shortlist(id, 1, {}); }) == ErrorCode::wrong_count);

    store.submit_shortlist(id, 1, six);
    CHECK(code_of([&] { store.submit_shortlist(id, 1, six); }) == ErrorCode::conflict);
    CHECK(code_of([&] { store.submit_shortlist(id, 3, {"1"}); }) == ErrorCode::wrong_turn);
    // item 7 was on the menu but is no longer offered
    CHECK(code_of([&] { store.submit_shortlist(id, 2, {"1", "2", "7"}); }) == ErrorCode::item_not_offered);
    CHECK(store.get(id).turn == 2);
    check_replays(store, id);
}

TEST_CASE("aborted sessions accept nothing further") {
    SessionStore store(counting_options());
    const auto id = store.create(menu_of(5), people(2)).id;
    const auto st = store.abort(id, "dinner cancelled");
    CHECK(st.status == SessionStatus::aborted);
    CHECK(st.turn == 0);
    CHECK_FALSE(st.final_choice.has_value());
    CHECK(code_of([&] { store.submit_shortlist(id, 1, {"1", "2"}); }) == ErrorCode::conflict);
    CHECK(code_of([&] { store.abort(id, "again"); }) == ErrorCode::conflict);
    CHECK(code_of([&] { store.report(id, std::nullopt); }) == ErrorCode::conflict);
    check_replays(store, id);
}

TEST_CASE("single-item menu") {
    SessionStore store(counting_options());
    const auto id = store.create(menu_of(1), people(3)).id;
    for (std::int64_t p = 1; p <= 3; ++p) {
        REQUIRE(store.get(id).required_count() == 1);
        store.submit_shortlist(id, p, {"1"});
    }
    CHECK(store.get(id).final_choice == "1");
    const auto report = store.report(id, std::vector<std::vector<std::int64_t>>{{1}, {1}, {1}});
    CHECK(*report.realized_rank == std::vector<std::int64_t>{1, 1, 1});
    CHECK(report.realized_total == 3);
}

TEST_CASE("Dan offers three of six and the realized ranks are (3, 4)") {
    SessionStore store(counting_options());
    const auto id = store.create(menu_of(6), {"Dan", "Tanya"}, std::vector<std::int64_t>{6, 3, 1}).id;
    const std::vector<std::int64_t> dan{1, 2, 3, 4, 5, 6};
    const std::vector<std::int64_t> tanya{5, 6, 4, 3, 2, 1};

    store.submit_shortlist(id, 1, {"1", "2", "3"});
    // Tanya keeps her favourite of the three
    store.submit_shortlist(id, 2, {"3"});

    CHECK(code_of([&] { store.report("missing", std::nullopt); }) == ErrorCode::not_found);
    const auto report = store.report(id, std::vector<std::vector<std::int64_t>>{dan, tanya});
    CHECK(report.final_choice == "3");
    CHECK(*report.realized_rank == std::vector<std::int64_t>{3, 4});
    CHECK(report.realized_total == 7);
    CHECK(report.expected.expected_total == Rational(BigInt(15), BigInt(4)));
    CHECK(report.expected.expected_rank[0] == 2);
    CHECK(report.expected.expected_rank[1] == Rational(BigInt(7), BigInt(4)));

    const auto bare = store.report(id, std::nullopt);
    CHECK_FALSE(bare.realized_rank.has_value());

    using Rankings = std::vector<std::vector<std::int64_t>>;
    CHECK(code_of([&] { store.report(id, Rankings{dan}); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.report(id, Rankings{dan, {1, 2, 3}}); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.report(id, Rankings{dan, {1, 1, 2, 3, 4, 5}}); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { store.report(id, Rankings{dan, {0, 1, 2, 3, 4, 5}}); }) == ErrorCode::invalid_params);

    const auto incomplete = store.create(menu_of(6), {"Dan", "Tanya"}).id;
    CHECK(code_of([&] { store.report(incomplete, std::nullopt); }) == ErrorCode::conflict);
}

TEST_CASE("random sessions keep every invariant") {
    SplitMix64 rng(2024);
    SessionStore store(counting_options());
    for (int round = 0; round < 300; ++round) {
        const auto n = static_cast<std::int64_t>(rng.below(30)) + 1;
        const auto s = static_cast<std::int64_t>(rng.below(5)) + 1;
        const auto id = store.create(menu_of(n), people(s)).id;
        std::set<std::string> alive;
        for (std::int64_t i = 1; i <= n; ++i) {
            alive.insert(std::to_string(i));
        }
        std::size_t previous = static_cast<std::size_t>(n);

        for (std::int64_t p = 1; p <= s; ++p) {
            const auto st = store.get(id);
            REQUIRE(st.turn == p);
            REQUIRE(static_cast<std::int64_t>(st.offered.size()) == st.schedule[static_cast<std::size_t>(p - 1)]);

            // a few rejected attempts first; none may change the state
            auto pool = st.offered;
            const auto need = static_cast<std::size_t>(st.required_count());
            if (need < pool.size()) {
                std::vector<std::string> too_many(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(need + 1));
                REQUIRE(code_of([&] { store.submit_shortlist(id, p, too_many); }) == ErrorCode::wrong_count);
            }
            if (p < s) {
                REQUIRE(code_of([&] { store.submit_shortlist(id, p + 1, {pool.front()}); }) == ErrorCode::wrong_turn);
            }
            REQUIRE(store.get(id) == st);

            // random valid subset
            for (std::size_t i = pool.size(); i > 1; --i) {
                std::swap(pool[i - 1], pool[rng.below(i)]);
            }
            pool.resize(need);
            const auto next = store.submit_shortlist(id, p, pool);

            for (const auto& item : next.offered) {
                REQUIRE(alive.contains(item));
            }
            alive = std::set<std::string>(next.offered.begin(), next.offered.end());
            REQUIRE(alive.size() == need);
            if (st.schedule.strictly_decreasing()) {
                REQUIRE(next.offered.size() < previous);
            }
            previous = next.offered.size();
        }

        const auto done = store.get(id);
        REQUIRE(done.status == SessionStatus::complete);
        REQUIRE(done.final_choice.has_value());
        REQUIRE(done.history.back().items == std::vector<std::string>{*done.final_choice});
        REQUIRE(alive.contains(*done.final_choice));
        check_replays(store, id);
    }
}

TEST_CASE("concurrent duplicate submissions: exactly one wins") {
    SessionStore store(counting_options());
    for (int round = 0; round < 20; ++round) {
        const auto id = store.create(menu_of(12), people(3)).id;
        std::atomic<int> wins{0}, conflicts{0};
        std::vector<std::thread> threads;
        for (int t = 0; t < 8; ++t) {
            threads.emplace_back([&, t] {
                std::vector<std::string> pick;
                for (int i = 0; i < 6; ++i) {
                    pick.push_back(std::to_string((t + i) % 12 + 1));
                }
                try {
                    store.submit_shortlist(id, 1, pick);
                    ++wins;
                } catch (const SessionError& e) {
                    if (e.code() == ErrorCode::conflict) {
                        ++conflicts;
                    }
                }
            });
        }
        for (auto& th : threads) {
            th.join();
        }
        REQUIRE(wins == 1);
        REQUIRE(conflicts == 7);
        REQUIRE(store.events(id).size() == 2);
        check_replays(store, id);
    }
}

TEST_CASE("distinct sessions proceed in parallel") {
    SessionStore store(counting_options());
    std::vector<std::thread> threads;
    std::atomic<int> completed{0};
    for (int t = 0; t < 6; ++t) {
        threads.emplace_back([&] {
            for (int r = 0; r < 25; ++r) {
                const auto id = store.create(menu_of(12), people(3)).id;
                store.submit_shortlist(id, 1, {"1", "2", "3", "4", "5", "6"});
                store.submit_shortlist(id, 2, {"2", "4", "6"});
                store.submit_shortlist(id, 3, {"4"});
                if (store.get(id).final_choice == "4") {
                    ++completed;
                }
            }
        });
    }
    for (auto& th : threads) {
        th.join();
    }
    CHECK(completed == 150);
    CHECK(store.size() == 150);
}

TEST_CASE("file-backed log survives a restart") {
    TempLog log("shortlist_session_test.jsonl");
    std::vector<SessionState> states;
    std::vector<std::vector<SessionEvent>> logs;
    {
        SessionStore::Options options = counting_options();
        options.log_path = log.path;
        SessionStore store(options);
        const auto a = store.create(menu_of(12), people(3)).id;
        const auto b = store.create(menu_of(7), people(2)).id;
        store.submit_shortlist(a, 1, {"1", "2", "3", "4", "5", "6"});
        store.submit_shortlist(b, 1, {"7", "6", "5"});
        store.submit_shortlist(b, 2, {"6"});
        const auto c = store.create(menu_of(4), people(2)).id;
        store.abort(c, "no");
        for (const auto& id : {a, b, c}) {
            states.push_back(store.get(id));
            logs.push_back(store.events(id));
        }
    }

    // every line is a self-describing record
    std::ifstream in(log.path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        for (const char* field : {"session_id", "seq", "kind", "payload", "timestamp"}) {
            REQUIRE(j.contains(field));
        }
        ++lines;
    }
    CHECK(lines == 8);

    SessionStore::Options options = counting_options();
    options.log_path = log.path;
    {
        SessionStore reloaded(options);
        REQUIRE(reloaded.size() == 3);
        for (std::size_t i = 0; i < states.size(); ++i) {
            CHECK(reloaded.get(states[i].id) == states[i]);
            CHECK(reloaded.events(states[i].id) == logs[i]);
        }
        // carries on where it left off; the generator skips ids already taken
        reloaded.submit_shortlist(states[0].id, 2, {"2", "4", "6"});
        CHECK(reloaded.events(states[0].id).back().seq == 2);
        const auto fresh = reloaded.create(menu_of(3), people(1));
        CHECK(fresh.id == "s3");
    }
    SessionStore again(options);
    CHECK(again.get(states[0].id).turn == 3);
    CHECK(again.size() == 4);
}

TEST_CASE("a corrupt log is reported, not ignored") {
    TempLog log("shortlist_session_bad.jsonl");
    {
        std::ofstream out(log.path);
        out << "{\"not\": \"an event\"}\n";
    }
    SessionStore::Options options;
    options.log_path = log.path;
    CHECK_THROWS_AS(SessionStore{options}, std::runtime_error);
}

TEST_CASE("replay rejects malformed logs") {
    SessionStore store(counting_options());
    const auto id = store.create(menu_of(3), people(2)).id;
    store.submit_shortlist(id, 1, {"1", "2"});
    auto events = store.events(id);
    CHECK_THROWS_AS(replay(std::span<const SessionEvent>(events).subspan(1)), std::invalid_argument);
    events[1].seq = 5;
    CHECK_THROWS_AS(replay(events), std::invalid_argument);
    CHECK_THROWS_AS(replay(std::span<const SessionEvent>{}), std::invalid_argument);
    CHECK_THROWS_AS(event_kind_from_string("exploded"), std::invalid_argument);
}
