#include "shortlist/session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <random>
#include <unordered_set>

#include <fmt/format.h>

#include "shortlist/oracle.hpp"

namespace shortlist {

using nlohmann::json;

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_params: return "invalid_params";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::wrong_turn: return "wrong_turn";
    case ErrorCode::wrong_count: return "wrong_count";
    case ErrorCode::item_not_offered: return "item_not_offered";
    case ErrorCode::conflict: return "conflict";
    }
    return "invalid_params";
}

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_params: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::wrong_turn: return 409;
    case ErrorCode::conflict: return 409;
    case ErrorCode::wrong_count: return 422;
    case ErrorCode::item_not_offered: return 422;
    }
    return 400;
}

std::string_view to_string(SessionStatus status) {
    switch (status) {
    case SessionStatus::awaiting_shortlist: return "awaiting_shortlist";
    case SessionStatus::complete: return "complete";
    case SessionStatus::aborted: return "aborted";
    }
    return "aborted";
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::created: return "created";
    case EventKind::shortlist_submitted: return "shortlist_submitted";
    case EventKind::completed: return "completed";
    case EventKind::aborted: return "aborted";
    }
    return "aborted";
}

EventKind event_kind_from_string(std::string_view text) {
    for (auto kind : {EventKind::created, EventKind::shortlist_submitted, EventKind::completed,
                      EventKind::aborted}) {
        if (to_string(kind) == text) {
            return kind;
        }
    }
    throw std::invalid_argument(fmt::format("unknown event kind '{}'", text));
}

Menu::Menu(std::vector<MenuItem> items) : items_(std::move(items)) {
    if (items_.empty()) {
        throw SessionError(ErrorCode::invalid_params, "menu must contain at least one item");
    }
    std::unordered_set<std::string> seen;
    for (const auto& item : items_) {
        if (item.id.empty()) {
            throw SessionError(ErrorCode::invalid_params, "menu item ids must be non-empty");
        }
        if (!seen.insert(item.id).second) {
            throw SessionError(ErrorCode::invalid_params, fmt::format("duplicate menu item id '{}'", item.id));
        }
    }
}

std::optional<std::size_t> Menu::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].id == id) {
            return i;
        }
    }
    return std::nullopt;
}

std::int64_t SessionState::required_count() const {
    if (status != SessionStatus::awaiting_shortlist || turn < 1) {
        return 0;
    }
    return schedule[static_cast<std::size_t>(turn)];
}

json to_json(const SessionEvent& event) {
    return json{{"session_id", event.session_id},
                {"seq", event.seq},
                {"kind", to_string(event.kind)},
                {"payload", event.payload},
                {"timestamp", event.timestamp}};
}

SessionEvent event_from_json(const json& j) {
    SessionEvent event;
    event.session_id = j.at("session_id").get<std::string>();
    event.seq = j.at("seq").get<std::uint64_t>();
    event.kind = event_kind_from_string(j.at("kind").get<std::string>());
    event.payload = j.at("payload");
    event.timestamp = j.at("timestamp").get<std::string>();
    return event;
}

void apply_event(SessionState& state, const SessionEvent& event) {
    const json& p = event.payload;
    switch (event.kind) {
    case EventKind::created: {
        std::vector<MenuItem> items;
        for (const auto& item : p.at("menu")) {
            items.push_back({item.at("id").get<std::string>(), item.at("label").get<std::string>()});
        }
        state = SessionState{};
        state.id = event.session_id;
        state.menu = Menu(std::move(items));
        state.participants = p.at("participants").get<std::vector<std::string>>();
        state.schedule = ShortlistSchedule(p.at("schedule").get<std::vector<std::int64_t>>());
        state.turn = 1;
        for (const auto& item : state.menu.items()) {
            state.offered.push_back(item.id);
        }
        state.status = SessionStatus::awaiting_shortlist;
        break;
    }
    case EventKind::shortlist_submitted: {
        const auto participant = p.at("participant_index").get<std::int64_t>();
        auto items = p.at("item_ids").get<std::vector<std::string>>();
        state.offered = items;
        state.history.push_back({participant, std::move(items), event.timestamp});
        if (participant < state.schedule.participants()) {
            state.turn = participant + 1;
        }
        break;
    }
    case EventKind::completed:
        state.final_choice = p.at("final_choice").get<std::string>();
        state.status = SessionStatus::complete;
        state.turn = 0;
        break;
    case EventKind::aborted:
        state.status = SessionStatus::aborted;
        state.turn = 0;
        break;
    }
}

SessionState replay(std::span<const SessionEvent> events) {
    if (events.empty() || events.front().kind != EventKind::created) {
        throw std::invalid_argument("a session log must start with a created event");
    }
    SessionState state;
    std::uint64_t expected_seq = 0;
    for (const auto& event : events) {
        if (event.seq != expected_seq++) {
            throw std::invalid_argument(
                fmt::format("session {}: event seq {} out of order", event.session_id, event.seq));
        }
        apply_event(state, event);
    }
    return state;
}

namespace {

std::string random_id() {
    static thread_local std::mt19937_64 gen{std::random_device{}()};
    return fmt::format("{:016x}", gen());
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto secs = std::chrono::system_clock::to_time_t(now);
    const auto millis =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    return fmt::format("{}.{:03d}Z", buf, millis);
}

} // namespace

SessionStore::SessionStore() : SessionStore(Options{}) {}

SessionStore::SessionStore(Options options) : options_(std::move(options)) {
    if (!options_.next_id) {
        options_.next_id = random_id;
    }
    if (!options_.now) {
        options_.now = utc_now;
    }
    if (options_.log_path) {
        if (std::filesystem::exists(*options_.log_path)) {
            load(*options_.log_path);
        }
        log_.open(*options_.log_path, std::ios::app);
        if (!log_) {
            throw std::runtime_error(fmt::format("cannot open session log {}", options_.log_path->string()));
        }
    }
}

SessionStore::~SessionStore() = default;

void SessionStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read session log {}", path.string()));
    }
    std::unordered_map<std::string, std::vector<SessionEvent>> grouped;
    std::vector<std::string> order;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            auto event = event_from_json(json::parse(line));
            auto [it, inserted] = grouped.try_emplace(event.session_id);
            if (inserted) {
                order.push_back(event.session_id);
            }
            it->second.push_back(std::move(event));
        } catch (const std::exception& e) {
            throw std::runtime_error(fmt::format("{}:{}: bad log record: {}", path.string(), line_no, e.what()));
        }
    }
    for (const auto& id : order) {
        auto entry = std::make_unique<Entry>();
        entry->log = std::move(grouped[id]);
        entry->state = replay(entry->log);
        sessions_.emplace(id, std::move(entry));
    }
}

SessionStore::Entry& SessionStore::find(const std::string& session_id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        throw SessionError(ErrorCode::not_found, fmt::format("no session '{}'", session_id));
    }
    return *it->second;
}

void SessionStore::record(Entry& entry, EventKind kind, json payload) {
    SessionEvent event{entry.state.id, entry.log.size(), kind, std::move(payload), options_.now()};
    if (log_.is_open()) {
        std::lock_guard lock(log_mutex_);
        log_ << to_json(event).dump() << '\n';
        log_.flush();
        if (!log_) {
            throw std::runtime_error("failed to append to the session log");
        }
    }
    apply_event(entry.state, event);
    entry.log.push_back(std::move(event));
}

SessionState SessionStore::create(std::vector<MenuItem> menu_items, std::vector<std::string> participants,
                                  std::optional<std::vector<std::int64_t>> schedule_override) {
    const Menu menu(std::move(menu_items));
    if (menu.size() > kMaxSessionMenu) {
        throw SessionError(ErrorCode::invalid_params,
                           fmt::format("menu has {} items; at most {} supported", menu.size(), kMaxSessionMenu));
    }
    if (participants.empty()) {
        throw SessionError(ErrorCode::invalid_params, "need at least one participant");
    }
    if (static_cast<std::int64_t>(participants.size()) > kMaxParticipants) {
        throw SessionError(ErrorCode::invalid_params,
                           fmt::format("at most {} participants supported", kMaxParticipants));
    }
    for (const auto& name : participants) {
        if (name.empty()) {
            throw SessionError(ErrorCode::invalid_params, "participant names must be non-empty");
        }
    }
    const auto s = static_cast<std::int64_t>(participants.size());

    std::vector<std::int64_t> sizes;
    if (schedule_override) {
        if (static_cast<std::int64_t>(schedule_override->size()) != s + 1) {
            throw SessionError(ErrorCode::invalid_params,
                               fmt::format("schedule must list {} sizes (C_0..C_s)", s + 1));
        }
        if (schedule_override->front() != menu.size()) {
            throw SessionError(ErrorCode::invalid_params, "schedule must start at the menu size");
        }
        try {
            sizes = ShortlistSchedule(*schedule_override).sizes();
        } catch (const std::invalid_argument& e) {
            throw SessionError(ErrorCode::invalid_params, e.what());
        }
    } else {
        sizes = integer_schedule(menu.size(), s).schedule.sizes();
    }

    json menu_json = json::array();
    for (const auto& item : menu.items()) {
        menu_json.push_back({{"id", item.id}, {"label", item.label}});
    }
    json payload{{"menu", std::move(menu_json)}, {"participants", participants}, {"schedule", sizes}};

    auto entry = std::make_unique<Entry>();
    std::unique_lock lock(sessions_mutex_);
    std::string id = options_.next_id();
    while (sessions_.contains(id)) {
        id = options_.next_id();
    }
    entry->state.id = id;
    record(*entry, EventKind::created, std::move(payload));
    SessionState snapshot = entry->state;
    sessions_.emplace(id, std::move(entry));
    return snapshot;
}

SessionState SessionStore::submit_shortlist(const std::string& session_id, std::int64_t participant_index,
                                            const std::vector<std::string>& item_ids) {
    Entry& entry = find(session_id);
    std::unique_lock lock(entry.mutex);
    const SessionState& state = entry.state;

    if (state.status != SessionStatus::awaiting_shortlist) {
        throw SessionError(ErrorCode::conflict,
                           fmt::format("session is {}; no further submissions", to_string(state.status)));
    }
    const std::int64_t s = state.schedule.participants();
    if (participant_index < 1 || participant_index > s) {
        throw SessionError(ErrorCode::invalid_params,
                           fmt::format("participant_index must be in 1..{}, got {}", s, participant_index));
    }
    if (participant_index < state.turn) {
        throw SessionError(ErrorCode::conflict,
                           fmt::format("participant {} has already submitted", participant_index));
    }
    if (participant_index > state.turn) {
        throw SessionError(ErrorCode::wrong_turn,
                           fmt::format("it is participant {}'s turn, not {}'s", state.turn, participant_index));
    }
    std::unordered_set<std::string> unique(item_ids.begin(), item_ids.end());
    if (unique.size() != item_ids.size()) {
        throw SessionError(ErrorCode::invalid_params, "shortlist contains duplicate items");
    }
    const std::int64_t need = state.required_count();
    if (static_cast<std::int64_t>(item_ids.size()) != need) {
        throw SessionError(ErrorCode::wrong_count,
                           fmt::format("expected {} items, got {}", need, item_ids.size()));
    }
    for (const auto& id : item_ids) {
        if (std::find(state.offered.begin(), state.offered.end(), id) == state.offered.end()) {
            throw SessionError(ErrorCode::item_not_offered, fmt::format("item '{}' is not on offer", id));
        }
    }

    std::vector<std::string> kept;
    for (const auto& id : state.offered) {
        if (unique.contains(id)) {
            kept.push_back(id);
        }
    }
    record(entry, EventKind::shortlist_submitted, json{{"participant_index", participant_index}, {"item_ids", kept}});
    if (participant_index == s) {
        record(entry, EventKind::completed, json{{"final_choice", kept.front()}});
    }
    return entry.state;
}

SessionState SessionStore::abort(const std::string& session_id, const std::string& reason) {
    Entry& entry = find(session_id);
    std::unique_lock lock(entry.mutex);
    if (entry.state.status != SessionStatus::awaiting_shortlist) {
        throw SessionError(ErrorCode::conflict,
                           fmt::format("session is already {}", to_string(entry.state.status)));
    }
    record(entry, EventKind::aborted, json{{"reason", reason}});
    return entry.state;
}

SessionState SessionStore::get(const std::string& session_id) const {
    const Entry& entry = find(session_id);
    std::shared_lock lock(entry.mutex);
    return entry.state;
}

std::vector<SessionEvent> SessionStore::events(const std::string& session_id) const {
    const Entry& entry = find(session_id);
    std::shared_lock lock(entry.mutex);
    return entry.log;
}

SessionReport SessionStore::report(const std::string& session_id,
                                   const std::optional<std::vector<std::vector<std::int64_t>>>& rankings) const {
    const SessionState state = get(session_id);
    if (state.status != SessionStatus::complete) {
        throw SessionError(ErrorCode::conflict, "session is not complete");
    }
    SessionReport report;
    report.session_id = state.id;
    report.schedule = state.schedule;
    report.expected = multi_party_report(state.schedule);
    report.final_choice = *state.final_choice;

    if (rankings) {
        const auto s = state.participants.size();
        if (rankings->size() != s) {
            throw SessionError(ErrorCode::invalid_params,
                               fmt::format("expected {} rankings, got {}", s, rankings->size()));
        }
        const std::size_t chosen = *state.menu.index_of(report.final_choice);
        std::vector<std::int64_t> realized;
        std::int64_t total = 0;
        for (std::size_t i = 0; i < s; ++i) {
            const auto& ranking = (*rankings)[i];
            if (static_cast<std::int64_t>(ranking.size()) != state.menu.size()) {
                throw SessionError(ErrorCode::invalid_params,
                                   fmt::format("ranking {} must rank all {} items", i + 1, state.menu.size()));
            }
            try {
                require_permutation(ranking);
            } catch (const std::invalid_argument& e) {
                throw SessionError(ErrorCode::invalid_params, fmt::format("ranking {}: {}", i + 1, e.what()));
            }
            realized.push_back(ranking[chosen]);
            total += ranking[chosen];
        }
        report.realized_rank = std::move(realized);
        report.realized_total = total;
    }
    return report;
}

std::size_t SessionStore::size() const {
    std::shared_lock lock(sessions_mutex_);
    return sessions_.size();
}

} // namespace shortlist
