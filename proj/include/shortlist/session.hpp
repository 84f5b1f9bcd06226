#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "shortlist/multi_party.hpp"

namespace shortlist {

enum class ErrorCode { invalid_params, not_found, wrong_turn, wrong_count, item_not_offered, conflict };

std::string_view to_string(ErrorCode code);
int http_status(ErrorCode code);

class SessionError : public std::runtime_error {
public:
    SessionError(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct MenuItem {
    std::string id;
    std::string label;

    friend bool operator==(const MenuItem&, const MenuItem&) = default;
};

class Menu {
public:
    Menu() = default;
    /// Throws SessionError(invalid_params) on an empty menu or empty or
    /// duplicate ids.
    explicit Menu(std::vector<MenuItem> items);

    std::int64_t size() const { return static_cast<std::int64_t>(items_.size()); }
    const std::vector<MenuItem>& items() const { return items_; }
    std::optional<std::size_t> index_of(std::string_view id) const;

    friend bool operator==(const Menu&, const Menu&) = default;

private:
    std::vector<MenuItem> items_;
};

enum class SessionStatus { awaiting_shortlist, complete, aborted };
std::string_view to_string(SessionStatus status);

struct HistoryEntry {
    std::int64_t participant = 0; // 1-based
    std::vector<std::string> items;
    std::string timestamp;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

/// Live protocol state. `turn` is the 1-based participant who must submit
/// next; it is 0 once the session is complete or aborted. While awaiting,
/// `offered` holds the C_{turn-1} items that participant narrows down, in
/// menu order.
struct SessionState {
    std::string id;
    Menu menu;
    std::vector<std::string> participants;
    ShortlistSchedule schedule{{1, 1}};
    std::int64_t turn = 0;
    std::vector<std::string> offered;
    std::vector<HistoryEntry> history;
    std::optional<std::string> final_choice;
    SessionStatus status = SessionStatus::awaiting_shortlist;

    /// Size the current participant must submit; 0 when not awaiting.
    std::int64_t required_count() const;

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

enum class EventKind { created, shortlist_submitted, completed, aborted };
std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view text);

/// One record of the append-only session log. `seq` counts from 0 within a
/// session.
struct SessionEvent {
    std::string session_id;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::created;
    nlohmann::json payload;
    std::string timestamp;

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

nlohmann::json to_json(const SessionEvent& event);
SessionEvent event_from_json(const nlohmann::json& j);

/// Folds one event into a state. The state before a `created` event is
/// ignored.
void apply_event(SessionState& state, const SessionEvent& event);

/// Folds a session's full log from its `created` event.
SessionState replay(std::span<const SessionEvent> events);

struct SessionReport {
    std::string session_id;
    ShortlistSchedule schedule{{1, 1}};
    MultiPartyReport expected;
    std::string final_choice;
    std::optional<std::vector<std::int64_t>> realized_rank; // per participant
    std::optional<std::int64_t> realized_total;
};

inline constexpr std::int64_t kMaxSessionMenu = 1000;
inline constexpr std::int64_t kMaxParticipants = 64;

/// In-memory session registry with an optional append-only JSON-lines log.
/// Mutations on one session are serialized; distinct sessions proceed
/// independently.
class SessionStore {
public:
    using IdGenerator = std::function<std::string()>;
    using Clock = std::function<std::string()>;

    struct Options {
        std::optional<std::filesystem::path> log_path;
        IdGenerator next_id;
        Clock now;
    };

    SessionStore();
    /// Replays `log_path` if it exists, then appends to it.
    explicit SessionStore(Options options);
    ~SessionStore();

    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    SessionState create(std::vector<MenuItem> menu, std::vector<std::string> participants,
                        std::optional<std::vector<std::int64_t>> schedule_override = std::nullopt);

    SessionState submit_shortlist(const std::string& session_id, std::int64_t participant_index,
                                  const std::vector<std::string>& item_ids);

    SessionState abort(const std::string& session_id, const std::string& reason);

    SessionState get(const std::string& session_id) const;

    std::vector<SessionEvent> events(const std::string& session_id) const;

    /// `rankings[i][j]` is participant i's rank of the j-th menu item.
    SessionReport report(const std::string& session_id,
                         const std::optional<std::vector<std::vector<std::int64_t>>>& rankings) const;

    std::size_t size() const;

private:
    struct Entry {
        mutable std::shared_mutex mutex;
        SessionState state;
        std::vector<SessionEvent> log;
    };

    Entry& find(const std::string& session_id) const;
    void record(Entry& entry, EventKind kind, nlohmann::json payload);
    void load(const std::filesystem::path& path);

    Options options_;
    mutable std::shared_mutex sessions_mutex_;
    std::unordered_map<std::string, std::unique_ptr<Entry>> sessions_;
    std::mutex log_mutex_;
    std::ofstream log_;
};

} // namespace shortlist
