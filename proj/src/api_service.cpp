#include "shortlist/api_service.hpp"

#include <charconv>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include <sys/socket.h>

#include <fmt/format.h>
#include <httplib.h>

#include "shortlist/json_codec.hpp"

namespace shortlist {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxBody = 1 << 20;
constexpr const char* kJson = "application/json";

struct Reply {
    int status = 200;
    std::string body;
};

Reply error_reply(ErrorCode code, const std::string& message) {
    const int status = http_status(code);
    return {status, json{{"code", to_string(code)}, {"message", message}, {"http_status", status}}.dump()};
}

Reply ok(const json& body, int status = 200) { return {status, body.dump()}; }

std::int64_t int_param(const httplib::Request& req, const std::string& name, std::int64_t lo, std::int64_t hi) {
    if (!req.has_param(name)) {
        throw SessionError(ErrorCode::invalid_params, fmt::format("missing query parameter '{}'", name));
    }
    const std::string text = req.get_param_value(name);
    std::int64_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
        throw SessionError(ErrorCode::invalid_params, fmt::format("'{}' must be an integer, got '{}'", name, text));
    }
    if (value < lo || value > hi) {
        throw SessionError(ErrorCode::invalid_params,
                           fmt::format("'{}' must be in {}..{}, got {}", name, lo, hi, value));
    }
    return value;
}

json parse_body(const httplib::Request& req) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        throw SessionError(ErrorCode::invalid_params, "request body must be a JSON object");
    }
    return body;
}

std::string string_field(const json& body, const char* name) {
    if (!body.contains(name) || !body[name].is_string()) {
        throw SessionError(ErrorCode::invalid_params, fmt::format("'{}' must be a string", name));
    }
    return body[name].get<std::string>();
}

std::vector<std::string> string_list(const json& body, const char* name) {
    if (!body.contains(name) || !body[name].is_array()) {
        throw SessionError(ErrorCode::invalid_params, fmt::format("'{}' must be an array of strings", name));
    }
    std::vector<std::string> out;
    for (const auto& v : body[name]) {
        if (!v.is_string()) {
            throw SessionError(ErrorCode::invalid_params, fmt::format("'{}' must be an array of strings", name));
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::int64_t int_value(const json& v, const std::string& what) {
    if (!v.is_number_integer()) {
        throw SessionError(ErrorCode::invalid_params, fmt::format("{} must be an integer", what));
    }
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
        throw SessionError(ErrorCode::invalid_params, fmt::format("{} is out of range", what));
    }
    return v.get<std::int64_t>();
}

std::vector<MenuItem> menu_field(const json& body) {
    if (!body.contains("menu") || !body["menu"].is_array()) {
        throw SessionError(ErrorCode::invalid_params, "'menu' must be an array");
    }
    std::vector<MenuItem> items;
    for (const auto& v : body["menu"]) {
        if (v.is_string()) {
            items.push_back({v.get<std::string>(), v.get<std::string>()});
            continue;
        }
        if (!v.is_object() || !v.contains("id") || !v["id"].is_string()) {
            throw SessionError(ErrorCode::invalid_params,
                               "menu entries must be strings or objects with a string 'id'");
        }
        std::string label = v["id"].get<std::string>();
        if (v.contains("label")) {
            if (!v["label"].is_string()) {
                throw SessionError(ErrorCode::invalid_params, "menu labels must be strings");
            }
            label = v["label"].get<std::string>();
        }
        items.push_back({v["id"].get<std::string>(), std::move(label)});
    }
    return items;
}

std::optional<std::vector<std::vector<std::int64_t>>> rankings_field(const json& body) {
    if (!body.contains("rankings") || body["rankings"].is_null()) {
        return std::nullopt;
    }
    const json& r = body["rankings"];
    if (!r.is_array()) {
        throw SessionError(ErrorCode::invalid_params, "'rankings' must be an array of arrays");
    }
    std::vector<std::vector<std::int64_t>> out;
    for (const auto& row : r) {
        if (!row.is_array()) {
            throw SessionError(ErrorCode::invalid_params, "'rankings' must be an array of arrays");
        }
        auto& ranks = out.emplace_back();
        for (const auto& v : row) {
            ranks.push_back(int_value(v, "each rank"));
        }
    }
    return out;
}

/// Cached outcome of one (method, path, token) mutation.
struct IdempotencySlot {
    std::mutex mutex;
    bool done = false;
    std::string fingerprint;
    Reply reply;
};

} // namespace

struct ApiService::Impl {
    explicit Impl(Options options) : store(std::move(options.store)), capacity(options.idempotency_capacity) {}

    SessionStore store;
    httplib::Server server;
    std::size_t capacity;

    std::mutex slots_mutex;
    std::unordered_map<std::string, std::shared_ptr<IdempotencySlot>> slots;
    std::deque<std::string> slot_order;

    void routes();
    Reply idempotent(const httplib::Request& req, const std::function<Reply(const json&)>& mutate);
};

namespace {

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        Reply reply;
        try {
            reply = fn(req);
        } catch (const SessionError& e) {
            reply = error_reply(e.code(), e.what());
        } catch (const json::exception& e) {
            reply = error_reply(ErrorCode::invalid_params, e.what());
        } catch (const std::invalid_argument& e) {
            reply = error_reply(ErrorCode::invalid_params, e.what());
        } catch (const std::out_of_range& e) {
            reply = error_reply(ErrorCode::invalid_params, e.what());
        } catch (const std::domain_error& e) {
            reply = error_reply(ErrorCode::invalid_params, e.what());
        }
        res.status = reply.status;
        res.set_content(reply.body, kJson);
    };
}

} // namespace

Reply ApiService::Impl::idempotent(const httplib::Request& req, const std::function<Reply(const json&)>& mutate) {
    json body = parse_body(req);
    std::string token = req.get_header_value("Idempotency-Key");
    if (body.contains("idempotency_token")) {
        const std::string from_body = string_field(body, "idempotency_token");
        if (!token.empty() && token != from_body) {
            throw SessionError(ErrorCode::invalid_params,
                               "Idempotency-Key header and idempotency_token field disagree");
        }
        token = from_body;
        body.erase("idempotency_token");
    }
    if (token.empty()) {
        throw SessionError(ErrorCode::invalid_params,
                           "session mutations need an Idempotency-Key header or idempotency_token field");
    }

    const std::string key = fmt::format("{} {}\n{}", req.method, req.path, token);
    std::shared_ptr<IdempotencySlot> slot;
    {
        std::lock_guard lock(slots_mutex);
        auto [it, inserted] = slots.try_emplace(key);
        if (inserted) {
            it->second = std::make_shared<IdempotencySlot>();
            slot_order.push_back(key);
            while (slot_order.size() > capacity) {
                slots.erase(slot_order.front());
                slot_order.pop_front();
            }
        }
        slot = it->second;
    }

    std::lock_guard lock(slot->mutex);
    const std::string fingerprint = body.dump();
    if (slot->done) {
        if (slot->fingerprint != fingerprint) {
            return error_reply(ErrorCode::conflict, "idempotency token was already used for a different request");
        }
        return slot->reply;
    }
    try {
        slot->reply = mutate(body);
    } catch (const SessionError& e) {
        slot->reply = error_reply(e.code(), e.what());
    } catch (const json::exception& e) {
        slot->reply = error_reply(ErrorCode::invalid_params, e.what());
    }
    slot->fingerprint = fingerprint;
    slot->done = true;
    return slot->reply;
}

void ApiService::Impl::routes() {
    server.set_payload_max_length(kMaxBody);
    server.set_socket_options([](socket_t sock) {
        // no SO_REUSEPORT: a port already in use must fail to bind
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) {
            return;
        }
        Reply reply = res.status == 404
                          ? error_reply(ErrorCode::not_found, fmt::format("no route for {} {}", req.method, req.path))
                          : error_reply(ErrorCode::invalid_params, fmt::format("bad request (http {})", res.status));
        res.status = reply.status;
        res.set_content(reply.body, kJson);
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        res.status = 500;
        res.set_content(json{{"code", "internal"}, {"message", "internal error"}, {"http_status", 500}}.dump(),
                        kJson);
    });

    server.Get("/healthz", guarded([](const httplib::Request&) { return ok(json{{"status", "ok"}}); }));

    server.Get("/analysis/two-party", guarded([](const httplib::Request& req) {
        const std::int64_t n = int_param(req, "n", 1, kMaxAnalysisMenu);
        std::optional<std::int64_t> k;
        if (req.has_param("k")) {
            k = int_param(req, "k", 1, n);
        }
        return ok(two_party_analysis(n, k));
    }));

    server.Get("/analysis/schedule", guarded([](const httplib::Request& req) {
        const std::int64_t n = int_param(req, "n", 1, kMaxScheduleMenu);
        const std::int64_t s = int_param(req, "s", 1, kMaxScheduleParticipants);
        return ok(schedule_analysis(n, s));
    }));

    server.Get("/analysis/borda", guarded([](const httplib::Request& req) {
        const std::int64_t n = int_param(req, "n", 1, kMaxBordaMenu);
        json out = to_json(borda_expected(n));
        out["method"] = n <= kBruteForceCap ? "enumeration" : "closed_form";
        if (n <= kBruteForceCap) {
            out["total_sum"] = a129591_brute(n).str();
        }
        return ok(out);
    }));

    server.Post("/sessions", guarded([this](const httplib::Request& req) {
        return idempotent(req, [this](const json& body) {
            auto menu = menu_field(body);
            auto participants = string_list(body, "participants");
            std::optional<std::vector<std::int64_t>> schedule;
            if (body.contains("schedule") && !body["schedule"].is_null()) {
                if (!body["schedule"].is_array()) {
                    throw SessionError(ErrorCode::invalid_params, "'schedule' must be an array of integers");
                }
                schedule.emplace();
                for (const auto& v : body["schedule"]) {
                    schedule->push_back(int_value(v, "each schedule size"));
                }
            }
            if (!schedule && static_cast<std::int64_t>(participants.size()) > kMaxScheduleParticipants) {
                throw SessionError(ErrorCode::invalid_params,
                                   fmt::format("without an explicit schedule at most {} participants are supported",
                                               kMaxScheduleParticipants));
            }
            return ok(to_json(store.create(std::move(menu), std::move(participants), std::move(schedule))), 201);
        });
    }));

    server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req) {
        return ok(to_json(store.get(req.matches[1])));
    }));

    server.Get(R"(/sessions/([^/]+)/events)", guarded([this](const httplib::Request& req) {
        const std::string id = req.matches[1];
        json events = json::array();
        for (const auto& e : store.events(id)) {
            events.push_back(to_json(e));
        }
        return ok(json{{"session_id", id}, {"events", std::move(events)}});
    }));

    server.Post(R"(/sessions/([^/]+)/shortlist)", guarded([this](const httplib::Request& req) {
        const std::string id = req.matches[1];
        return idempotent(req, [this, &id](const json& body) {
            if (!body.contains("participant_index")) {
                throw SessionError(ErrorCode::invalid_params, "'participant_index' is required");
            }
            const std::int64_t index = int_value(body["participant_index"], "'participant_index'");
            return ok(to_json(store.submit_shortlist(id, index, string_list(body, "item_ids"))));
        });
    }));

    server.Post(R"(/sessions/([^/]+)/abort)", guarded([this](const httplib::Request& req) {
        const std::string id = req.matches[1];
        return idempotent(req, [this, &id](const json& body) {
            std::string reason;
            if (body.contains("reason")) {
                reason = string_field(body, "reason");
            }
            return ok(to_json(store.abort(id, reason)));
        });
    }));

    server.Get(R"(/sessions/([^/]+)/report)", guarded([this](const httplib::Request& req) {
        return ok(to_json(store.report(req.matches[1], std::nullopt)));
    }));

    server.Post(R"(/sessions/([^/]+)/report)", guarded([this](const httplib::Request& req) {
        const json body = req.body.empty() ? json::object() : parse_body(req);
        return ok(to_json(store.report(req.matches[1], rankings_field(body))));
    }));
}

ApiService::ApiService() : ApiService(Options{}) {}

ApiService::ApiService(Options options) : impl_(std::make_unique<Impl>(std::move(options))) { impl_->routes(); }

ApiService::~ApiService() { stop(); }

int ApiService::bind(const std::string& host, int port) {
    if (port < 0 || port > 65535) {
        throw std::runtime_error(fmt::format("invalid port {}", port));
    }
    int bound = -1;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (impl_->server.bind_to_port(host, port)) {
        bound = port;
    }
    if (bound <= 0) {
        throw std::runtime_error(fmt::format("cannot listen on {}:{}", host, port));
    }
    return bound;
}

void ApiService::run() { impl_->server.listen_after_bind(); }

void ApiService::stop() {
    if (impl_) {
        impl_->server.stop();
    }
}

void ApiService::wait_until_ready() const { impl_->server.wait_until_ready(); }

SessionStore& ApiService::sessions() { return impl_->store; }

} // namespace shortlist
