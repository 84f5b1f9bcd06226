#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "shortlist/session.hpp"

namespace shortlist {

inline constexpr std::int64_t kMaxAnalysisMenu = 1'000'000'000'000;
inline constexpr std::int64_t kMaxBordaMenu = 20;
inline constexpr std::int64_t kMaxScheduleMenu = 1000;
inline constexpr std::int64_t kMaxScheduleParticipants = 64;

/// HTTP/JSON front end over a SessionStore plus the stateless analysis
/// endpoints. Errors are returned as {"code", "message", "http_status"}.
class ApiService {
public:
    struct Options {
        SessionStore::Options store;
        std::size_t idempotency_capacity = 10'000;
    };

    ApiService();
    explicit ApiService(Options options);
    ~ApiService();

    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    /// Binds the listening socket and returns the bound port; `port == 0`
    /// picks an ephemeral one. Throws std::runtime_error when the address is
    /// unavailable.
    int bind(const std::string& host, int port);

    /// Serves on the bound socket until stop() is called.
    void run();
    void stop();
    void wait_until_ready() const;

    SessionStore& sessions();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace shortlist
