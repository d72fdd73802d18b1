#pragma once

// Network front-end. One listening port speaks two transports with the same
// message schema:
//   - raw TCP, newline-delimited JSON (first byte '{' or anything non-HTTP);
//   - HTTP: WebSocket upgrade on /ws (one JSON object per text frame), and
//     static files from the web root for every other GET.
// All envelopes of a room are applied serially on that room's strand; rooms
// run concurrently on a small thread pool.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avatar_sync/narrative.hpp"
#include "avatar_sync/session.hpp"

namespace avatar_sync {

class BindError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks a free port
    std::shared_ptr<const NarrativeConfig> config;
    std::uint64_t seed = 0;
    std::filesystem::path log_dir = "logs";
    std::optional<std::filesystem::path> web_root;
    std::chrono::milliseconds heartbeat_interval{10'000};
    std::chrono::milliseconds idle_timeout{30'000};
    std::size_t threads = 2;
    std::size_t max_line_bytes = 64 * 1024;
    bool sync_logs = false;
    /// Stamps every accepted client envelope; ms since epoch by default.
    std::function<std::int64_t()> clock;
};

class Server {
public:
    explicit Server(ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts the worker threads. Throws BindError.
    void start();

    /// Stops accepting, drops connections and joins the workers. Rooms stop
    /// applying events first, so nothing reaches the logs after this begins.
    void stop();

    /// Blocks until stop() is called (or SIGINT/SIGTERM when
    /// `handle_signals` was requested).
    void wait();

    std::uint16_t port() const;

    std::optional<RoomState> room_state(const std::string& room_id);
    std::filesystem::path log_path(const std::string& room_id) const;
    std::vector<std::string> room_ids() const;

    void handle_signals();

    class Impl;

private:
    std::shared_ptr<Impl> impl_;
};

/// Parses "host:port" (IPv6 hosts in brackets). Throws std::invalid_argument.
std::pair<std::string, std::uint16_t> parse_bind_address(const std::string& addr);

}  // namespace avatar_sync
