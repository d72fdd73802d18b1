#pragma once

// Append-only session log. Each reducer step is written as the incoming
// client envelope (seq 0) followed by the broadcasts it produced (seq > 0),
// one canonical protocol line each, flushed before anything is sent. Unicast
// replies are not logged; replay regenerates them.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "avatar_sync/protocol.hpp"
#include "avatar_sync/session.hpp"

namespace avatar_sync {

class LogIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Room ids double as log file names: 1-64 chars of [A-Za-z0-9_.-], no leading dot.
bool is_valid_room_id(std::string_view room_id);

std::filesystem::path log_path_for(const std::filesystem::path& dir, std::string_view room_id);

class EventLog {
public:
    explicit EventLog(std::filesystem::path path, bool sync_to_disk = false);
    ~EventLog();
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    /// Writes one line and flushes. Throws LogIoError.
    void append(const Envelope& envelope);

    /// Writes all lines, then flushes once.
    void append_batch(std::span<const Envelope> envelopes);

    const std::filesystem::path& path() const { return path_; }

private:
    void write_line(const Envelope& envelope);
    void flush();

    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
    bool sync_;
};

enum class ReplayErrorKind { SeqGap, Decode, Divergence, Io };

std::string_view to_string(ReplayErrorKind k);

class ReplayError : public std::runtime_error {
public:
    ReplayError(ReplayErrorKind kind, std::size_t line, const std::string& what, std::int64_t expected = 0,
                 std::int64_t got = 0)
        : std::runtime_error(what), kind_(kind), line_(line), expected_(expected), got_(got) {}

    ReplayErrorKind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }  // 1-based, 0 if not line-specific
    std::int64_t expected() const noexcept { return expected_; }
    std::int64_t got() const noexcept { return got_; }

private:
    ReplayErrorKind kind_;
    std::size_t line_;
    std::int64_t expected_;
    std::int64_t got_;
};

struct ReplayResult {
    RoomState final_state;
    std::vector<Envelope> outputs;  // every regenerated envelope, replies included
    std::size_t inputs = 0;
    std::int64_t last_seq = 0;      // last recorded broadcast
    bool truncated_tail = false;    // the final step was cut short by a crash
};

/// Re-runs the recorded inputs through the reducer and checks that every
/// recorded broadcast is reproduced byte for byte. Throws ReplayError.
ReplayResult replay_log(const std::filesystem::path& log_path, std::shared_ptr<const NarrativeConfig> config,
                        std::uint64_t seed);

/// Same, over in-memory lines. `fallback_room_id` names the room of an empty log.
ReplayResult replay_lines(std::span<const std::string> lines, std::shared_ptr<const NarrativeConfig> config,
                          std::uint64_t seed, std::string_view fallback_room_id);

}  // namespace avatar_sync
