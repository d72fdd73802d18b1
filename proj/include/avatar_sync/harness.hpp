#pragma once

// Multi-client simulator. Bots speak the wire protocol to an embedded server
// (or to the reducer directly in the in-process mode). Time is virtual: each
// scripted action is delayed by the latency model, the resulting deliveries
// are fed one at a time in arrival order, and the server clock reads the
// delivery time, so a run never sleeps and its report is reproducible.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avatar_sync/latency.hpp"
#include "avatar_sync/narrative.hpp"
#include "avatar_sync/protocol.hpp"

namespace avatar_sync {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HarnessTimeout : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AssertionFailed : public std::runtime_error {
public:
    explicit AssertionFailed(std::string which)
        : std::runtime_error("assertion failed: " + which), which_(std::move(which)) {}
    const std::string& which() const noexcept { return which_; }

private:
    std::string which_;
};

enum class Transport { Tcp, InProcess };

std::string_view to_string(Transport t);
std::optional<Transport> parse_transport(std::string_view s);

struct BotAction {
    std::int64_t at_ms = 0;  // offset from scenario start
    Message payload;         // a client message
};

struct RandomPolicy {
    std::uint64_t seed = 0;
    std::size_t actions = 0;
    std::int64_t interval_ms = 1000;
    std::int64_t offset_ms = 0;
};

struct BotSpec {
    std::vector<BotAction> script;
    std::optional<RandomPolicy> random;
};

struct ScenarioAssertions {
    std::optional<std::int64_t> final_score;
    std::optional<bool> mission_complete;
    std::optional<std::int64_t> min_events;
    std::optional<std::int64_t> max_events;
};

struct Scenario {
    std::string name;
    std::size_t num_bots = 1;
    std::optional<GameMode> mode;  // selected by the first bot after everyone joined
    std::shared_ptr<const NarrativeConfig> config;
    LatencyModel latency;
    bool latency_seed_given = false;
    std::vector<BotSpec> bots;
    ScenarioAssertions assertions;
    Transport transport = Transport::Tcp;
};

/// Relative config paths resolve against `base_dir`. Throws ScenarioError.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

struct RunOptions {
    std::uint64_t seed = 0;
    std::optional<Transport> transport;
    std::optional<std::int64_t> jitter_ms;
    // Keeps the room log (and the effective config) here; a temp dir otherwise.
    std::optional<std::filesystem::path> log_dir;
    std::chrono::milliseconds timeout{10'000};      // per delivery, real time
};

struct BotReport {
    PlayerId player_id;
    std::string color;
    std::size_t received = 0;  // broadcasts
    std::size_t errors = 0;    // ErrorReply envelopes
    std::int64_t first_seq = 0;
    std::int64_t last_seq = 0;
    std::vector<std::string> stream;  // encoded broadcasts, in arrival order
};

struct AssertionResult {
    std::string which;
    nlohmann::json expected;
    nlohmann::json actual;
    bool passed = false;
};

struct ScenarioReport {
    std::string name;
    std::uint64_t seed = 0;
    Transport transport = Transport::Tcp;
    LatencyModel latency;
    std::string room_id;
    std::vector<BotReport> bots;
    std::int64_t final_score = 0;
    std::int64_t score_from_stream = 0;
    bool mission_complete = false;
    std::int64_t mission_complete_count = 0;
    std::int64_t event_count = 0;
    nlohmann::json final_state;  // room snapshot
    std::vector<std::pair<std::string, bool>> invariants;
    std::vector<AssertionResult> assertions;
    bool passed = false;

    /// Deterministic JSON; streams are summarized, not embedded.
    nlohmann::json to_json() const;

    /// Throws AssertionFailed naming the first failed check.
    void require_passed() const;
};

/// Drives the scenario to completion. Throws HarnessTimeout when the server
/// stops answering, ScenarioError for unusable scenarios.
ScenarioReport run_scenario(const Scenario& scenario, const RunOptions& options);

/// Room id used for the scenario's room (and log file name).
std::string scenario_room_id(const Scenario& scenario);

}  // namespace avatar_sync
