#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "avatar_sync/event_log.hpp"
#include "avatar_sync/harness.hpp"
#include "avatar_sync/narrative.hpp"
#include "avatar_sync/server.hpp"

using namespace avatar_sync;
using json = nlohmann::json;

namespace {

int serve(const std::string& bind, const std::string& config_path, std::uint64_t seed, std::string log_dir,
          const std::string& web_root, std::size_t threads) {
    ServerOptions opts;
    try {
        auto [host, port] = parse_bind_address(bind);
        opts.host = host;
        opts.port = port;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        opts.config = std::make_shared<const NarrativeConfig>(load_config_file(config_path));
    } catch (const ConfigValidationError& e) {
        std::cerr << "error: invalid config " << config_path << ": " << e.what() << "\n";
        return 2;
    } catch (const ConfigParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (const char* env = std::getenv("AVATAR_SYNC_LOG_DIR"); env && *env) log_dir = env;
    opts.seed = seed;
    opts.log_dir = log_dir;
    opts.threads = threads;
    if (!web_root.empty()) opts.web_root = web_root;
    std::error_code ec;
    std::filesystem::create_directories(opts.log_dir, ec);

    Server server(std::move(opts));
    try {
        server.start();
    } catch (const BindError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    server.handle_signals();
    std::cerr << "avatar-sync listening on " << bind.substr(0, bind.rfind(':')) << ":" << server.port()
              << " (logs in " << log_dir << ")\n";
    server.wait();
    return 0;
}

int sim_run(const std::string& scenario_path, std::uint64_t seed, const std::string& transport,
            std::optional<std::int64_t> jitter, const std::string& log_dir, std::int64_t timeout_ms) {
    try {
        Scenario s = load_scenario(scenario_path);
        RunOptions opts;
        opts.seed = seed;
        if (!transport.empty()) opts.transport = parse_transport(transport);
        opts.jitter_ms = jitter;
        if (!log_dir.empty()) opts.log_dir = log_dir;
        opts.timeout = std::chrono::milliseconds(timeout_ms);
        ScenarioReport report = run_scenario(s, opts);
        std::cout << report.to_json().dump(2) << "\n";
        if (!report.passed) {
            try {
                report.require_passed();
            } catch (const AssertionFailed& e) {
                std::cerr << e.what() << "\n";
            }
            return 1;
        }
        return 0;
    } catch (const ScenarioError& e) {
        std::cerr << "error: scenario: " << e.what() << "\n";
    } catch (const HarnessTimeout& e) {
        std::cerr << "error: timeout: " << e.what() << "\n";
    } catch (const BindError& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return 2;
}

int replay_verify(const std::string& log, const std::string& config_path, std::uint64_t seed) {
    std::shared_ptr<const NarrativeConfig> cfg;
    try {
        cfg = std::make_shared<const NarrativeConfig>(load_config_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        ReplayResult r = replay_log(log, cfg, seed);
        json out{{"ok", true},
                 {"inputs", r.inputs},
                 {"last_seq", r.last_seq},
                 {"truncated_tail", r.truncated_tail},
                 {"final_score", r.final_state.score},
                 {"mission_complete", r.final_state.mission_complete},
                 {"final_state", room_snapshot(r.final_state)}};
        std::cout << out.dump(2) << "\n";
        return 0;
    } catch (const ReplayError& e) {
        json out{{"ok", false},
                 {"error", to_string(e.kind())},
                 {"line", e.line()},
                 {"message", e.what()}};
        if (e.kind() == ReplayErrorKind::SeqGap) {
            out["expected"] = e.expected();
            out["got"] = e.got();
        }
        std::cout << out.dump(2) << "\n";
        return 1;
    }
}

int config_lint(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open " << file << "\n";
        return 2;
    }
    json doc = json::parse(in, nullptr, false);
    json out{{"file", file}};
    if (doc.is_discarded()) {
        out["loadable"] = false;
        out["findings"] = json::array({{{"severity", "error"}, {"field", ""}, {"reason", "not valid JSON"}}});
        std::cout << out.dump(2) << "\n";
        return 1;
    }
    auto findings = validate_config(doc);
    json list = json::array();
    for (const auto& f : findings)
        list.push_back({{"severity", f.severity == Severity::Error ? "error" : "warning"},
                        {"field", f.field},
                        {"reason", f.reason}});
    out["loadable"] = !has_errors(findings);
    out["findings"] = std::move(list);
    std::cout << out.dump(2) << "\n";
    return has_errors(findings) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shared-avatar session server, simulator and tools"};
    app.require_subcommand(1);
    int rc = 0;

    auto* serve_cmd = app.add_subcommand("serve", "Run the session server");
    std::string bind = "127.0.0.1:7777", config_path, log_dir = "logs", web_root;
    std::uint64_t seed = 0;
    std::size_t threads = 2;
    serve_cmd->add_option("--bind", bind, "host:port to listen on")->capture_default_str();
    serve_cmd->add_option("--config", config_path, "Narrative config (story.json)")->required();
    serve_cmd->add_option("--seed", seed, "Room RNG seed")->capture_default_str();
    serve_cmd->add_option("--log-dir", log_dir, "Session log directory (AVATAR_SYNC_LOG_DIR overrides)")
        ->capture_default_str();
    serve_cmd->add_option("--web-root", web_root, "Serve static files from this directory");
    serve_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 64))->capture_default_str();
    serve_cmd->callback([&] { rc = serve(bind, config_path, seed, log_dir, web_root, threads); });

    auto* sim = app.add_subcommand("sim", "Scenario simulator");
    sim->require_subcommand(1);
    auto* sim_run_cmd = sim->add_subcommand("run", "Run a scenario and print its report");
    std::string scenario, transport, sim_log_dir;
    std::uint64_t sim_seed = 0;
    std::optional<std::int64_t> jitter;
    std::int64_t timeout_ms = 10'000;
    sim_run_cmd->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    sim_run_cmd->add_option("--seed", sim_seed, "Run seed")->capture_default_str();
    sim_run_cmd->add_option("--transport", transport, "tcp or in_process (default: scenario)")
        ->check(CLI::IsMember({"tcp", "in_process"}));
    sim_run_cmd->add_option("--jitter", jitter, "Override the latency jitter in ms");
    sim_run_cmd->add_option("--log-dir", sim_log_dir, "Keep the room log in this directory");
    sim_run_cmd->add_option("--timeout-ms", timeout_ms, "Per-step timeout")->capture_default_str();
    sim_run_cmd->callback([&] { rc = sim_run(scenario, sim_seed, transport, jitter, sim_log_dir, timeout_ms); });

    auto* replay = app.add_subcommand("replay", "Session log tools");
    replay->require_subcommand(1);
    auto* verify = replay->add_subcommand("verify", "Re-run a log and check it reproduces");
    std::string log, replay_config;
    std::uint64_t replay_seed = 0;
    verify->add_option("--log", log, "Log file")->required()->check(CLI::ExistingFile);
    verify->add_option("--config", replay_config, "Narrative config used by the session")->required();
    verify->add_option("--seed", replay_seed, "Seed used by the session")->capture_default_str();
    verify->callback([&] { rc = replay_verify(log, replay_config, replay_seed); });

    auto* config = app.add_subcommand("config", "Narrative config tools");
    config->require_subcommand(1);
    auto* lint = config->add_subcommand("lint", "Validate a narrative config");
    std::string lint_file;
    lint->add_option("file", lint_file, "Config file")->required();
    lint->callback([&] { rc = config_lint(lint_file); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return rc;
}
