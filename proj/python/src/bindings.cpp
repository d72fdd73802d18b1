#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "avatar_sync/event_log.hpp"
#include "avatar_sync/harness.hpp"
#include "avatar_sync/narrative.hpp"
#include "avatar_sync/session.hpp"

namespace py = pybind11;
using namespace avatar_sync;
using nlohmann::json;

// JSON crosses the boundary as text; the Python package wraps it with json.

namespace {

std::shared_ptr<const NarrativeConfig> config_or_default(const std::optional<std::string>& text) {
    if (!text) return std::make_shared<const NarrativeConfig>();
    return std::make_shared<const NarrativeConfig>(load_config(*text));
}

ActionOutcome outcome_of_kind(const std::string& kind) {
    if (kind == "dance") return DanceOutcome{};
    if (kind == "small_chaos") return SmallChaos{};
    if (kind == "chaos") return Chaos{};
    throw py::value_error("unknown outcome kind '" + kind + "'");
}

GameMode mode_of(const std::string& name) {
    auto m = parse_game_mode(name);
    if (!m) throw py::value_error("unknown mode '" + name + "'");
    return *m;
}

class PyRoom {
public:
    PyRoom(std::string room_id, const std::optional<std::string>& config_json, std::uint64_t seed)
        : state_(create_room(std::move(room_id), config_or_default(config_json), seed)) {}

    std::vector<std::string> apply(const std::string& envelope_line) {
        Step step = apply_event(state_, decode_message(envelope_line));
        state_ = std::move(step.state);
        std::vector<std::string> out;
        for (const auto& e : step.out) out.push_back(encode_message(e));
        return out;
    }

    std::string snapshot() const { return room_snapshot(state_).dump(); }

private:
    RoomState state_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
    py::register_exception<ConfigParseError>(m, "ConfigParseError", PyExc_ValueError);
    py::register_exception<ConfigValidationError>(m, "ConfigValidationError", PyExc_ValueError);
    py::register_exception<ReplayError>(m, "ReplayError", PyExc_RuntimeError);
    py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
    py::register_exception<GameError>(m, "GameError", PyExc_ValueError);

    m.attr("PROTOCOL_VERSION") = kProtocolVersion;
    m.attr("ROOM_CAPACITY") = kRoomCapacity;
    m.attr("PALETTE") = std::vector<std::string>(kPalette.begin(), kPalette.end());

    m.def("encode_message", [](const std::string& envelope_json) {
        return encode_message(envelope_from_json(json::parse(envelope_json)));
    });
    m.def("decode_message", [](const std::string& line) { return envelope_to_json(decode_message(line)).dump(); });
    m.def("decode_error_details", [](const std::string& line) -> std::optional<std::pair<std::string, std::string>> {
        try {
            decode_message(line);
            return std::nullopt;
        } catch (const DecodeError& e) {
            return std::make_pair(std::string(to_string(e.kind())), e.field());
        }
    });

    m.def("classify_gesture", [](const std::vector<std::int64_t>& times, std::int64_t window) {
        return classify_gesture(times, window).count;
    });
    m.def("chaos_decision", [](std::int64_t taps, std::int64_t users, double tau) {
        return chaos_decision(taps, users, Ratio::from_double(tau)) == ChaosKind::Chaos ? "chaos" : "small_chaos";
    });
    m.def("score_action", [](const std::string& mode, const std::string& kind) {
        return score_action(mode_of(mode), outcome_of_kind(kind));
    });
    m.def("normalize_answer", [](const std::string& s) { return normalize_answer(s); });

    m.def("load_config", [](const std::string& text) { return config_to_json(load_config(text)).dump(); });
    m.def("validate_config", [](const std::string& text) {
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const auto& f : validate_config(json::parse(text)))
            out.emplace_back(f.severity == Severity::Error ? "error" : "warning", f.field, f.reason);
        return out;
    });

    py::class_<PyRoom>(m, "Room")
        .def(py::init<std::string, std::optional<std::string>, std::uint64_t>(), py::arg("room_id"),
             py::arg("config_json") = std::nullopt, py::arg("seed") = 0)
        .def("apply", &PyRoom::apply)
        .def("snapshot", &PyRoom::snapshot);

    m.def(
        "run_scenario",
        [](const std::string& path, std::uint64_t seed, const std::optional<std::string>& transport,
           std::optional<std::int64_t> jitter_ms, const std::optional<std::string>& log_dir) {
            Scenario sc = load_scenario(path);
            RunOptions o;
            o.seed = seed;
            if (transport) {
                o.transport = parse_transport(*transport);
                if (!o.transport) throw py::value_error("unknown transport '" + *transport + "'");
            }
            o.jitter_ms = jitter_ms;
            if (log_dir) o.log_dir = *log_dir;
            ScenarioReport r;
            {
                py::gil_scoped_release release;
                r = run_scenario(sc, o);
            }
            json j = r.to_json();
            j["final_state"] = r.final_state;
            return j.dump();
        },
        py::arg("path"), py::arg("seed") = 0, py::arg("transport") = std::nullopt, py::arg("jitter_ms") = std::nullopt,
        py::arg("log_dir") = std::nullopt);

    m.def(
        "replay_log",
        [](const std::string& log, const std::optional<std::string>& config_json, std::uint64_t seed) {
            ReplayResult r = replay_log(log, config_or_default(config_json), seed);
            return json{{"inputs", r.inputs},
                        {"last_seq", r.last_seq},
                        {"truncated_tail", r.truncated_tail},
                        {"final_state", room_snapshot(r.final_state)}}
                .dump();
        },
        py::arg("log"), py::arg("config_json") = std::nullopt, py::arg("seed") = 0);

}
