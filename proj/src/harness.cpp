#include "avatar_sync/harness.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <boost/asio.hpp>

#include "avatar_sync/event_log.hpp"
#include "avatar_sync/server.hpp"
#include "avatar_sync/session.hpp"

namespace avatar_sync {

using json = nlohmann::json;

namespace {

// Setup (joins, mode select) happens at virtual times 1, 2, ...; scripts
// start here.
constexpr std::int64_t kScriptEpochMs = 1000;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void bad(const std::string& where, const std::string& what) { throw ScenarioError(where + ": " + what); }

std::int64_t int_field(const json& obj, const char* key, const std::string& where, std::int64_t fallback,
                       std::int64_t min = 0) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj[key];
    if (!v.is_number_integer()) bad(where + "." + key, "expected an integer");
    auto n = v.get<std::int64_t>();
    if (n < min) bad(where + "." + key, "must be >= " + std::to_string(min));
    return n;
}

Message wire_payload(const json& fields, const std::string& where) {
    json env = fields;
    env["seq"] = 0;
    env["room_id"] = "";
    env["sender"] = "";
    env["sent_at"] = 0;
    try {
        return envelope_from_json(env).payload;
    } catch (const DecodeError& e) {
        bad(where, e.what());
    }
}

Message parse_action(const json& a, const std::string& where) {
    if (a.contains("gesture")) {
        const json& g = a["gesture"];
        if (!g.is_object()) bad(where + ".gesture", "expected an object");
        json wire;
        if (g.contains("taps")) wire = {{"kind", "tap_burst"}, {"taps", g["taps"]}};
        else if (g.contains("swipe")) wire = {{"kind", "swipe"}, {"direction", g["swipe"]}};
        else if (g.contains("tap_times")) wire = {{"kind", "tap_times"}, {"times_ms", g["tap_times"]}};
        else wire = g;  // already in wire form
        return wire_payload({{"tag", "gesture"}, {"gesture", wire}}, where + ".gesture");
    }
    if (a.contains("select_mode")) return wire_payload({{"tag", "select_mode"}, {"mode", a["select_mode"]}}, where);
    if (a.contains("start_minigame"))
        return wire_payload({{"tag", "start_minigame"}, {"kind", a["start_minigame"]}}, where);
    if (a.contains("minigame")) return wire_payload({{"tag", "minigame_input"}, {"input", a["minigame"]}}, where);
    if (a.contains("leave")) return msg::Leave{};
    bad(where, "action needs one of gesture, select_mode, start_minigame, minigame, leave");
}

std::shared_ptr<const NarrativeConfig> scenario_config(const json& doc, const std::filesystem::path& base_dir) {
    json cfg_doc;
    if (doc.contains("config")) {
        const json& c = doc["config"];
        if (c.is_string()) {
            std::filesystem::path p = c.get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            std::ifstream in(p, std::ios::binary);
            if (!in) bad("config", "cannot open " + p.string());
            cfg_doc = json::parse(in, nullptr, false);
            if (cfg_doc.is_discarded()) bad("config", p.string() + " is not valid JSON");
        } else if (c.is_object()) {
            cfg_doc = c;
        } else {
            bad("config", "expected a path or an object");
        }
    }
    if (doc.contains("config_overrides")) {
        if (cfg_doc.is_null()) bad("config_overrides", "needs a base config");
        cfg_doc.merge_patch(doc["config_overrides"]);
    }
    if (cfg_doc.is_null()) return std::make_shared<const NarrativeConfig>();
    try {
        return std::make_shared<const NarrativeConfig>(config_from_json(cfg_doc));
    } catch (const ConfigValidationError& e) {
        bad("config", e.what());
    }
}

}  // namespace

std::string_view to_string(Transport t) { return t == Transport::Tcp ? "tcp" : "in_process"; }

std::optional<Transport> parse_transport(std::string_view s) {
    if (s == "tcp") return Transport::Tcp;
    if (s == "in_process") return Transport::InProcess;
    return std::nullopt;
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) bad("scenario", "expected a JSON object");
    Scenario s;
    if (!doc.contains("name") || !doc["name"].is_string() || doc["name"].get<std::string>().empty())
        bad("name", "required non-empty string");
    s.name = doc["name"].get<std::string>();

    auto bots = int_field(doc, "num_bots", "scenario", 1, 1);
    if (bots > static_cast<std::int64_t>(kRoomCapacity))
        bad("num_bots", "at most " + std::to_string(kRoomCapacity) + " bots fit in a room");
    s.num_bots = static_cast<std::size_t>(bots);

    if (doc.contains("mode")) {
        auto m = doc["mode"].is_string() ? parse_game_mode(doc["mode"].get<std::string>()) : std::nullopt;
        if (!m) bad("mode", "expected toques, historia_avatar or historia_surpresa");
        s.mode = m;
    }
    if (doc.contains("transport")) {
        auto t = doc["transport"].is_string() ? parse_transport(doc["transport"].get<std::string>()) : std::nullopt;
        if (!t) bad("transport", "expected tcp or in_process");
        s.transport = *t;
    }
    s.config = scenario_config(doc, base_dir);

    if (doc.contains("latency")) {
        const json& l = doc["latency"];
        if (!l.is_object()) bad("latency", "expected an object");
        s.latency.base_ms = int_field(l, "base_ms", "latency", 0);
        s.latency.jitter_ms = int_field(l, "jitter_ms", "latency", 0);
        if (l.contains("seed")) {
            if (!l["seed"].is_number_unsigned()) bad("latency.seed", "expected an unsigned integer");
            s.latency.seed = l["seed"].get<std::uint64_t>();
            s.latency_seed_given = true;
        }
    }

    s.bots.resize(s.num_bots);
    if (doc.contains("bots")) {
        const json& arr = doc["bots"];
        if (!arr.is_array()) bad("bots", "expected an array");
        if (arr.size() > s.num_bots) bad("bots", "more bot entries than num_bots");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            std::string where = "bots[" + std::to_string(i) + "]";
            const json& b = arr[i];
            if (!b.is_object()) bad(where, "expected an object");
            BotSpec& spec = s.bots[i];
            if (b.contains("script")) {
                if (!b["script"].is_array()) bad(where + ".script", "expected an array");
                std::int64_t prev = 0;
                for (std::size_t k = 0; k < b["script"].size(); ++k) {
                    std::string aw = where + ".script[" + std::to_string(k) + "]";
                    const json& a = b["script"][k];
                    if (!a.is_object()) bad(aw, "expected an object");
                    std::int64_t at = int_field(a, "at", aw, prev);
                    if (at < prev) bad(aw + ".at", "script times must be non-decreasing");
                    prev = at;
                    spec.script.push_back({at, parse_action(a, aw)});
                }
            }
            if (b.contains("random")) {
                const json& r = b["random"];
                if (!r.is_object()) bad(where + ".random", "expected an object");
                RandomPolicy p;
                p.seed = static_cast<std::uint64_t>(int_field(r, "seed", where + ".random", 0));
                p.actions = static_cast<std::size_t>(int_field(r, "actions", where + ".random", 10));
                p.interval_ms = int_field(r, "interval_ms", where + ".random", 1000, 1);
                p.offset_ms = int_field(r, "offset_ms", where + ".random", 0);
                spec.random = p;
            }
        }
    }

    if (doc.contains("assertions")) {
        const json& a = doc["assertions"];
        if (!a.is_object()) bad("assertions", "expected an object");
        if (a.contains("final_score")) s.assertions.final_score = int_field(a, "final_score", "assertions", 0);
        if (a.contains("mission_complete")) {
            if (!a["mission_complete"].is_boolean()) bad("assertions.mission_complete", "expected a boolean");
            s.assertions.mission_complete = a["mission_complete"].get<bool>();
        }
        if (a.contains("min_events")) s.assertions.min_events = int_field(a, "min_events", "assertions", 0);
        if (a.contains("max_events")) s.assertions.max_events = int_field(a, "max_events", "assertions", 0);
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot open scenario " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ScenarioError(path.string() + " is not valid JSON");
    return parse_scenario(doc, path.parent_path());
}

std::string scenario_room_id(const Scenario& s) {
    std::string id;
    for (char c : s.name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
        id.push_back(ok ? c : '_');
    }
    if (id.size() > 60) id.resize(60);
    id = "sim-" + id;
    return id.substr(0, 64);
}

// ---------------------------------------------------------------- plan

namespace {

struct PlannedAction {
    std::size_t bot = 0;
    std::int64_t at_ms = 0;  // virtual delivery time
    Message payload;
};

std::vector<BotAction> random_script(const RandomPolicy& p) {
    SeededRng rng(p.seed);
    std::vector<BotAction> out;
    for (std::size_t i = 0; i < p.actions; ++i) {
        std::int64_t at = p.offset_ms + static_cast<std::int64_t>(i + 1) * p.interval_ms;
        // Mostly short bursts, some chaos-sized ones, some swipes.
        auto roll = rng.uniform_index(10);
        GestureInput g;
        if (roll < 6) g = TapBurst{static_cast<int>(rng.uniform_index(3)) + 1};
        else if (roll < 8) g = TapBurst{static_cast<int>(rng.uniform_index(3)) + 4};
        else g = Swipe{kAllSwipeDirections[rng.uniform_index(4)]};
        out.push_back({at, msg::Gesture{g}});
    }
    return out;
}

// Delivery order of the scripted actions after latency, with strictly
// increasing virtual times so every reply can be matched to its input.
std::vector<PlannedAction> plan(const Scenario& s, const LatencyModel& latency) {
    std::vector<std::vector<BotAction>> scripts(s.num_bots);
    for (std::size_t b = 0; b < s.num_bots; ++b) {
        scripts[b] = s.bots[b].script;
        if (s.bots[b].random) {
            auto extra = random_script(*s.bots[b].random);
            scripts[b].insert(scripts[b].end(), extra.begin(), extra.end());
            std::stable_sort(scripts[b].begin(), scripts[b].end(),
                             [](const BotAction& x, const BotAction& y) { return x.at_ms < y.at_ms; });
        }
    }
    // Interleave by send time (stable per bot), then delay.
    std::vector<std::pair<std::size_t, const BotAction*>> sends;
    for (std::size_t b = 0; b < s.num_bots; ++b)
        for (const auto& a : scripts[b]) sends.emplace_back(b, &a);
    std::stable_sort(sends.begin(), sends.end(), [](const auto& x, const auto& y) {
        return std::tie(x.second->at_ms, x.first) < std::tie(y.second->at_ms, y.first);
    });
    std::vector<Transmission> stream;
    for (const auto& [b, a] : sends) stream.push_back({b, kScriptEpochMs + a->at_ms});
    auto deliveries = inject_latency(latency, stream);

    std::vector<PlannedAction> out;
    std::int64_t last = kScriptEpochMs - 1;
    for (const auto& d : deliveries) {
        std::int64_t t = std::max(d.deliver_ms, last + 1);
        last = t;
        out.push_back({d.connection, t, sends[d.index].second->payload});
    }
    return out;
}

// ---------------------------------------------------------------- drivers

struct BotInbox {
    std::vector<Envelope> envelopes;  // everything received, in order
    bool closed = false;
};

class Driver {
public:
    virtual ~Driver() = default;
    virtual void connect(std::size_t bots) = 0;
    /// Sends `payload` from `bot` at virtual time `t` and waits for the step.
    virtual void deliver(std::size_t bot, std::int64_t t, Message payload) = 0;
    virtual RoomState finish() = 0;
    virtual std::vector<BotInbox> inboxes() = 0;
    virtual bool open(std::size_t bot) = 0;
};

class InProcessDriver : public Driver {
public:
    InProcessDriver(RoomState initial, std::optional<std::filesystem::path> log_path) : state_(std::move(initial)) {
        if (log_path) log_ = std::make_unique<EventLog>(*log_path);
    }

    void connect(std::size_t bots) override {
        inbox_.resize(bots);
        player_.resize(bots);
    }

    bool open(std::size_t bot) override { return !inbox_[bot].closed; }

    void deliver(std::size_t bot, std::int64_t t, Message payload) override {
        // Same stamping and framing as the server.
        Envelope in{0, state_.room_id, player_[bot], t, std::move(payload)};
        if (std::holds_alternative<msg::Join>(in.payload)) in.sender.clear();
        in = decode_message(encode_message(in));
        Step step = apply_event(state_, in);
        if (log_) {
            std::vector<Envelope> record{in};
            for (const auto& e : step.out)
                if (e.seq > 0) record.push_back(e);
            log_->append_batch(record);
        }
        state_ = std::move(step.state);
        for (const auto& e : step.out) {
            Envelope wire = decode_message(encode_message(e));
            if (e.seq == 0) {
                if (const auto* w = std::get_if<msg::Welcome>(&e.payload)) player_[bot] = w->player_id;
                inbox_[bot].envelopes.push_back(std::move(wire));
                continue;
            }
            for (std::size_t b = 0; b < inbox_.size(); ++b)
                if (!player_[b].empty() && !inbox_[b].closed) inbox_[b].envelopes.push_back(wire);
            if (const auto* left = std::get_if<msg::PlayerLeft>(&e.payload))
                for (std::size_t b = 0; b < inbox_.size(); ++b)
                    if (player_[b] == left->player_id) {
                        player_[b].clear();
                        inbox_[b].closed = true;
                    }
        }
    }

    RoomState finish() override { return state_; }
    std::vector<BotInbox> inboxes() override { return inbox_; }

private:
    RoomState state_;
    std::unique_ptr<EventLog> log_;
    std::vector<BotInbox> inbox_;
    std::vector<PlayerId> player_;
};

class TcpDriver : public Driver {
public:
    TcpDriver(std::shared_ptr<const NarrativeConfig> config, std::uint64_t seed, std::filesystem::path log_dir,
              std::string room_id, std::chrono::milliseconds timeout)
        : room_id_(std::move(room_id)), timeout_(timeout), clock_(std::make_shared<std::atomic<std::int64_t>>(0)) {
        ServerOptions opts;
        opts.host = "127.0.0.1";
        opts.port = 0;
        opts.config = std::move(config);
        opts.seed = seed;
        opts.log_dir = std::move(log_dir);
        opts.threads = 2;
        // Keepalives would only add noise to a run that never idles.
        opts.heartbeat_interval = std::chrono::hours(1);
        opts.idle_timeout = std::chrono::hours(2);
        opts.clock = [c = clock_] { return c->load(); };
        server_ = std::make_unique<Server>(std::move(opts));
        server_->start();
    }

    ~TcpDriver() override { shutdown(); }

    void connect(std::size_t bots) override {
        namespace asio = boost::asio;
        for (std::size_t b = 0; b < bots; ++b) {
            auto link = std::make_unique<Link>(ioc_);
            link->socket.connect({asio::ip::make_address("127.0.0.1"), server_->port()});
            link->socket.set_option(asio::ip::tcp::no_delay(true));
            links_.push_back(std::move(link));
        }
        for (auto& l : links_) l->reader = std::thread([this, raw = l.get()] { read_loop(*raw); });
    }

    bool open(std::size_t bot) override {
        std::lock_guard lk(mu_);
        return !links_[bot]->inbox.closed && !links_[bot]->left;
    }

    void deliver(std::size_t bot, std::int64_t t, Message payload) override {
        Link& l = *links_[bot];
        const bool leaving = std::holds_alternative<msg::Leave>(payload);
        clock_->store(t);
        Envelope out{0, room_id_, l.player, t, std::move(payload)};
        std::string line = encode_message(out);
        boost::system::error_code ec;
        boost::asio::write(l.socket, boost::asio::buffer(line), ec);
        if (ec) throw HarnessTimeout("bot " + std::to_string(bot) + " cannot send: " + ec.message());

        std::unique_lock lk(mu_);
        bool ok = cv_.wait_for(lk, timeout_, [&] {
            if (leaving) return l.inbox.closed;
            if (l.inbox.closed) return true;
            return std::any_of(l.inbox.envelopes.begin() + static_cast<std::ptrdiff_t>(l.seen), l.inbox.envelopes.end(),
                               [&](const Envelope& e) { return e.sent_at == t; });
        });
        if (!ok) throw HarnessTimeout("no reply for bot " + std::to_string(bot) + " at t=" + std::to_string(t));
        if (leaving) l.left = true;
        for (; l.seen < l.inbox.envelopes.size(); ++l.seen)
            if (const auto* w = std::get_if<msg::Welcome>(&l.inbox.envelopes[l.seen].payload)) l.player = w->player_id;
    }

    RoomState finish() override {
        auto state = server_->room_state(room_id_);
        if (!state) throw HarnessTimeout("room " + room_id_ + " never opened");
        const std::int64_t last = state->next_seq - 1;
        std::unique_lock lk(mu_);
        bool ok = cv_.wait_for(lk, timeout_, [&] {
            for (auto& l : links_) {
                if (l->inbox.closed || l->player.empty()) continue;
                std::int64_t seen = 0;
                for (const auto& e : l->inbox.envelopes) seen = std::max(seen, e.seq);
                if (seen < last) return false;
            }
            return true;
        });
        if (!ok) throw HarnessTimeout("bots did not catch up with seq " + std::to_string(last));
        lk.unlock();
        shutdown();
        return *state;
    }

    std::vector<BotInbox> inboxes() override {
        std::lock_guard lk(mu_);
        std::vector<BotInbox> out;
        for (auto& l : links_) out.push_back(l->inbox);
        return out;
    }

private:
    struct Link {
        explicit Link(boost::asio::io_context& ioc) : socket(ioc) {}
        boost::asio::ip::tcp::socket socket;
        std::thread reader;
        BotInbox inbox;
        std::size_t seen = 0;
        PlayerId player;
        bool left = false;
    };

    void read_loop(Link& l) {
        boost::asio::streambuf buf;
        for (;;) {
            boost::system::error_code ec;
            boost::asio::read_until(l.socket, buf, '\n', ec);
            if (ec) break;
            std::istream is(&buf);
            std::string line;
            std::getline(is, line);
            if (line.empty() || line == "\r") continue;  // keepalive
            Envelope e;
            try {
                e = decode_message(line);
            } catch (const DecodeError&) {
                continue;
            }
            {
                std::lock_guard lk(mu_);
                l.inbox.envelopes.push_back(std::move(e));
            }
            cv_.notify_all();
        }
        {
            std::lock_guard lk(mu_);
            l.inbox.closed = true;
        }
        cv_.notify_all();
    }

    void shutdown() {
        if (server_) server_->stop();
        for (auto& l : links_) {
            boost::system::error_code ec;
            l->socket.shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
            if (l->reader.joinable()) l->reader.join();
            l->socket.close(ec);
        }
    }

    std::string room_id_;
    std::chrono::milliseconds timeout_;
    std::shared_ptr<std::atomic<std::int64_t>> clock_;
    std::unique_ptr<Server> server_;
    boost::asio::io_context ioc_;
    std::vector<std::unique_ptr<Link>> links_;
    std::mutex mu_;
    std::condition_variable cv_;
};

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("avatar-sync-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// ---------------------------------------------------------------- checks

void summarize(ScenarioReport& r, const std::vector<BotInbox>& inboxes) {
    std::map<std::int64_t, std::string> merged;
    bool identical = true;
    bool gap_free = true;
    for (std::size_t b = 0; b < inboxes.size(); ++b) {
        BotReport& br = r.bots[b];
        std::int64_t prev = 0;
        for (const auto& e : inboxes[b].envelopes) {
            if (const auto* w = std::get_if<msg::Welcome>(&e.payload)) {
                br.player_id = w->player_id;
                br.color = w->color;
            }
            if (std::holds_alternative<msg::ErrorReply>(e.payload)) ++br.errors;
            if (e.seq == 0) continue;
            std::string line = encode_message(e);
            if (prev != 0 && e.seq != prev + 1) gap_free = false;
            prev = e.seq;
            if (br.first_seq == 0) br.first_seq = e.seq;
            br.last_seq = e.seq;
            ++br.received;
            auto [it, inserted] = merged.emplace(e.seq, line);
            if (!inserted && it->second != line) identical = false;
            br.stream.push_back(std::move(line));
        }
    }

    bool monotone = true;
    bool colors_unique = true;
    std::int64_t last_total = 0;
    std::optional<std::int64_t> last_score_update;
    std::map<PlayerId, std::string> present;
    std::int64_t expect = merged.empty() ? 0 : merged.begin()->first;
    for (const auto& [seq, line] : merged) {
        if (seq != expect++) gap_free = false;
        Envelope e = decode_message(line);
        std::visit(overloaded{
                       [&](const msg::ActionBroadcast& a) { r.score_from_stream += a.points; },
                       [&](const msg::MinigameUpdate& m) {
                           if (m.snapshot.is_object() && m.snapshot.contains("awarded"))
                               r.score_from_stream += m.snapshot["awarded"].get<std::int64_t>();
                       },
                       [&](const msg::ScoreUpdate& s) {
                           if (s.total < last_total) monotone = false;
                           last_total = s.total;
                           last_score_update = s.total;
                       },
                       [&](const msg::MissionComplete&) { ++r.mission_complete_count; },
                       [&](const msg::PlayerJoined& p) {
                           for (const auto& [_, c] : present)
                               if (c == p.color) colors_unique = false;
                           present[p.player_id] = p.color;
                       },
                       [&](const msg::PlayerLeft& p) { present.erase(p.player_id); },
                       [](const auto&) {},
                   },
                   e.payload);
    }
    bool full_history = merged.empty() || merged.begin()->first == 1;
    r.invariants = {
        {"streams_gap_free", gap_free && full_history},
        {"streams_identical", identical},
        {"score_monotone", monotone},
        {"single_mission_complete", r.mission_complete_count <= 1 &&
                                        r.mission_complete_count == (r.mission_complete ? 1 : 0)},
        {"colors_unique", colors_unique},
        {"score_matches_stream",
         r.score_from_stream == r.final_score && last_score_update.value_or(0) == r.final_score},
        {"event_count_matches", merged.empty() ? r.event_count == 0 : merged.rbegin()->first == r.event_count},
    };
}

void check_assertions(ScenarioReport& r, const ScenarioAssertions& a) {
    if (a.final_score)
        r.assertions.push_back({"final_score", *a.final_score, r.final_score, *a.final_score == r.final_score});
    if (a.mission_complete)
        r.assertions.push_back(
            {"mission_complete", *a.mission_complete, r.mission_complete, *a.mission_complete == r.mission_complete});
    if (a.min_events)
        r.assertions.push_back({"min_events", *a.min_events, r.event_count, r.event_count >= *a.min_events});
    if (a.max_events)
        r.assertions.push_back({"max_events", *a.max_events, r.event_count, r.event_count <= *a.max_events});
}

}  // namespace

json ScenarioReport::to_json() const {
    json bots_j = json::array();
    for (const auto& b : bots)
        bots_j.push_back({{"player_id", b.player_id},
                          {"color", b.color},
                          {"received", b.received},
                          {"errors", b.errors},
                          {"first_seq", b.first_seq},
                          {"last_seq", b.last_seq}});
    json inv = json::object();
    for (const auto& [name, ok] : invariants) inv[name] = ok;
    json asserts = json::array();
    for (const auto& a : assertions)
        asserts.push_back({{"which", a.which}, {"expected", a.expected}, {"actual", a.actual}, {"passed", a.passed}});
    bool identical = true;
    for (const auto& [name, ok] : invariants)
        if (name == "streams_identical") identical = ok;
    return json{
        {"name", name},
        {"seed", seed},
        {"transport", to_string(transport)},
        {"latency", {{"base_ms", latency.base_ms}, {"jitter_ms", latency.jitter_ms}, {"seed", latency.seed}}},
        {"room_id", room_id},
        {"bots", std::move(bots_j)},
        {"streams_identical", identical},
        {"final_score", final_score},
        {"score_from_stream", score_from_stream},
        {"mission_complete", mission_complete},
        {"mission_complete_count", mission_complete_count},
        {"event_count", event_count},
        {"invariants", std::move(inv)},
        {"assertions", std::move(asserts)},
        {"passed", passed},
    };
}

void ScenarioReport::require_passed() const {
    for (const auto& [name, ok] : invariants)
        if (!ok) throw AssertionFailed(name);
    for (const auto& a : assertions)
        if (!a.passed) throw AssertionFailed(a.which);
}

ScenarioReport run_scenario(const Scenario& s, const RunOptions& options) {
    if (s.num_bots < 1 || s.num_bots > kRoomCapacity) throw ScenarioError("num_bots must be within 1..8");
    if (s.bots.size() != s.num_bots) throw ScenarioError("bots list does not match num_bots");

    ScenarioReport r;
    r.name = s.name;
    r.seed = options.seed;
    r.transport = options.transport.value_or(s.transport);
    r.latency = s.latency;
    if (options.jitter_ms) r.latency.jitter_ms = *options.jitter_ms;
    if (!s.latency_seed_given) r.latency.seed = options.seed;
    r.room_id = scenario_room_id(s);
    r.bots.resize(s.num_bots);

    std::optional<TempDir> scratch;
    std::filesystem::path log_dir;
    if (options.log_dir) {
        log_dir = *options.log_dir;
        std::filesystem::create_directories(log_dir);
        // The effective config, so the log can be replayed on its own.
        std::ofstream cfg(log_dir / (r.room_id + ".config.json"), std::ios::binary);
        cfg << config_to_json(s.config ? *s.config : NarrativeConfig{}).dump(2) << "\n";
    } else {
        scratch.emplace();
        log_dir = scratch->path();
    }

    auto config = s.config ? s.config : std::make_shared<const NarrativeConfig>();
    std::unique_ptr<Driver> driver;
    if (r.transport == Transport::Tcp) {
        driver = std::make_unique<TcpDriver>(config, options.seed, log_dir, r.room_id, options.timeout);
    } else {
        auto path = log_path_for(log_dir, r.room_id);
        std::error_code ec;
        std::filesystem::remove(path, ec);
        driver = std::make_unique<InProcessDriver>(create_room(r.room_id, config, options.seed), path);
    }
    driver->connect(s.num_bots);

    std::int64_t t = 0;
    for (std::size_t b = 0; b < s.num_bots; ++b) driver->deliver(b, ++t, msg::Join{"bot" + std::to_string(b + 1)});
    if (s.mode) driver->deliver(0, ++t, msg::SelectMode{*s.mode});

    for (auto& step : plan(s, r.latency)) {
        if (!driver->open(step.bot)) continue;  // the bot already left
        driver->deliver(step.bot, step.at_ms, std::move(step.payload));
    }

    RoomState final_state = driver->finish();
    r.final_state = room_snapshot(final_state);
    r.final_score = final_state.score;
    r.mission_complete = final_state.mission_complete;
    r.event_count = final_state.next_seq - 1;
    summarize(r, driver->inboxes());
    check_assertions(r, s.assertions);
    r.passed = std::all_of(r.invariants.begin(), r.invariants.end(), [](const auto& i) { return i.second; }) &&
               std::all_of(r.assertions.begin(), r.assertions.end(), [](const auto& a) { return a.passed; });
    return r;
}

}  // namespace avatar_sync
