// Acceptance checks. One line per criterion: PASS/FAIL, name, wall time and a
// short detail. Exit status is non-zero if any criterion fails or overruns
// its time budget.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "avatar_sync/event_log.hpp"
#include "avatar_sync/harness.hpp"
#include "avatar_sync/minigames.hpp"
#include "avatar_sync/session.hpp"
#include "oracles.hpp"

using namespace avatar_sync;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(AVATAR_SYNC_SOURCE_DIR) / "scenarios";

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail << what;
        }
    }
};

struct Criterion {
    std::string name;
    std::chrono::milliseconds budget;
    std::function<void(Check&)> body;
};

std::string category_of(const ActionOutcome& o) {
    if (std::holds_alternative<DanceOutcome>(o)) return "dance";
    if (std::holds_alternative<SmallChaos>(o)) return "small_chaos";
    return "chaos";
}

struct Harness {
    RoomState state;
    std::int64_t clock = 0;

    Harness(std::shared_ptr<const NarrativeConfig> cfg, std::uint64_t seed) : state(create_room("acc", std::move(cfg), seed)) {}

    Step send(const PlayerId& who, Message m) {
        Step step = apply_event(state, Envelope{0, "acc", who, ++clock, std::move(m)});
        state = step.state;
        return step;
    }
};

template <class T>
std::vector<T> all_of_type(const Step& s) {
    std::vector<T> out;
    for (const auto& e : s.out)
        if (const auto* p = std::get_if<T>(&e.payload)) out.push_back(*p);
    return out;
}

std::optional<std::string> error_code(const Step& s) {
    auto errs = all_of_type<msg::ErrorReply>(s);
    if (errs.empty()) return std::nullopt;
    return errs.front().code;
}

std::shared_ptr<const NarrativeConfig> default_cfg() { return std::make_shared<const NarrativeConfig>(); }

// ---------------------------------------------------------------- criteria

void gesture_mapping(Check& c) {
    std::vector<std::pair<GestureInput, std::string>> cases;
    for (int taps = 1; taps <= 3; ++taps) cases.push_back({TapBurst{taps}, oracle::dance_for_taps(taps)});
    for (auto d : kAllSwipeDirections) cases.push_back({Swipe{d}, oracle::dance_for_swipe()});
    for (auto mode : {GameMode::Toques, GameMode::HistoriaAvatar, GameMode::HistoriaSurpresa}) {
        for (const auto& [gesture, expected] : cases) {
            Harness h(default_cfg(), 1);
            h.send("", msg::Join{});
            h.send("p1", msg::SelectMode{mode});
            Step step = h.send("p1", msg::Gesture{gesture});
            auto acts = all_of_type<msg::ActionBroadcast>(step);
            c.expect(acts.size() == 1, "no action broadcast");
            if (acts.empty()) return;
            const auto* dance = std::get_if<DanceOutcome>(&acts[0].outcome);
            c.expect(dance && to_string(dance->dance) == expected,
                     "gesture mapped to " + outcome_to_json(acts[0].outcome).dump() + ", expected " + expected);
            auto avatar = all_of_type<msg::AvatarUpdate>(step);
            c.expect(avatar.size() == 1 && avatar[0].avatar.animation == std::optional<ActionOutcome>(acts[0].outcome),
                     "avatar does not show the outcome");
        }
    }
    c.detail << cases.size() << " gestures x 3 modes";
}

void point_rules(Check& c) {
    std::mt19937_64 rng(20240611);
    const double taus[] = {0.5, 1.0, 2.0};
    std::map<double, std::shared_ptr<const NarrativeConfig>> cfgs;
    for (double tau : taus) {
        NarrativeConfig cfg;
        cfg.chaos_threshold = Ratio::from_double(tau);
        cfgs[tau] = std::make_shared<const NarrativeConfig>(cfg);
    }
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    std::map<std::string, long> seen;
    long completed = 0;

    for (int seq = 0; seq < 10'000 && c.ok; ++seq) {
        double tau = taus[pick(3)];
        Harness h(cfgs[tau], rng());
        oracle::ScoreModel model;
        model.tau = tau;
        model.target = kDefaultMissionTarget;
        std::vector<PlayerId> present;
        int mission_messages = 0;

        auto join = [&] {
            Step s = h.send("", msg::Join{});
            auto w = all_of_type<msg::Welcome>(s);
            c.expect(w.size() == 1, "join failed");
            if (w.empty()) return;
            present.push_back(w[0].player_id);
            model.join(w[0].player_id);
        };
        for (std::size_t i = 0, n = 1 + pick(3); i < n; ++i) join();

        std::size_t steps = 1 + pick(80);
        for (std::size_t k = 0; k < steps && c.ok; ++k) {
            auto roll = pick(100);
            if (roll < 8 && present.size() < kRoomCapacity) {
                join();
            } else if (roll < 14 && present.size() > 1) {
                auto i = pick(present.size());
                h.send(present[i], msg::Leave{});
                model.leave(present[i]);
                present.erase(present.begin() + static_cast<std::ptrdiff_t>(i));
            } else if (roll < 20) {
                GameMode m = std::array{GameMode::Toques, GameMode::HistoriaAvatar, GameMode::HistoriaSurpresa}[pick(3)];
                h.send(present[pick(present.size())], msg::SelectMode{m});
                model.mode = m == GameMode::Toques ? "toques" : std::string(to_string(m));
            } else {
                const PlayerId& who = present[pick(present.size())];
                std::optional<int> taps;
                GestureInput g;
                if (pick(4) == 0) {
                    g = Swipe{kAllSwipeDirections[pick(4)]};
                } else {
                    taps = 1 + static_cast<int>(pick(7));
                    g = TapBurst{*taps};
                }
                int mission_before = model.mission_events;
                auto [category, points] = model.gesture(who, taps);
                Step step = h.send(who, msg::Gesture{g});
                auto acts = all_of_type<msg::ActionBroadcast>(step);
                c.expect(acts.size() == 1, "gesture produced no broadcast");
                if (acts.empty()) break;
                c.expect(category_of(acts[0].outcome) == category,
                         "sequence " + std::to_string(seq) + ": category " + category_of(acts[0].outcome) + " vs oracle " + category);
                c.expect(acts[0].points == points, "sequence " + std::to_string(seq) + ": points " +
                                                       std::to_string(acts[0].points) + " vs oracle " + std::to_string(points));
                auto mc = all_of_type<msg::MissionComplete>(step);
                mission_messages += static_cast<int>(mc.size());
                c.expect(static_cast<int>(mc.size()) == model.mission_events - mission_before, "mission complete at the wrong step");
                if (!mc.empty()) c.expect(mc[0].final_total >= model.target && mc[0].final_total - points < model.target,
                                          "mission complete not at first score >= target");
                ++seen[category + "/" + model.mode];
            }
            c.expect(h.state.score == model.score, "score " + std::to_string(h.state.score) + " vs oracle " + std::to_string(model.score));
            c.expect(h.state.mission_complete == (model.mission_events > 0), "mission flag disagrees");
        }
        c.expect(mission_messages <= 1, "mission completed more than once");
        completed += mission_messages;
    }
    c.expect(seen.size() >= 6, "random sequences missed outcome/mode combinations");
    c.expect(completed > 0, "no sequence reached the mission target");
    if (c.ok) c.detail << "10000 sequences, " << completed << " missions completed";
}

void chaos_ratio(Check& c) {
    long cells = 0;
    for (double tau : {0.5, 1.0, 2.0}) {
        Ratio r = Ratio::from_double(tau);
        for (std::int64_t users = 1; users <= 8; ++users)
            for (std::int64_t taps = 0; taps <= 50; ++taps) {
                bool chaos = chaos_decision(taps, users, r) == ChaosKind::Chaos;
                c.expect(chaos == oracle::is_chaos(taps, users, tau),
                         "taps=" + std::to_string(taps) + " users=" + std::to_string(users) + " tau=" + std::to_string(tau));
                for (std::int64_t k = 2; k <= 6; ++k)
                    c.expect(chaos_decision(k * taps, k * users, r) == chaos_decision(taps, users, r),
                             "scaling changed the selector at taps=" + std::to_string(taps));
                ++cells;
            }
    }
    try {
        chaos_decision(1, 0, Ratio{1, 1});
        c.expect(false, "zero users accepted");
    } catch (const GameError& e) {
        c.expect(e.code() == ErrorCode::ZeroUsers, "zero users gave the wrong error");
    }
    if (c.ok) c.detail << cells << " grid cells, scaling k=2..6";
}

std::string word_state_key(const WordGameState& w) {
    std::string k(w.guessed_letters.begin(), w.guessed_letters.end());
    k += '|' + std::to_string(w.wrong_attempts) + '|' + std::string(to_string(w.status)) + '|';
    for (bool b : w.revealed) k += b ? '1' : '0';
    return k;
}

std::string pattern_of(const WordGameState& w) {
    std::string p;
    for (std::size_t i = 0; i < w.secret.size(); ++i) p += (w.status == WordStatus::Won || w.revealed[i]) ? w.secret[i] : '_';
    return p;
}

// Exhaustive search over guess sequences, one representative history per
// distinct game state. Returns the largest award seen on a finished game.
struct WordSearch {
    Check& c;
    std::string secret;
    std::vector<std::string> guesses;
    std::set<std::string> visited;
    long states = 0;
    long lost = 0;
    int max_points = 0;

    void run() {
        std::vector<std::string> history;
        visit(start_word_game(secret), history);
    }

    void visit(const WordGameState& w, std::vector<std::string>& history) {
        if (!c.ok || !visited.insert(word_state_key(w)).second) return;
        ++states;
        auto o = oracle::hangman(secret, history);
        std::string status(to_string(w.status));
        c.expect(status == o.status && w.wrong_attempts == o.wrong && pattern_of(w) == o.pattern,
                 secret + " after " + std::to_string(history.size()) + " guesses: " + status + "/" +
                     std::to_string(w.wrong_attempts) + " vs oracle " + o.status + "/" + std::to_string(o.wrong));
        c.expect((w.wrong_attempts >= kMaxWrongAttempts) == (w.status == WordStatus::Lost), "7 wrong attempts without Lost");
        c.expect(!(w.status == WordStatus::Won && w.wrong_attempts >= kMaxWrongAttempts), "Won with 7 wrong attempts");
        if (w.status != WordStatus::InProgress) {
            int pts = minigame_points(MinigameState{w});
            c.expect(pts == oracle::word_points(o), "award differs from oracle");
            max_points = std::max(max_points, pts);
            if (w.status == WordStatus::Lost) ++lost;
            try {
                guess(w, "a");
                c.expect(false, "guess accepted after the game ended");
            } catch (const GameError& e) {
                c.expect(e.code() == ErrorCode::GameOver, "finished game gave the wrong error");
            }
            return;
        }
        for (const auto& g : guesses) {
            WordGameState next;
            try {
                next = guess(w, g);
            } catch (const GameError& e) {
                c.expect(e.code() == ErrorCode::RepeatedLetter && g.size() == 1 && w.guessed_letters.count(g[0]),
                         "unexpected error for guess " + g);
                continue;
            }
            history.push_back(g);
            visit(next, history);
            history.pop_back();
        }
    }
};

std::vector<std::string> small_words() {
    std::vector<std::string> out;
    std::vector<std::string> frontier{""};
    for (int len = 1; len <= 4; ++len) {
        std::vector<std::string> grown;
        for (const auto& w : frontier)
            for (char ch : {'a', 'b', 'c'}) grown.push_back(w + ch);
        out.insert(out.end(), grown.begin(), grown.end());
        frontier = std::move(grown);
    }
    return out;
}

void word_game(Check& c) {
    long states = 0, lost = 0;
    auto words = small_words();
    for (const auto& secret : words) {
        WordSearch s{c, secret, {}};
        for (char ch = 'a'; ch <= 'j'; ++ch) s.guesses.emplace_back(1, ch);
        s.guesses.push_back(secret);
        s.guesses.push_back("abcd" == secret ? "dcba" : "abcd");
        s.run();
        states += s.states;
        lost += s.lost;
        if (!c.ok) return;
    }
    c.expect(lost > 0, "no Lost state reached");
    if (c.ok) c.detail << words.size() << " words, " << states << " states, " << lost << " lost";
}

std::vector<std::string> stripped(const std::vector<std::string>& stream) {
    std::vector<std::string> out;
    for (const auto& line : stream) {
        Envelope e = decode_message(line);
        e.sent_at = 0;
        out.push_back(encode_message(e));
    }
    return out;
}

void latency_consistency(Check& c) {
    int runs = 0;
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".json") continue;
        Scenario sc = load_scenario(entry.path());
        if (sc.num_bots != 2) continue;
        std::optional<ScenarioReport> base;
        for (std::int64_t jitter : {0, 100, 500, 1000}) {
            RunOptions o;
            o.jitter_ms = jitter;
            auto t0 = std::chrono::steady_clock::now();
            ScenarioReport r = run_scenario(sc, o);
            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
            ++runs;
            c.expect(ms.count() < 10'000, sc.name + " run exceeded 10 s");
            for (const auto& [inv, ok] : r.invariants) c.expect(ok, sc.name + " jitter " + std::to_string(jitter) + ": " + inv);
            if (!base) {
                base = std::move(r);
                continue;
            }
            c.expect(r.final_score == base->final_score, sc.name + ": score differs at jitter " + std::to_string(jitter));
            for (std::size_t b = 0; b < r.bots.size(); ++b)
                c.expect(stripped(r.bots[b].stream) == stripped(base->bots[b].stream),
                         sc.name + ": bot " + std::to_string(b) + " stream differs at jitter " + std::to_string(jitter));
        }
    }
    c.expect(runs >= 8, "fewer than two duo scenarios found");
    if (c.ok) c.detail << runs / 4 << " duo scenarios x 4 jitters";
}

void deterministic_replay(Check& c) {
    fs::path dir = fs::temp_directory_path() / ("avatar-sync-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    int count = 0;
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".json") continue;
        Scenario sc = load_scenario(entry.path());
        RunOptions o;
        o.seed = 1234;
        o.log_dir = dir / sc.name;
        ScenarioReport r = run_scenario(sc, o);
        auto cfg = std::make_shared<const NarrativeConfig>(load_config_file(*o.log_dir / (r.room_id + ".config.json")));
        ReplayResult rep = replay_log(log_path_for(*o.log_dir, r.room_id), cfg, o.seed);
        c.expect(room_snapshot(rep.final_state).dump() == r.final_state.dump(), sc.name + ": replayed state differs");
        c.expect(!rep.truncated_tail, sc.name + ": log has a truncated tail");
        ++count;
    }
    fs::remove_all(dir);
    c.expect(count > 0, "no scenarios found");
    if (c.ok) c.detail << count << " scenarios replayed";
}

void colors_and_capacity(Check& c) {
    Harness h(default_cfg(), 3);
    std::set<std::string> colors;
    std::vector<msg::Welcome> welcomes;
    for (std::size_t i = 0; i < kRoomCapacity; ++i) {
        auto w = all_of_type<msg::Welcome>(h.send("", msg::Join{}));
        c.expect(w.size() == 1, "join " + std::to_string(i + 1) + " failed");
        if (w.empty()) return;
        colors.insert(w[0].color);
        welcomes.push_back(w[0]);
    }
    c.expect(colors.size() == 8, "colors are not distinct");
    RoomState before = h.state;
    Step ninth = h.send("", msg::Join{});
    c.expect(error_code(ninth) == "room_full", "ninth join was not refused");
    c.expect(h.state == before, "refused join changed the room");
    h.send(welcomes[2].player_id, msg::Leave{});
    auto back = all_of_type<msg::Welcome>(h.send("", msg::Join{}));
    c.expect(back.size() == 1 && back[0].color == welcomes[2].color, "freed color was not reused");
    std::set<std::string> now;
    for (const auto& p : h.state.players) now.insert(p.color);
    c.expect(now.size() == 8, "colors collide after recycling");
    if (c.ok) c.detail << "8 distinct, 9th room_full, color recycled";
}

void minigame_cap(Check& c) {
    int max_points = 0;
    long terminals = 0;

    for (std::size_t n = 1; n <= 3; ++n) {
        HiddenObjectsLayout layout;
        layout.target_pose = {50, 50, 90};
        for (std::size_t i = 0; i < n; ++i) layout.objects.push_back({"o" + std::to_string(i), double(i), double(i)});
        std::vector<MinigameInput> inputs{PlaceMarker{layout.target_pose}, PlaceMarker{{0, 0, 0}}, FindObject{"ghost"}, UseKey{}};
        for (const auto& o : layout.objects) inputs.push_back(FindObject{o.id});
        std::vector<HiddenObjectsState> seen;
        std::function<void(const HiddenObjectsState&)> walk = [&](const HiddenObjectsState& s) {
            if (std::find(seen.begin(), seen.end(), s) != seen.end()) return;
            seen.push_back(s);
            if (is_finished(MinigameState{s})) {
                int p = minigame_points(MinigameState{s});
                c.expect(p >= 0 && p <= kMaxMinigamePoints, "hidden objects awarded " + std::to_string(p));
                max_points = std::max(max_points, p);
                ++terminals;
                return;
            }
            for (const auto& in : inputs) {
                try {
                    HiddenObjectsState next = std::visit(
                        [&](const auto& v) -> HiddenObjectsState {
                            using T = std::decay_t<decltype(v)>;
                            if constexpr (std::is_same_v<T, PlaceMarker>) return place_marker(s, v.pose).state;
                            else if constexpr (std::is_same_v<T, FindObject>) return find_object(s, v.object_id).state;
                            else if constexpr (std::is_same_v<T, UseKey>) return use_key(s);
                            else return s;
                        },
                        in);
                    walk(next);
                } catch (const GameError&) {
                }
            }
        };
        walk(start_hidden_objects(layout));
    }

    for (std::size_t n = 1; n <= 5; ++n) {
        std::vector<QuizQuestion> qs(n, QuizQuestion{"q", {"a"}});
        std::function<void(const QuizState&)> walk = [&](const QuizState& s) {
            if (s.finished) {
                int p = minigame_points(MinigameState{s});
                c.expect(p >= 0 && p <= kMaxMinigamePoints, "quiz awarded " + std::to_string(p));
                max_points = std::max(max_points, p);
                ++terminals;
                return;
            }
            for (const char* answer : {"a", "b"}) walk(answer_question(s, answer).state);
        };
        walk(start_quiz(qs));
    }

    for (const auto& secret : small_words()) {
        Check inner;
        WordSearch s{inner, secret, {}};
        for (char ch = 'a'; ch <= 'h'; ++ch) s.guesses.emplace_back(1, ch);
        s.guesses.push_back(secret);
        s.run();
        c.expect(inner.ok, "word search: " + inner.detail.str());
        c.expect(s.max_points <= kMaxMinigamePoints, "word game awarded " + std::to_string(s.max_points));
        max_points = std::max(max_points, s.max_points);
        terminals += s.states;
    }

    // The reducer adds exactly the capped award to the room score.
    NarrativeConfig cfg;
    cfg.quiz.assign(5, QuizQuestion{"q", {"a"}});
    auto shared = std::make_shared<const NarrativeConfig>(cfg);
    for (int mask = 0; mask < 32; ++mask) {
        Harness h(shared, 5);
        h.send("", msg::Join{});
        h.send("p1", msg::SelectMode{GameMode::HistoriaSurpresa});
        h.send("p1", msg::StartMinigame{MinigameKind::Quiz});
        for (int q = 0; q < 5; ++q)
            h.send("p1", msg::MinigameInputMsg{AnswerQuestion{(mask >> q) & 1 ? "a" : "zz"}});
        c.expect(h.state.score >= 0 && h.state.score <= kMaxMinigamePoints, "reducer awarded " + std::to_string(h.state.score));
        c.expect(!h.state.minigame, "quiz did not finish in the reducer");
    }
    c.expect(max_points == kMaxMinigamePoints, "the cap is never reached");
    if (c.ok) c.detail << terminals << " states checked, max award " << max_points;
}

}  // namespace

int main() {
    using namespace std::chrono_literals;
    const std::vector<Criterion> criteria{
        {"gesture_mapping", 1000ms, gesture_mapping},
        {"point_rules", 10'000ms, point_rules},
        {"chaos_ratio", 1000ms, chaos_ratio},
        {"word_game", 30'000ms, word_game},
        {"latency_consistency", 320'000ms, latency_consistency},
        {"deterministic_replay", 30'000ms, deterministic_replay},
        {"colors_and_capacity", 1000ms, colors_and_capacity},
        {"minigame_cap", 10'000ms, minigame_cap},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Check c;
        auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail << "exception: " << e.what();
        }
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
        if (c.ok && ms > cr.budget) {
            c.ok = false;
            c.detail << "; over budget of " << cr.budget.count() << " ms";
        }
        if (!c.ok) ++failed;
        std::cout << (c.ok ? "PASS " : "FAIL ") << cr.name << " (" << ms.count() << " ms) " << c.detail.str() << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
