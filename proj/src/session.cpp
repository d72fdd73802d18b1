#include "avatar_sync/session.hpp"

#include <algorithm>

namespace avatar_sync {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const NarrativeConfig& config_of(const RoomState& s) {
    static const NarrativeConfig kFallback{};
    return s.config ? *s.config : kFallback;
}

const Player& require_player(const RoomState& s, std::string_view id) {
    const Player* p = s.find_player(id);
    if (!p) throw GameError(ErrorCode::UnknownPlayer, "'" + std::string(id) + "' is not in this room");
    return *p;
}

std::string display(const Player& p) { return p.display_name.empty() ? p.id : p.display_name; }

std::string describe(const NarrativeConfig& cfg, const ActionOutcome& outcome) {
    return std::visit(overloaded{
                          [&](const DanceOutcome& d) { return "danced to " + cfg.dance_name(d.dance); },
                          [&](const SmallChaos& c) { return "launched a small chaos: " + cfg.dance_name(c.chosen); },
                          [&](const Chaos&) { return "launched chaos: " + cfg.chaos_track; },
                      },
                      outcome);
}

std::string_view kind_label(MinigameKind k) {
    switch (k) {
        case MinigameKind::HiddenObjects: return "the hidden objects game";
        case MinigameKind::Quiz: return "the ghost quiz";
        case MinigameKind::Word: return "the word game";
    }
    return "a minigame";
}

json minigame_internal_json(const MinigameState& m) {
    json j = minigame_snapshot(m);
    if (const auto* qs = std::get_if<QuizState>(&m)) {
        json qs_json = json::array();
        for (const auto& q : qs->questions) qs_json.push_back({{"question", q.question}, {"accepted_answers", q.accepted_answers}});
        j["questions"] = std::move(qs_json);
    } else if (const auto* ws = std::get_if<WordGameState>(&m)) {
        j["secret"] = ws->secret;
    } else if (const auto* hs = std::get_if<HiddenObjectsState>(&m)) {
        j["layout"] = hs->layout;
        j["target_pose"] = {{"x", hs->target_pose.x}, {"y", hs->target_pose.y}, {"rot_deg", hs->target_pose.rot_deg}};
        j["tolerance"] = {{"distance", hs->tolerance.distance}, {"degrees", hs->tolerance.degrees}};
    }
    return j;
}

// Working copy plus the envelopes emitted so far during one reducer step.
class StepBuilder {
public:
    StepBuilder(const RoomState& state, const Envelope& in) : s_(state), in_(in) {}

    RoomState& state() { return s_; }

    std::int64_t broadcast(Message m) {
        std::int64_t seq = s_.next_seq++;
        out_.push_back(Envelope{seq, s_.room_id, std::string(kServerSender), in_.sent_at, std::move(m)});
        return seq;
    }

    void reply(Message m) {
        out_.push_back(Envelope{0, s_.room_id, std::string(kServerSender), in_.sent_at, std::move(m)});
    }

    void notify(const Player& actor, std::string text) {
        broadcast(msg::Notification{actor.color, display(actor) + " " + std::move(text)});
    }

    void face(const PlayerId& actor) {
        s_.avatar.facing = actor;
        broadcast(msg::AvatarUpdate{s_.avatar});
    }

    void award(std::int64_t points) {
        if (points <= 0) return;
        s_.score += points;
        broadcast(msg::ScoreUpdate{s_.score});
        if (!s_.mission_complete && s_.score >= s_.mission_target) {
            s_.mission_complete = true;
            broadcast(msg::MissionComplete{s_.score});
        }
    }

    Step finish() && { return Step{std::move(s_), std::move(out_)}; }

private:
    RoomState s_;
    const Envelope& in_;
    std::vector<Envelope> out_;
};

msg::Welcome welcome_for(const RoomState& s, const Player& p) {
    msg::Welcome w;
    w.player_id = p.id;
    w.color = p.color;
    for (const auto& other : s.players) w.players.push_back({other.id, other.color});
    w.mode = s.mode;
    w.score = s.score;
    w.mission_target = s.mission_target;
    w.mission_complete = s.mission_complete;
    w.avatar = s.avatar;
    w.minigame = s.minigame ? minigame_snapshot(*s.minigame) : json(nullptr);
    return w;
}

std::string first_free_color(const RoomState& s) {
    for (auto color : kPalette) {
        bool taken = std::any_of(s.players.begin(), s.players.end(), [&](const Player& p) { return p.color == color; });
        if (!taken) return std::string(color);
    }
    throw GameError(ErrorCode::RoomFull, "room is full");
}

void admit(StepBuilder& b, const PlayerId& id, std::string display_name) {
    RoomState& s = b.state();
    if (s.find_player(id)) throw GameError(ErrorCode::DuplicatePlayer, "'" + id + "' already joined");
    if (s.players.size() >= kRoomCapacity) throw GameError(ErrorCode::RoomFull, "room is full");
    Player p{id, first_free_color(s), std::move(display_name), s.next_seq};
    s.players.push_back(p);
    ++s.admitted;
    b.reply(welcome_for(s, p));
    b.broadcast(msg::PlayerJoined{p.id, p.color});
}

void handle_gesture(StepBuilder& b, const Player& actor, const GestureInput& input) {
    RoomState& s = b.state();
    GestureEvent g = std::visit(overloaded{
                                    [](const TapBurst& t) -> GestureEvent { return t; },
                                    [](const Swipe& w) -> GestureEvent { return w; },
                                    [&](const TapTimes& t) -> GestureEvent {
                                        return classify_gesture(t.ms, config_of(s).burst_window_ms);
                                    },
                                },
                                input);
    auto [next, outcome] = resolve_short_action(s, actor.id, g);
    s = std::move(next);
    std::int64_t points = s.mission_complete ? 0 : score_action(s.mode, outcome);
    b.broadcast(msg::ActionBroadcast{actor.color, outcome, points});
    b.broadcast(msg::AvatarUpdate{s.avatar});
    b.notify(actor, describe(config_of(s), outcome));
    b.award(points);
}

void handle_select_mode(StepBuilder& b, const Player& actor, GameMode mode) {
    RoomState& s = b.state();
    s.mode = mode;
    b.broadcast(msg::ModeChanged{mode, actor.color});
    if (mode != GameMode::HistoriaSurpresa && s.minigame) {
        json snap = minigame_snapshot(*s.minigame);
        snap["cancelled"] = true;
        s.minigame.reset();
        b.broadcast(msg::MinigameUpdate{std::move(snap)});
    }
}

void handle_start_minigame(StepBuilder& b, const Player& actor, MinigameKind kind) {
    RoomState& s = b.state();
    s = start_minigame(s, kind);
    b.broadcast(msg::MinigameUpdate{minigame_snapshot(*s.minigame)});
    b.face(actor.id);
    b.notify(actor, "started " + std::string(kind_label(kind)));
}

void handle_minigame_input(StepBuilder& b, const Player& actor, const MinigameInput& input) {
    RoomState& s = b.state();
    if (!s.minigame) throw GameError(ErrorCode::NoActiveMinigame, "no minigame is running");
    MinigameState& game = *s.minigame;

    auto expect = [&](MinigameKind k) {
        if (kind_of(game) != k) throw GameError(ErrorCode::WrongMinigame, "input does not match the running minigame");
    };

    std::string note;
    std::visit(overloaded{
                   [&](const PlaceMarker& p) {
                       expect(MinigameKind::HiddenObjects);
                       auto r = place_marker(std::get<HiddenObjectsState>(game), p.pose);
                       game = r.state;
                       note = r.accepted ? "placed the marker, now find the hidden objects"
                                         : "missed the marker position, try again";
                   },
                   [&](const FindObject& f) {
                       expect(MinigameKind::HiddenObjects);
                       auto r = find_object(std::get<HiddenObjectsState>(game), f.object_id);
                       game = r.state;
                       note = (r.newly_found ? "found " : "pointed at the already found ") + f.object_id;
                       if (r.state.phase == HuntPhase::KeyFound && r.newly_found) note += " and the key appeared";
                   },
                   [&](const UseKey&) {
                       expect(MinigameKind::HiddenObjects);
                       game = use_key(std::get<HiddenObjectsState>(game));
                       note = "opened the chest";
                   },
                   [&](const AnswerQuestion& a) {
                       expect(MinigameKind::Quiz);
                       auto r = answer_question(std::get<QuizState>(game), a.transcript);
                       game = r.state;
                       note = r.correct ? "answered correctly" : "answered wrong";
                   },
                   [&](const GuessWord& g) {
                       expect(MinigameKind::Word);
                       try {
                           game = guess(std::get<WordGameState>(game), g.text);
                           note = "guessed '" + g.text + "'";
                       } catch (const GameError& e) {
                           if (e.code() != ErrorCode::RepeatedLetter) throw;
                           note.clear();
                       }
                   },
               },
               input);

    if (note.empty()) {  // repeated letter: costs nothing, nothing changes
        b.notify(actor, "tried a letter that was already guessed");
        return;
    }

    json snap = minigame_snapshot(game);
    std::int64_t awarded = 0;
    if (is_finished(game)) {
        awarded = s.mission_complete ? 0 : minigame_points(game);
        snap["awarded"] = awarded;
        s.minigame.reset();
    }
    b.broadcast(msg::MinigameUpdate{std::move(snap)});
    b.face(actor.id);
    b.notify(actor, note);
    b.award(awarded);
}

void handle_leave(StepBuilder& b, const Player& leaver) {
    RoomState& s = b.state();
    PlayerId id = leaver.id;
    s.players.erase(std::remove_if(s.players.begin(), s.players.end(), [&](const Player& p) { return p.id == id; }),
                    s.players.end());
    s.tap_gestures.erase(id);
    b.broadcast(msg::PlayerLeft{id});
    if (s.avatar.facing == id) {
        s.avatar.facing.reset();
        b.broadcast(msg::AvatarUpdate{s.avatar});
    }
}

}  // namespace

const Player* RoomState::find_player(std::string_view id) const {
    auto it = std::find_if(players.begin(), players.end(), [&](const Player& p) { return p.id == id; });
    return it == players.end() ? nullptr : &*it;
}

bool RoomState::operator==(const RoomState& o) const {
    bool same_config = config == o.config || (config && o.config && *config == *o.config);
    return same_config && room_id == o.room_id && players == o.players && mode == o.mode && avatar == o.avatar &&
           score == o.score && mission_target == o.mission_target && mission_complete == o.mission_complete &&
           tap_gestures == o.tap_gestures && minigame == o.minigame && rng == o.rng && next_seq == o.next_seq &&
           admitted == o.admitted;
}

RoomState create_room(std::string room_id, std::shared_ptr<const NarrativeConfig> config, std::uint64_t seed) {
    if (room_id.empty()) throw std::invalid_argument("room id must not be empty");
    if (!config) config = std::make_shared<const NarrativeConfig>();
    RoomState s;
    s.room_id = std::move(room_id);
    s.mission_target = config->mission_target;
    s.config = std::move(config);
    s.rng = RoomRng(seed);
    return s;
}

Step join_room(const RoomState& state, const PlayerId& player_id, std::string display_name, std::int64_t now_ms) {
    Envelope in{0, state.room_id, player_id, now_ms, msg::Join{display_name}};
    StepBuilder b(state, in);
    admit(b, player_id, std::move(display_name));
    return std::move(b).finish();
}

TapBurst classify_gesture(std::span<const std::int64_t> taps, std::int64_t burst_window_ms) {
    if (taps.empty()) throw GameError(ErrorCode::EmptyInput, "no tap timestamps");
    if (burst_window_ms < 0) throw GameError(ErrorCode::InvalidGesture, "negative burst window");
    if (!std::is_sorted(taps.begin(), taps.end()))
        throw GameError(ErrorCode::InvalidGesture, "tap timestamps must be ascending");
    int count = 1;
    for (std::size_t i = taps.size() - 1; i > 0 && taps[i] - taps[i - 1] <= burst_window_ms; --i) ++count;
    return TapBurst{count};
}

ChaosKind chaos_decision(std::int64_t individual_tap_gestures, std::int64_t num_users, const Ratio& threshold) {
    if (num_users < 1) throw GameError(ErrorCode::ZeroUsers, "chaos decision needs at least one user");
    if (individual_tap_gestures < 0) throw GameError(ErrorCode::InvalidGesture, "negative tap count");
    return threshold.exceeds(individual_tap_gestures, num_users) ? ChaosKind::Chaos : ChaosKind::SmallChaos;
}

std::pair<RoomState, ActionOutcome> resolve_short_action(const RoomState& state, const PlayerId& actor,
                                                         const GestureEvent& gesture) {
    require_player(state, actor);
    RoomState s = state;
    ActionOutcome outcome;
    if (const auto* tap = std::get_if<TapBurst>(&gesture)) {
        if (tap->count < 1) throw GameError(ErrorCode::InvalidGesture, "tap burst needs at least one tap");
        std::int64_t& so_far = s.tap_gestures[actor];
        switch (tap->count) {
            case 1: outcome = DanceOutcome{Dance::Macarena}; break;
            case 2: outcome = DanceOutcome{Dance::Samba}; break;
            case 3: outcome = DanceOutcome{Dance::MoveIt}; break;
            default: {
                auto users = static_cast<std::int64_t>(s.players.size());
                if (chaos_decision(so_far, users, config_of(s).chaos_threshold) == ChaosKind::Chaos)
                    outcome = Chaos{};
                else
                    outcome = SmallChaos{kAllDances[s.rng.uniform_index(std::size(kAllDances))]};
            }
        }
        ++so_far;
    } else {
        outcome = DanceOutcome{Dance::Twist};
    }
    s.avatar.animation = outcome;
    s.avatar.facing = actor;
    return {std::move(s), outcome};
}

int score_action(GameMode mode, const ActionOutcome& outcome) {
    if (!awards_points(mode)) return 0;
    return std::visit(overloaded{
                          [](const DanceOutcome&) { return 1; },
                          [](const SmallChaos&) { return 2; },
                          [](const Chaos&) { return 3; },
                      },
                      outcome);
}

RoomState start_minigame(const RoomState& state, MinigameKind kind) {
    if (state.mode != GameMode::HistoriaSurpresa)
        throw GameError(ErrorCode::WrongMode, "minigames are only available in the surprise mode");
    if (state.minigame) throw GameError(ErrorCode::MinigameAlreadyActive, "a minigame is already running");
    RoomState s = state;
    const NarrativeConfig& cfg = config_of(s);
    switch (kind) {
        case MinigameKind::HiddenObjects: s.minigame = start_hidden_objects(cfg.hidden_objects); break;
        case MinigameKind::Quiz: s.minigame = start_quiz(cfg.quiz); break;
        case MinigameKind::Word: {
            if (cfg.words.empty()) throw GameError(ErrorCode::InvalidGuess, "no words configured");
            s.minigame = start_word_game(cfg.words[s.rng.uniform_index(cfg.words.size())]);
            break;
        }
    }
    return s;
}

Step apply_event(const RoomState& state, const Envelope& in) {
    StepBuilder b(state, in);
    try {
        if (in.room_id != state.room_id)
            throw GameError(ErrorCode::BadMessage, "envelope addressed to room '" + in.room_id + "'");
        if (!is_client_message(in.payload))
            throw GameError(ErrorCode::BadMessage, "'" + std::string(tag_of(in.payload)) + "' is a server message");

        if (const auto* join = std::get_if<msg::Join>(&in.payload)) {
            if (state.find_player(in.sender)) throw GameError(ErrorCode::AlreadyJoined, "already in this room");
            if (state.players.size() >= kRoomCapacity) throw GameError(ErrorCode::RoomFull, "room is full");
            admit(b, "p" + std::to_string(state.admitted + 1), join->display_name);
        } else {
            const Player actor = require_player(state, in.sender);
            std::visit(overloaded{
                           [&](const msg::Leave&) { handle_leave(b, actor); },
                           [&](const msg::Gesture& g) { handle_gesture(b, actor, g.gesture); },
                           [&](const msg::SelectMode& m) { handle_select_mode(b, actor, m.mode); },
                           [&](const msg::StartMinigame& m) { handle_start_minigame(b, actor, m.kind); },
                           [&](const msg::MinigameInputMsg& m) { handle_minigame_input(b, actor, m.input); },
                           [](const auto&) {},
                       },
                       in.payload);
        }
    } catch (const GameError& e) {
        Envelope reply{0, state.room_id, std::string(kServerSender), in.sent_at,
                       msg::ErrorReply{std::string(to_string(e.code())), e.what()}};
        return Step{state, {std::move(reply)}};
    }
    return std::move(b).finish();
}

json room_snapshot(const RoomState& s) {
    json players = json::array();
    for (const auto& p : s.players)
        players.push_back(
            {{"id", p.id}, {"color", p.color}, {"display_name", p.display_name}, {"joined_at_seq", p.joined_at_seq}});
    json taps = json::object();
    for (const auto& [id, n] : s.tap_gestures) taps[id] = n;
    return json{
        {"room_id", s.room_id},
        {"players", std::move(players)},
        {"mode", to_string(s.mode)},
        {"avatar", avatar_to_json(s.avatar)},
        {"score", s.score},
        {"mission_target", s.mission_target},
        {"mission_complete", s.mission_complete},
        {"tap_gestures", std::move(taps)},
        {"minigame", s.minigame ? minigame_internal_json(*s.minigame) : json(nullptr)},
        {"rng", {{"seed", s.rng.seed()}, {"draws", s.rng.draws()}}},
        {"next_seq", s.next_seq},
        {"admitted", s.admitted},
    };
}

}  // namespace avatar_sync
