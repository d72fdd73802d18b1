#include "avatar_sync/protocol.hpp"

#include <cmath>
#include <type_traits>

namespace avatar_sync {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

template <typename T>
struct TagOf;
#define AVATAR_SYNC_TAG(type, name) \
    template <>                     \
    struct TagOf<type> {            \
        static constexpr std::string_view value = name; \
    };
AVATAR_SYNC_TAG(msg::Join, "join")
AVATAR_SYNC_TAG(msg::Leave, "leave")
AVATAR_SYNC_TAG(msg::Gesture, "gesture")
AVATAR_SYNC_TAG(msg::SelectMode, "select_mode")
AVATAR_SYNC_TAG(msg::StartMinigame, "start_minigame")
AVATAR_SYNC_TAG(msg::MinigameInputMsg, "minigame_input")
AVATAR_SYNC_TAG(msg::Welcome, "welcome")
AVATAR_SYNC_TAG(msg::PlayerJoined, "player_joined")
AVATAR_SYNC_TAG(msg::PlayerLeft, "player_left")
AVATAR_SYNC_TAG(msg::ActionBroadcast, "action_broadcast")
AVATAR_SYNC_TAG(msg::AvatarUpdate, "avatar_update")
AVATAR_SYNC_TAG(msg::ScoreUpdate, "score_update")
AVATAR_SYNC_TAG(msg::MissionComplete, "mission_complete")
AVATAR_SYNC_TAG(msg::MinigameUpdate, "minigame_update")
AVATAR_SYNC_TAG(msg::Notification, "notification")
AVATAR_SYNC_TAG(msg::ErrorReply, "error_reply")
AVATAR_SYNC_TAG(msg::ModeChanged, "mode_changed")
#undef AVATAR_SYNC_TAG

bool is_palette_style_color(const std::string& s) {
    if (s.size() != 7 || s[0] != '#') return false;
    for (std::size_t i = 1; i < s.size(); ++i) {
        char c = s[i];
        if (!((c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'))) return false;
    }
    return true;
}

// Typed field access over one JSON object; errors carry the dotted path.
class Reader {
public:
    Reader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) throw DecodeError(DecodeErrorKind::BadType, path_or_root(), "expected object");
    }

    const json& raw(std::string_view name) const {
        auto it = obj_.find(name);
        if (it == obj_.end()) throw DecodeError(DecodeErrorKind::MissingField, path(name), "missing");
        return *it;
    }

    bool has(std::string_view name) const { return obj_.contains(name); }

    std::string str(std::string_view name) const {
        const json& v = raw(name);
        if (!v.is_string()) bad(name, "expected string");
        return v.get<std::string>();
    }

    std::int64_t integer(std::string_view name) const {
        const json& v = raw(name);
        if (!v.is_number_integer()) bad(name, "expected integer");
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
            bad(name, "integer out of range");
        return v.get<std::int64_t>();
    }

    std::int64_t non_negative(std::string_view name) const {
        auto v = integer(name);
        if (v < 0) bad(name, "expected non-negative integer");
        return v;
    }

    double number(std::string_view name) const {
        const json& v = raw(name);
        if (!v.is_number()) bad(name, "expected number");
        double d = v.get<double>();
        if (!std::isfinite(d)) bad(name, "expected finite number");
        return d;
    }

    bool boolean(std::string_view name) const {
        const json& v = raw(name);
        if (!v.is_boolean()) bad(name, "expected boolean");
        return v.get<bool>();
    }

    std::string color(std::string_view name) const {
        auto s = str(name);
        if (!is_palette_style_color(s)) bad(name, "expected #RRGGBB uppercase color");
        return s;
    }

    Reader child(std::string_view name) const {
        const json& v = raw(name);
        if (!v.is_object()) bad(name, "expected object");
        return Reader(v, path(name));
    }

    template <typename E>
    E enumeration(std::string_view name, std::optional<E> (*parse)(std::string_view)) const {
        auto s = str(name);
        auto e = parse(s);
        if (!e) bad(name, "unknown value '" + s + "'");
        return *e;
    }

    [[noreturn]] void bad(std::string_view name, const std::string& why) const {
        throw DecodeError(DecodeErrorKind::BadType, path(name), why);
    }

    std::string path(std::string_view name) const {
        return prefix_.empty() ? std::string(name) : prefix_ + "." + std::string(name);
    }

    const json& object() const { return obj_; }

private:
    std::string path_or_root() const { return prefix_.empty() ? "$" : prefix_; }

    const json& obj_;
    std::string prefix_;
};

json gesture_to_json(const GestureInput& g) {
    return std::visit(overloaded{
                          [](const TapBurst& t) { return json{{"kind", "tap_burst"}, {"taps", t.count}}; },
                          [](const Swipe& s) {
                              return json{{"kind", "swipe"}, {"direction", to_string(s.direction)}};
                          },
                          [](const TapTimes& t) { return json{{"kind", "tap_times"}, {"times_ms", t.ms}}; },
                      },
                      g);
}

GestureInput gesture_from(const Reader& r) {
    auto kind = r.str("kind");
    if (kind == "tap_burst") {
        auto taps = r.integer("taps");
        if (taps < 1 || taps > INT32_MAX) r.bad("taps", "expected positive tap count");
        return TapBurst{static_cast<int>(taps)};
    }
    if (kind == "swipe") return Swipe{r.enumeration("direction", &parse_swipe_direction)};
    if (kind == "tap_times") {
        const json& arr = r.raw("times_ms");
        if (!arr.is_array()) r.bad("times_ms", "expected array");
        TapTimes t;
        for (const auto& v : arr) {
            if (!v.is_number_integer()) r.bad("times_ms", "expected integer timestamps");
            t.ms.push_back(v.get<std::int64_t>());
        }
        return t;
    }
    r.bad("kind", "unknown gesture kind '" + kind + "'");
}

json minigame_input_to_json(const MinigameInput& in) {
    return std::visit(overloaded{
                          [](const PlaceMarker& p) {
                              return json{{"kind", "place_marker"},
                                          {"x", p.pose.x},
                                          {"y", p.pose.y},
                                          {"rot_deg", p.pose.rot_deg}};
                          },
                          [](const FindObject& f) { return json{{"kind", "find_object"}, {"object_id", f.object_id}}; },
                          [](const UseKey&) { return json{{"kind", "use_key"}}; },
                          [](const AnswerQuestion& a) { return json{{"kind", "answer"}, {"transcript", a.transcript}}; },
                          [](const GuessWord& g) { return json{{"kind", "guess"}, {"text", g.text}}; },
                      },
                      in);
}

MinigameInput minigame_input_from(const Reader& r) {
    auto kind = r.str("kind");
    if (kind == "place_marker") return PlaceMarker{Pose{r.number("x"), r.number("y"), r.number("rot_deg")}};
    if (kind == "find_object") return FindObject{r.str("object_id")};
    if (kind == "use_key") return UseKey{};
    if (kind == "answer") return AnswerQuestion{r.str("transcript")};
    if (kind == "guess") return GuessWord{r.str("text")};
    r.bad("kind", "unknown minigame input '" + kind + "'");
}

ActionOutcome outcome_from(const Reader& r) {
    auto kind = r.str("kind");
    if (kind == "dance") return DanceOutcome{r.enumeration("dance", &parse_dance)};
    if (kind == "small_chaos") return SmallChaos{r.enumeration("dance", &parse_dance)};
    if (kind == "chaos") return Chaos{};
    r.bad("kind", "unknown outcome '" + kind + "'");
}

AvatarState avatar_from(const Reader& r) {
    AvatarState a;
    const json& anim = r.raw("animation");
    if (!anim.is_null()) {
        if (!anim.is_object()) r.bad("animation", "expected object or null");
        a.animation = outcome_from(Reader(anim, r.path("animation")));
    }
    const json& facing = r.raw("facing");
    if (!facing.is_null()) {
        if (!facing.is_string()) r.bad("facing", "expected string or null");
        a.facing = facing.get<std::string>();
    }
    return a;
}

json payload_to_json(const Message& m) {
    json j = std::visit(
        overloaded{
            [](const msg::Join& x) { return json{{"display_name", x.display_name}}; },
            [](const msg::Leave&) { return json::object(); },
            [](const msg::Gesture& x) { return json{{"gesture", gesture_to_json(x.gesture)}}; },
            [](const msg::SelectMode& x) { return json{{"mode", to_string(x.mode)}}; },
            [](const msg::StartMinigame& x) { return json{{"kind", to_string(x.kind)}}; },
            [](const msg::MinigameInputMsg& x) { return json{{"input", minigame_input_to_json(x.input)}}; },
            [](const msg::Welcome& x) {
                json players = json::array();
                for (const auto& p : x.players) players.push_back({{"player_id", p.player_id}, {"color", p.color}});
                return json{{"player_id", x.player_id},
                            {"color", x.color},
                            {"players", std::move(players)},
                            {"mode", to_string(x.mode)},
                            {"score", x.score},
                            {"mission_target", x.mission_target},
                            {"mission_complete", x.mission_complete},
                            {"avatar", avatar_to_json(x.avatar)},
                            {"minigame", x.minigame}};
            },
            [](const msg::PlayerJoined& x) { return json{{"player_id", x.player_id}, {"color", x.color}}; },
            [](const msg::PlayerLeft& x) { return json{{"player_id", x.player_id}}; },
            [](const msg::ActionBroadcast& x) {
                return json{{"actor_color", x.actor_color}, {"outcome", outcome_to_json(x.outcome)}, {"points", x.points}};
            },
            [](const msg::AvatarUpdate& x) { return json{{"avatar", avatar_to_json(x.avatar)}}; },
            [](const msg::ScoreUpdate& x) { return json{{"total", x.total}}; },
            [](const msg::MissionComplete& x) { return json{{"final_total", x.final_total}}; },
            [](const msg::MinigameUpdate& x) { return json{{"snapshot", x.snapshot}}; },
            [](const msg::Notification& x) { return json{{"actor_color", x.actor_color}, {"text", x.text}}; },
            [](const msg::ErrorReply& x) { return json{{"code", x.code}, {"text", x.text}}; },
            [](const msg::ModeChanged& x) {
                return json{{"mode", to_string(x.mode)}, {"actor_color", x.actor_color}};
            },
        },
        m);
    j["tag"] = tag_of(m);
    return j;
}

Message payload_from(const std::string& tag, const Reader& r) {
    if (tag == "join") return msg::Join{r.str("display_name")};
    if (tag == "leave") return msg::Leave{};
    if (tag == "gesture") return msg::Gesture{gesture_from(r.child("gesture"))};
    if (tag == "select_mode") return msg::SelectMode{r.enumeration("mode", &parse_game_mode)};
    if (tag == "start_minigame") return msg::StartMinigame{r.enumeration("kind", &parse_minigame_kind)};
    if (tag == "minigame_input") return msg::MinigameInputMsg{minigame_input_from(r.child("input"))};
    if (tag == "welcome") {
        msg::Welcome w;
        w.player_id = r.str("player_id");
        w.color = r.color("color");
        const json& players = r.raw("players");
        if (!players.is_array()) r.bad("players", "expected array");
        for (const auto& p : players) {
            Reader pr(p, r.path("players"));
            w.players.push_back({pr.str("player_id"), pr.color("color")});
        }
        w.mode = r.enumeration("mode", &parse_game_mode);
        w.score = r.non_negative("score");
        w.mission_target = r.integer("mission_target");
        w.mission_complete = r.boolean("mission_complete");
        w.avatar = avatar_from(r.child("avatar"));
        w.minigame = r.raw("minigame");
        if (!w.minigame.is_null() && !w.minigame.is_object()) r.bad("minigame", "expected object or null");
        return w;
    }
    if (tag == "player_joined") return msg::PlayerJoined{r.str("player_id"), r.color("color")};
    if (tag == "player_left") return msg::PlayerLeft{r.str("player_id")};
    if (tag == "action_broadcast")
        return msg::ActionBroadcast{r.color("actor_color"), outcome_from(r.child("outcome")), r.non_negative("points")};
    if (tag == "avatar_update") return msg::AvatarUpdate{avatar_from(r.child("avatar"))};
    if (tag == "score_update") return msg::ScoreUpdate{r.non_negative("total")};
    if (tag == "mission_complete") return msg::MissionComplete{r.non_negative("final_total")};
    if (tag == "minigame_update") {
        const json& snap = r.raw("snapshot");
        if (!snap.is_object()) r.bad("snapshot", "expected object");
        return msg::MinigameUpdate{snap};
    }
    if (tag == "notification") return msg::Notification{r.color("actor_color"), r.str("text")};
    if (tag == "error_reply") return msg::ErrorReply{r.str("code"), r.str("text")};
    if (tag == "mode_changed")
        return msg::ModeChanged{r.enumeration("mode", &parse_game_mode), r.color("actor_color")};
    throw DecodeError(DecodeErrorKind::UnknownTag, "tag", "unknown tag '" + tag + "'");
}

}  // namespace

std::string_view to_string(DecodeErrorKind k) {
    switch (k) {
        case DecodeErrorKind::MalformedJson: return "malformed_json";
        case DecodeErrorKind::UnknownTag: return "unknown_tag";
        case DecodeErrorKind::MissingField: return "missing_field";
        case DecodeErrorKind::BadType: return "bad_type";
    }
    return "?";
}

DecodeError::DecodeError(DecodeErrorKind kind, std::string field, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + (field.empty() ? "" : " '" + field + "'") + ": " + detail),
      kind_(kind),
      field_(std::move(field)) {}

std::string_view tag_of(const Message& m) {
    return std::visit([](const auto& x) { return TagOf<std::decay_t<decltype(x)>>::value; }, m);
}

bool is_client_message(const Message& m) { return m.index() <= 5; }

json outcome_to_json(const ActionOutcome& o) {
    return std::visit(overloaded{
                          [](const DanceOutcome& d) { return json{{"kind", "dance"}, {"dance", to_string(d.dance)}}; },
                          [](const SmallChaos& s) {
                              return json{{"kind", "small_chaos"}, {"dance", to_string(s.chosen)}};
                          },
                          [](const Chaos&) { return json{{"kind", "chaos"}}; },
                      },
                      o);
}

json avatar_to_json(const AvatarState& a) {
    return json{{"animation", a.animation ? outcome_to_json(*a.animation) : json(nullptr)},
                {"facing", a.facing ? json(*a.facing) : json(nullptr)}};
}

json envelope_to_json(const Envelope& e) {
    json j = payload_to_json(e.payload);
    j["v"] = kProtocolVersion;
    j["seq"] = e.seq;
    j["room_id"] = e.room_id;
    j["sender"] = e.sender;
    j["sent_at"] = e.sent_at;
    return j;
}

Envelope envelope_from_json(const json& j) {
    if (!j.is_object()) throw DecodeError(DecodeErrorKind::BadType, "$", "expected JSON object");
    Reader r(j, "");
    auto tag = r.str("tag");
    Message payload = payload_from(tag, r);
    if (r.has("v") && (!j["v"].is_number_integer() || j["v"].get<std::int64_t>() != kProtocolVersion))
        r.bad("v", "unsupported protocol version");
    Envelope e{r.non_negative("seq"), r.str("room_id"), r.str("sender"), r.integer("sent_at"), std::move(payload)};
    return e;
}

std::string encode_message(const Envelope& envelope) {
    std::string out = envelope_to_json(envelope).dump();
    out.push_back('\n');
    return out;
}

Envelope decode_message(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    json j = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw DecodeError(DecodeErrorKind::MalformedJson, "", "not a complete JSON value");
    return envelope_from_json(j);
}

}  // namespace avatar_sync
