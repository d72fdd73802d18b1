#pragma once

// Wire schema shared by the server, the simulation bots and the browser
// client. One envelope per line, canonical JSON (sorted keys), LF-terminated.
// The envelope is flat: {"v":1,"seq":..,"room_id":..,"sender":..,"sent_at":..,"tag":..,<payload fields>}.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "avatar_sync/types.hpp"

namespace avatar_sync {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::string_view kServerSender = "server";

struct PlaceMarker {
    Pose pose;
    bool operator==(const PlaceMarker&) const = default;
};
struct FindObject {
    std::string object_id;
    bool operator==(const FindObject&) const = default;
};
struct UseKey {
    bool operator==(const UseKey&) const = default;
};
struct AnswerQuestion {
    std::string transcript;
    bool operator==(const AnswerQuestion&) const = default;
};
struct GuessWord {
    std::string text;  // one letter or a full word
    bool operator==(const GuessWord&) const = default;
};

using MinigameInput = std::variant<PlaceMarker, FindObject, UseKey, AnswerQuestion, GuessWord>;

struct PlayerInfo {
    PlayerId player_id;
    std::string color;
    bool operator==(const PlayerInfo&) const = default;
};

namespace msg {

// client -> server
struct Join {
    std::string display_name;
    bool operator==(const Join&) const = default;
};
struct Leave {
    bool operator==(const Leave&) const = default;
};
struct Gesture {
    GestureInput gesture;
    bool operator==(const Gesture&) const = default;
};
struct SelectMode {
    GameMode mode = GameMode::Toques;
    bool operator==(const SelectMode&) const = default;
};
struct StartMinigame {
    MinigameKind kind = MinigameKind::HiddenObjects;
    bool operator==(const StartMinigame&) const = default;
};
struct MinigameInputMsg {
    MinigameInput input;
    bool operator==(const MinigameInputMsg&) const = default;
};

// server -> client
struct Welcome {
    PlayerId player_id;
    std::string color;
    // Room snapshot for late joiners.
    std::vector<PlayerInfo> players;
    GameMode mode = GameMode::Toques;
    std::int64_t score = 0;
    std::int64_t mission_target = 0;
    bool mission_complete = false;
    AvatarState avatar;
    nlohmann::json minigame;  // null when none is active
    bool operator==(const Welcome&) const = default;
};
struct PlayerJoined {
    PlayerId player_id;
    std::string color;
    bool operator==(const PlayerJoined&) const = default;
};
struct PlayerLeft {
    PlayerId player_id;
    bool operator==(const PlayerLeft&) const = default;
};
struct ActionBroadcast {
    std::string actor_color;
    ActionOutcome outcome;
    std::int64_t points = 0;
    bool operator==(const ActionBroadcast&) const = default;
};
struct AvatarUpdate {
    AvatarState avatar;
    bool operator==(const AvatarUpdate&) const = default;
};
struct ScoreUpdate {
    std::int64_t total = 0;
    bool operator==(const ScoreUpdate&) const = default;
};
struct MissionComplete {
    std::int64_t final_total = 0;
    bool operator==(const MissionComplete&) const = default;
};
struct MinigameUpdate {
    nlohmann::json snapshot;
    bool operator==(const MinigameUpdate&) const = default;
};
struct Notification {
    std::string actor_color;
    std::string text;
    bool operator==(const Notification&) const = default;
};
struct ErrorReply {
    std::string code;
    std::string text;
    bool operator==(const ErrorReply&) const = default;
};
struct ModeChanged {
    GameMode mode = GameMode::Toques;
    std::string actor_color;
    bool operator==(const ModeChanged&) const = default;
};

}  // namespace msg

using Message = std::variant<msg::Join, msg::Leave, msg::Gesture, msg::SelectMode, msg::StartMinigame,
                             msg::MinigameInputMsg, msg::Welcome, msg::PlayerJoined, msg::PlayerLeft,
                             msg::ActionBroadcast, msg::AvatarUpdate, msg::ScoreUpdate,
                             msg::MissionComplete, msg::MinigameUpdate, msg::Notification,
                             msg::ErrorReply, msg::ModeChanged>;

std::string_view tag_of(const Message& m);
bool is_client_message(const Message& m);

struct Envelope {
    std::int64_t seq = 0;  // server-assigned; 0 for client->server and unicast replies
    std::string room_id;
    std::string sender;
    std::int64_t sent_at = 0;  // ms since epoch
    Message payload;
    bool operator==(const Envelope&) const = default;
};

enum class DecodeErrorKind { MalformedJson, UnknownTag, MissingField, BadType };

std::string_view to_string(DecodeErrorKind k);

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrorKind kind, std::string field, const std::string& detail);

    DecodeErrorKind kind() const noexcept { return kind_; }
    /// Offending field name; empty for MalformedJson.
    const std::string& field() const noexcept { return field_; }

private:
    DecodeErrorKind kind_;
    std::string field_;
};

/// Canonical single-line encoding, newline-terminated.
std::string encode_message(const Envelope& envelope);

/// Decodes one frame. A trailing LF (and CR) is tolerated. Unknown extra
/// fields are ignored, unknown tags are rejected.
Envelope decode_message(std::string_view line);

// JSON fragments reused by the session snapshot and the minigame views.
nlohmann::json outcome_to_json(const ActionOutcome& o);
nlohmann::json avatar_to_json(const AvatarState& a);
nlohmann::json envelope_to_json(const Envelope& e);
Envelope envelope_from_json(const nlohmann::json& j);

}  // namespace avatar_sync
