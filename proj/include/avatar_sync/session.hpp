#pragma once

// The room reducer: (RoomState, incoming envelope) -> (RoomState, outgoing
// envelopes). Pure and deterministic; the server is a thin shell around it.
//
// Outgoing envelopes with seq > 0 are room broadcasts and form the gap-free
// sequence 1, 2, 3, ... . Envelopes with seq == 0 are replies addressed only
// to the sender of the incoming envelope (Welcome, ErrorReply) and do not
// consume a sequence number.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "avatar_sync/errors.hpp"
#include "avatar_sync/minigames.hpp"
#include "avatar_sync/narrative.hpp"
#include "avatar_sync/protocol.hpp"
#include "avatar_sync/rng.hpp"
#include "avatar_sync/types.hpp"

namespace avatar_sync {

inline constexpr std::array<std::string_view, 8> kPalette{
    "#E6194B", "#3CB44B", "#FFE119", "#4363D8", "#F58231", "#911EB4", "#42D4F4", "#F032E6"};
inline constexpr std::size_t kRoomCapacity = kPalette.size();

using RoomRng = SeededRng;

struct Player {
    PlayerId id;
    std::string color;
    std::string display_name;
    std::int64_t joined_at_seq = 0;
    bool operator==(const Player&) const = default;
};

struct RoomState {
    std::string room_id;
    std::shared_ptr<const NarrativeConfig> config;
    std::vector<Player> players;  // join order
    GameMode mode = GameMode::Toques;
    AvatarState avatar;
    std::int64_t score = 0;
    std::int64_t mission_target = kDefaultMissionTarget;
    bool mission_complete = false;
    std::map<PlayerId, std::int64_t> tap_gestures;  // tap bursts issued so far, per player
    std::optional<MinigameState> minigame;
    RoomRng rng;
    std::int64_t next_seq = 1;
    std::int64_t admitted = 0;  // players ever admitted; drives id assignment

    const Player* find_player(std::string_view id) const;

    bool operator==(const RoomState& o) const;
};

/// Outgoing envelopes of one reducer step.
struct Step {
    RoomState state;
    std::vector<Envelope> out;
};

RoomState create_room(std::string room_id, std::shared_ptr<const NarrativeConfig> config, std::uint64_t seed);

/// Admits `player_id` with the first palette color nobody in the room holds.
/// Throws DuplicatePlayer or RoomFull.
Step join_room(const RoomState& state, const PlayerId& player_id, std::string display_name = {},
               std::int64_t now_ms = 0);

/// The final maximal burst of taps whose consecutive gaps are all within
/// the window. Throws EmptyInput, or InvalidGesture for unsorted input.
TapBurst classify_gesture(std::span<const std::int64_t> tap_timestamps, std::int64_t burst_window_ms);

enum class ChaosKind { SmallChaos, Chaos };

/// Chaos iff individual_tap_gestures / num_users < threshold. Throws ZeroUsers.
ChaosKind chaos_decision(std::int64_t individual_tap_gestures, std::int64_t num_users, const Ratio& threshold);

/// Maps the gesture to an outcome, updates the actor's tap count and points
/// the avatar at the actor. Throws UnknownPlayer.
std::pair<RoomState, ActionOutcome> resolve_short_action(const RoomState& state, const PlayerId& actor,
                                                         const GestureEvent& gesture);

int score_action(GameMode mode, const ActionOutcome& outcome);

/// Throws WrongMode or MinigameAlreadyActive.
RoomState start_minigame(const RoomState& state, MinigameKind kind);

/// Never throws for rule violations: they come back as ErrorReply envelopes
/// (seq 0) and leave the state untouched.
Step apply_event(const RoomState& state, const Envelope& incoming);

/// Canonical JSON of the full room state, byte-comparable across runs.
nlohmann::json room_snapshot(const RoomState& state);

}  // namespace avatar_sync
