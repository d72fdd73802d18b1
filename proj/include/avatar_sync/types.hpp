#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace avatar_sync {

using PlayerId = std::string;

enum class Dance { Macarena, Samba, MoveIt, Twist };
inline constexpr Dance kAllDances[] = {Dance::Macarena, Dance::Samba, Dance::MoveIt, Dance::Twist};

enum class SwipeDirection { Up, Down, Left, Right };
inline constexpr SwipeDirection kAllSwipeDirections[] = {SwipeDirection::Up, SwipeDirection::Down,
                                                         SwipeDirection::Left, SwipeDirection::Right};

enum class GameMode { Toques, HistoriaAvatar, HistoriaSurpresa };

enum class MinigameKind { HiddenObjects, Quiz, Word };

// Wire names. The parse_* functions return nullopt for unknown names.
std::string_view to_string(Dance d);
std::string_view to_string(SwipeDirection d);
std::string_view to_string(GameMode m);
std::string_view to_string(MinigameKind k);
std::optional<Dance> parse_dance(std::string_view s);
std::optional<SwipeDirection> parse_swipe_direction(std::string_view s);
std::optional<GameMode> parse_game_mode(std::string_view s);
std::optional<MinigameKind> parse_minigame_kind(std::string_view s);

inline bool awards_points(GameMode m) { return m != GameMode::Toques; }

struct TapBurst {
    int count = 1;
    bool operator==(const TapBurst&) const = default;
};

struct Swipe {
    SwipeDirection direction = SwipeDirection::Up;
    bool operator==(const Swipe&) const = default;
};

using GestureEvent = std::variant<TapBurst, Swipe>;

// Raw tap timestamps, classified into a burst by the server.
struct TapTimes {
    std::vector<std::int64_t> ms;
    bool operator==(const TapTimes&) const = default;
};

using GestureInput = std::variant<TapBurst, Swipe, TapTimes>;

struct DanceOutcome {
    Dance dance = Dance::Macarena;
    bool operator==(const DanceOutcome&) const = default;
};

struct SmallChaos {
    Dance chosen = Dance::Macarena;
    bool operator==(const SmallChaos&) const = default;
};

struct Chaos {
    bool operator==(const Chaos&) const = default;
};

using ActionOutcome = std::variant<DanceOutcome, SmallChaos, Chaos>;

struct AvatarState {
    std::optional<ActionOutcome> animation;  // nullopt = idle
    std::optional<PlayerId> facing;
    bool operator==(const AvatarState&) const = default;
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double rot_deg = 0.0;
    bool operator==(const Pose&) const = default;
};

/// Exact non-negative rational, used for the chaos threshold so that the
/// taps/users comparison never goes through floating point.
struct Ratio {
    std::int64_t num = 1;
    std::int64_t den = 1;

    /// Exact conversion of a finite non-negative double (every double is a
    /// dyadic rational). Throws std::invalid_argument otherwise.
    static Ratio from_double(double v);
    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    /// a/b < *this, with b > 0.
    bool exceeds(std::int64_t a, std::int64_t b) const;

    bool operator==(const Ratio&) const = default;
};

}  // namespace avatar_sync
