#include "avatar_sync/types.hpp"

#include <cmath>
#include <stdexcept>

#include "avatar_sync/errors.hpp"

namespace avatar_sync {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::pair<E, std::string_view> (&table)[N]) {
    for (const auto& [value, name] : table)
        if (name == s) return value;
    return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::pair<E, std::string_view> (&table)[N]) {
    for (const auto& [value, name] : table)
        if (value == v) return name;
    return "?";
}

constexpr std::pair<Dance, std::string_view> kDanceNames[] = {
    {Dance::Macarena, "macarena"}, {Dance::Samba, "samba"}, {Dance::MoveIt, "move_it"}, {Dance::Twist, "twist"}};

constexpr std::pair<SwipeDirection, std::string_view> kSwipeNames[] = {
    {SwipeDirection::Up, "up"}, {SwipeDirection::Down, "down"},
    {SwipeDirection::Left, "left"}, {SwipeDirection::Right, "right"}};

constexpr std::pair<GameMode, std::string_view> kModeNames[] = {
    {GameMode::Toques, "toques"},
    {GameMode::HistoriaAvatar, "historia_avatar"},
    {GameMode::HistoriaSurpresa, "historia_surpresa"}};

constexpr std::pair<MinigameKind, std::string_view> kKindNames[] = {
    {MinigameKind::HiddenObjects, "hidden_objects"}, {MinigameKind::Quiz, "quiz"}, {MinigameKind::Word, "word"}};

constexpr std::pair<ErrorCode, std::string_view> kErrorNames[] = {
    {ErrorCode::DuplicatePlayer, "duplicate_player"},
    {ErrorCode::RoomFull, "room_full"},
    {ErrorCode::UnknownPlayer, "unknown_player"},
    {ErrorCode::NotJoined, "not_joined"},
    {ErrorCode::AlreadyJoined, "already_joined"},
    {ErrorCode::ZeroUsers, "zero_users"},
    {ErrorCode::EmptyInput, "empty_input"},
    {ErrorCode::InvalidGesture, "invalid_gesture"},
    {ErrorCode::WrongMode, "wrong_mode"},
    {ErrorCode::MinigameAlreadyActive, "minigame_already_active"},
    {ErrorCode::NoActiveMinigame, "no_active_minigame"},
    {ErrorCode::WrongMinigame, "wrong_minigame"},
    {ErrorCode::WrongPhase, "wrong_phase"},
    {ErrorCode::UnknownObject, "unknown_object"},
    {ErrorCode::QuizFinished, "quiz_finished"},
    {ErrorCode::GameOver, "game_over"},
    {ErrorCode::RepeatedLetter, "repeated_letter"},
    {ErrorCode::InvalidGuess, "invalid_guess"},
    {ErrorCode::NotFinished, "not_finished"},
    {ErrorCode::BadMessage, "bad_message"},
    {ErrorCode::RoomClosed, "room_closed"},
};

}  // namespace

std::string_view to_string(Dance d) { return name_of(d, kDanceNames); }
std::string_view to_string(SwipeDirection d) { return name_of(d, kSwipeNames); }
std::string_view to_string(GameMode m) { return name_of(m, kModeNames); }
std::string_view to_string(MinigameKind k) { return name_of(k, kKindNames); }
std::string_view to_string(ErrorCode c) { return name_of(c, kErrorNames); }

std::optional<Dance> parse_dance(std::string_view s) { return lookup(s, kDanceNames); }
std::optional<SwipeDirection> parse_swipe_direction(std::string_view s) { return lookup(s, kSwipeNames); }
std::optional<GameMode> parse_game_mode(std::string_view s) { return lookup(s, kModeNames); }
std::optional<MinigameKind> parse_minigame_kind(std::string_view s) { return lookup(s, kKindNames); }

Ratio Ratio::from_double(double v) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("ratio must be finite and non-negative");
    if (v == 0.0) return Ratio{0, 1};
    int exp = 0;
    double mant = std::frexp(v, &exp);  // v = mant * 2^exp, mant in [0.5, 1)
    auto num = static_cast<std::int64_t>(std::ldexp(mant, 53));
    exp -= 53;
    while (exp < 0 && (num & 1) == 0) {
        num >>= 1;
        ++exp;
    }
    if (exp >= 0) {
        if (exp > 62 || num > (INT64_MAX >> exp)) throw std::invalid_argument("ratio out of range");
        return Ratio{num << exp, 1};
    }
    if (exp < -62) throw std::invalid_argument("ratio out of range");
    return Ratio{num, std::int64_t{1} << -exp};
}

bool Ratio::exceeds(std::int64_t a, std::int64_t b) const {
    // a/b < num/den  <=>  a*den < num*b   (b, den > 0)
    return static_cast<__int128>(a) * den < static_cast<__int128>(num) * b;
}

}  // namespace avatar_sync
