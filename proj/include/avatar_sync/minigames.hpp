#pragma once

// The three long actions. Each is a small value-typed state machine; every
// rule violation is reported as a GameError, never as a crash.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "avatar_sync/errors.hpp"
#include "avatar_sync/narrative.hpp"
#include "avatar_sync/types.hpp"

namespace avatar_sync {

inline constexpr int kMaxMinigamePoints = 4;
inline constexpr int kMaxWrongAttempts = 7;

// Hidden objects: place the marker, then find every object (any order), then
// use the key on the chest.
enum class HuntPhase { MarkerPlacement, ObjectHunt, KeyFound, ChestOpen };

std::string_view to_string(HuntPhase p);

struct HiddenObjectsState {
    HuntPhase phase = HuntPhase::MarkerPlacement;
    std::optional<Pose> marker_pose;
    Pose target_pose;
    MarkerTolerance tolerance;
    std::vector<std::string> layout;  // object ids, config order
    std::set<std::string> objects_found;
    bool operator==(const HiddenObjectsState&) const = default;
};

struct QuizState {
    std::vector<QuizQuestion> questions;
    std::size_t question_index = 0;
    std::size_t correct_count = 0;
    bool finished = false;
    bool operator==(const QuizState&) const = default;
};

enum class WordStatus { InProgress, Won, Lost };

std::string_view to_string(WordStatus s);

struct WordGameState {
    std::string secret;
    std::vector<bool> revealed;
    int wrong_attempts = 0;
    std::set<char> guessed_letters;
    WordStatus status = WordStatus::InProgress;
    bool operator==(const WordGameState&) const = default;
};

using MinigameState = std::variant<HiddenObjectsState, QuizState, WordGameState>;

MinigameKind kind_of(const MinigameState& s);

HiddenObjectsState start_hidden_objects(const HiddenObjectsLayout& layout);
QuizState start_quiz(const std::vector<QuizQuestion>& questions);
WordGameState start_word_game(std::string secret);

/// Closed-interval check; distance and angle are tested separately, the
/// angle on the circle (350 deg vs 5 deg differ by 15 deg).
bool marker_within_tolerance(const Pose& pose, const Pose& target, const MarkerTolerance& tol);

struct MarkerResult {
    HiddenObjectsState state;
    bool accepted = false;
};
MarkerResult place_marker(const HiddenObjectsState& hs, const Pose& pose);

struct FindResult {
    HiddenObjectsState state;
    bool newly_found = false;  // false: already found, state unchanged
};
FindResult find_object(const HiddenObjectsState& hs, const std::string& object_id);

HiddenObjectsState use_key(const HiddenObjectsState& hs);

struct AnswerResult {
    QuizState state;
    bool correct = false;
};
AnswerResult answer_question(const QuizState& qs, std::string_view transcript);

/// A single letter reveals or costs an attempt; anything longer is a full-word
/// guess. Throws GameOver, RepeatedLetter (state unchanged) or InvalidGuess.
WordGameState guess(const WordGameState& ws, std::string_view input);

bool is_finished(const MinigameState& s);

/// 0..4. Throws NotFinished for a game still in progress.
int minigame_points(const MinigameState& s);

/// Client-facing view. Never reveals quiz answers, or the secret word before
/// the game ends.
nlohmann::json minigame_snapshot(const MinigameState& s);

}  // namespace avatar_sync
