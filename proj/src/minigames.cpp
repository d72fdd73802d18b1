#include "avatar_sync/minigames.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace avatar_sync {

using nlohmann::json;

std::string_view to_string(HuntPhase p) {
    switch (p) {
        case HuntPhase::MarkerPlacement: return "marker_placement";
        case HuntPhase::ObjectHunt: return "object_hunt";
        case HuntPhase::KeyFound: return "key_found";
        case HuntPhase::ChestOpen: return "chest_open";
    }
    return "?";
}

std::string_view to_string(WordStatus s) {
    switch (s) {
        case WordStatus::InProgress: return "in_progress";
        case WordStatus::Won: return "won";
        case WordStatus::Lost: return "lost";
    }
    return "?";
}

MinigameKind kind_of(const MinigameState& s) {
    switch (s.index()) {
        case 0: return MinigameKind::HiddenObjects;
        case 1: return MinigameKind::Quiz;
        default: return MinigameKind::Word;
    }
}

HiddenObjectsState start_hidden_objects(const HiddenObjectsLayout& layout) {
    HiddenObjectsState hs;
    hs.target_pose = layout.target_pose;
    hs.tolerance = layout.tolerance;
    for (const auto& o : layout.objects) hs.layout.push_back(o.id);
    return hs;
}

QuizState start_quiz(const std::vector<QuizQuestion>& questions) {
    QuizState qs;
    qs.questions = questions;
    qs.finished = questions.empty();
    return qs;
}

WordGameState start_word_game(std::string secret) {
    if (secret.empty()) throw GameError(ErrorCode::InvalidGuess, "secret word must not be empty");
    WordGameState ws;
    ws.revealed.assign(secret.size(), false);
    ws.secret = std::move(secret);
    return ws;
}

// ---------------------------------------------------------------- hidden objects

bool marker_within_tolerance(const Pose& pose, const Pose& target, const MarkerTolerance& tol) {
    double dist = std::hypot(pose.x - target.x, pose.y - target.y);
    double diff = std::fmod(std::fabs(pose.rot_deg - target.rot_deg), 360.0);
    if (diff > 180.0) diff = 360.0 - diff;
    return dist <= tol.distance && diff <= tol.degrees;
}

MarkerResult place_marker(const HiddenObjectsState& hs, const Pose& pose) {
    if (hs.phase != HuntPhase::MarkerPlacement)
        throw GameError(ErrorCode::WrongPhase, "the marker is already in place");
    MarkerResult r{hs, false};
    if (marker_within_tolerance(pose, hs.target_pose, hs.tolerance)) {
        r.state.marker_pose = pose;
        r.state.phase = HuntPhase::ObjectHunt;
        r.accepted = true;
    }
    return r;
}

FindResult find_object(const HiddenObjectsState& hs, const std::string& object_id) {
    if (hs.phase != HuntPhase::ObjectHunt)
        throw GameError(ErrorCode::WrongPhase, "objects can only be found during the hunt");
    if (std::find(hs.layout.begin(), hs.layout.end(), object_id) == hs.layout.end())
        throw GameError(ErrorCode::UnknownObject, "no hidden object '" + object_id + "'");
    FindResult r{hs, false};
    r.newly_found = r.state.objects_found.insert(object_id).second;
    if (r.state.objects_found.size() == r.state.layout.size()) r.state.phase = HuntPhase::KeyFound;
    return r;
}

HiddenObjectsState use_key(const HiddenObjectsState& hs) {
    if (hs.phase != HuntPhase::KeyFound) throw GameError(ErrorCode::WrongPhase, "the key has not been found yet");
    HiddenObjectsState next = hs;
    next.phase = HuntPhase::ChestOpen;
    return next;
}

// ---------------------------------------------------------------- quiz

AnswerResult answer_question(const QuizState& qs, std::string_view transcript) {
    if (qs.finished) throw GameError(ErrorCode::QuizFinished, "all questions have been answered");
    AnswerResult r{qs, false};
    auto given = normalize_answer(transcript);
    for (const auto& accepted : qs.questions[qs.question_index].accepted_answers) {
        if (normalize_answer(accepted) == given) {
            r.correct = true;
            break;
        }
    }
    if (r.correct) ++r.state.correct_count;
    ++r.state.question_index;
    r.state.finished = r.state.question_index == r.state.questions.size();
    return r;
}

// ---------------------------------------------------------------- word game

WordGameState guess(const WordGameState& ws, std::string_view input) {
    if (ws.status != WordStatus::InProgress) throw GameError(ErrorCode::GameOver, "the word game is over");

    std::string text;
    for (char c : input) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (!std::isalpha(static_cast<unsigned char>(c)))
            throw GameError(ErrorCode::InvalidGuess, "guesses are letters a-z");
        text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (text.empty()) throw GameError(ErrorCode::InvalidGuess, "empty guess");

    WordGameState next = ws;
    if (text.size() == 1) {
        char letter = text[0];
        if (ws.guessed_letters.count(letter)) throw GameError(ErrorCode::RepeatedLetter, "letter already tried");
        next.guessed_letters.insert(letter);
        bool hit = false;
        for (std::size_t i = 0; i < next.secret.size(); ++i) {
            if (next.secret[i] == letter) {
                next.revealed[i] = true;
                hit = true;
            }
        }
        if (!hit) ++next.wrong_attempts;
    } else if (text == next.secret) {
        next.revealed.assign(next.secret.size(), true);
    } else {
        ++next.wrong_attempts;
    }

    if (std::all_of(next.revealed.begin(), next.revealed.end(), [](bool b) { return b; }))
        next.status = WordStatus::Won;
    else if (next.wrong_attempts >= kMaxWrongAttempts)
        next.status = WordStatus::Lost;
    return next;
}

// ---------------------------------------------------------------- shared

bool is_finished(const MinigameState& s) {
    if (const auto* hs = std::get_if<HiddenObjectsState>(&s)) return hs->phase == HuntPhase::ChestOpen;
    if (const auto* qs = std::get_if<QuizState>(&s)) return qs->finished;
    return std::get<WordGameState>(s).status != WordStatus::InProgress;
}

int minigame_points(const MinigameState& s) {
    if (!is_finished(s)) throw GameError(ErrorCode::NotFinished, "minigame still in progress");
    if (const auto* hs = std::get_if<HiddenObjectsState>(&s)) {
        int pts = 0;
        if (hs->phase >= HuntPhase::ObjectHunt) pts += 1;
        if (hs->phase >= HuntPhase::KeyFound) pts += 2;
        if (hs->phase == HuntPhase::ChestOpen) pts += 1;
        return pts;
    }
    if (const auto* qs = std::get_if<QuizState>(&s))
        return static_cast<int>(std::min<std::size_t>(kMaxMinigamePoints, qs->correct_count));
    const auto& ws = std::get<WordGameState>(s);
    if (ws.status == WordStatus::Lost) return 0;
    return ws.wrong_attempts <= 3 ? 4 : 3;
}

json minigame_snapshot(const MinigameState& s) {
    json j;
    j["kind"] = to_string(kind_of(s));
    j["finished"] = is_finished(s);
    if (const auto* hs = std::get_if<HiddenObjectsState>(&s)) {
        j["phase"] = to_string(hs->phase);
        j["objects_total"] = hs->layout.size();
        j["objects_found"] = json(std::vector<std::string>(hs->objects_found.begin(), hs->objects_found.end()));
        j["marker_pose"] = hs->marker_pose
                               ? json{{"x", hs->marker_pose->x}, {"y", hs->marker_pose->y}, {"rot_deg", hs->marker_pose->rot_deg}}
                               : json(nullptr);
    } else if (const auto* qs = std::get_if<QuizState>(&s)) {
        j["question_index"] = qs->question_index;
        j["question_count"] = qs->questions.size();
        j["correct_count"] = qs->correct_count;
        j["question"] = qs->finished ? json(nullptr) : json(qs->questions[qs->question_index].question);
    } else {
        const auto& ws = std::get<WordGameState>(s);
        std::string pattern;
        for (std::size_t i = 0; i < ws.secret.size(); ++i) pattern.push_back(ws.revealed[i] ? ws.secret[i] : '_');
        j["pattern"] = pattern;
        j["length"] = ws.secret.size();
        j["wrong_attempts"] = ws.wrong_attempts;
        j["max_attempts"] = kMaxWrongAttempts;
        j["guessed_letters"] = std::string(ws.guessed_letters.begin(), ws.guessed_letters.end());
        j["status"] = to_string(ws.status);
        j["secret"] = ws.status == WordStatus::InProgress ? json(nullptr) : json(ws.secret);
    }
    if (is_finished(s)) j["points"] = minigame_points(s);
    return j;
}

}  // namespace avatar_sync
