#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace avatar_sync {

enum class ErrorCode {
    DuplicatePlayer,
    RoomFull,
    UnknownPlayer,
    NotJoined,
    AlreadyJoined,
    ZeroUsers,
    EmptyInput,
    InvalidGesture,
    WrongMode,
    MinigameAlreadyActive,
    NoActiveMinigame,
    WrongMinigame,
    WrongPhase,
    UnknownObject,
    QuizFinished,
    GameOver,
    RepeatedLetter,
    InvalidGuess,
    NotFinished,
    BadMessage,
    RoomClosed,
};

std::string_view to_string(ErrorCode code);

/// Typed rule violation raised by the session and minigame state machines.
/// The room reducer turns these into ErrorReply envelopes.
class GameError : public std::runtime_error {
public:
    GameError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    explicit GameError(ErrorCode code) : GameError(code, std::string(to_string(code))) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace avatar_sync
