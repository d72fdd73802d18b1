"""Python bindings for the avatar-sync core."""

import json

from . import _core
from ._core import (
    PALETTE,
    PROTOCOL_VERSION,
    ROOM_CAPACITY,
    ConfigParseError,
    ConfigValidationError,
    DecodeError,
    GameError,
    ReplayError,
    ScenarioError,
    chaos_decision,
    classify_gesture,
    normalize_answer,
    score_action,
)

__all__ = [
    "PALETTE",
    "PROTOCOL_VERSION",
    "ROOM_CAPACITY",
    "ConfigParseError",
    "ConfigValidationError",
    "DecodeError",
    "GameError",
    "ReplayError",
    "Room",
    "ScenarioError",
    "chaos_decision",
    "classify_gesture",
    "decode_message",
    "encode_message",
    "load_config",
    "normalize_answer",
    "replay_log",
    "run_scenario",
    "score_action",
    "validate_config",
]


def encode_message(envelope: dict) -> str:
    return _core.encode_message(json.dumps(envelope))


def decode_message(line: str) -> dict:
    try:
        return json.loads(_core.decode_message(line))
    except DecodeError as err:
        details = _core.decode_error_details(line)
        if details is not None:
            err.kind, err.field = details
        raise


def load_config(config) -> dict:
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_core.load_config(text))


def validate_config(config) -> list:
    text = config if isinstance(config, str) else json.dumps(config)
    return [
        {"severity": severity, "field": field, "reason": reason}
        for severity, field, reason in _core.validate_config(text)
    ]


class Room:
    def __init__(self, room_id: str, config=None, seed: int = 0):
        text = None if config is None else (config if isinstance(config, str) else json.dumps(config))
        self._room = _core.Room(room_id, text, seed)

    def apply(self, envelope: dict) -> list:
        return [json.loads(line) for line in self._room.apply(json.dumps(envelope))]

    def snapshot(self) -> dict:
        return json.loads(self._room.snapshot())


def run_scenario(path, seed=0, transport=None, jitter_ms=None, log_dir=None) -> dict:
    return json.loads(
        _core.run_scenario(str(path), seed, transport, jitter_ms, None if log_dir is None else str(log_dir))
    )


def replay_log(log, config=None, seed=0) -> dict:
    text = None if config is None else (config if isinstance(config, str) else json.dumps(config))
    return json.loads(_core.replay_log(str(log), text, seed))
