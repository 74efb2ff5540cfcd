"""Python bindings for the loconav navigation core.

Scenarios and configs are plain dicts here; they are handed to the native
module as JSON.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import _loconav
from ._loconav import ConfigError, NoPathError, PreconditionError

__all__ = [
    "ConfigError",
    "NoPathError",
    "PreconditionError",
    "load_scenario",
    "synthetic_box_room",
    "load_config",
    "run_episode",
    "evaluate",
    "map_eval",
    "to_episode",
    "from_episode",
    "plan",
    "restore_depth",
    "encode_frame",
    "decode_frame",
    "websocket_accept_key",
]


def load_scenario(path: str) -> dict:
    return json.loads(_loconav.scenario_json(str(path)))


def synthetic_box_room() -> dict:
    return json.loads(_loconav.synthetic_box_room())


def load_config(
    profile: str = "",
    scenario: Optional[dict] = None,
    overrides: Optional[Mapping[str, object]] = None,
    noise: Optional[bool] = None,
) -> dict:
    """Flat resolved config. Override values may be strings or plain Python values."""
    given = {}
    for key, value in (overrides or {}).items():
        given[key] = value if isinstance(value, str) else json.dumps(value)
    text = json.dumps(scenario) if scenario is not None else ""
    return json.loads(_loconav.resolve_config(profile, text, given, noise))


def _config_for(scenario: dict, config: Optional[dict], noise: Optional[bool]) -> str:
    if config is None:
        config = load_config("", scenario, None, noise)
    return json.dumps(config)


def run_episode(
    scenario: dict,
    episode: str,
    seed: Optional[int] = None,
    trial: int = 0,
    config: Optional[dict] = None,
    noise: Optional[bool] = None,
) -> dict:
    seed = scenario.get("seed", 0) if seed is None else seed
    return json.loads(
        _loconav.run_episode(json.dumps(scenario), episode, seed, trial, _config_for(scenario, config, noise))
    )


def evaluate(
    scenario: dict,
    trials: int = 10,
    paths: Iterable[str] = (),
    seed: Optional[int] = None,
    config: Optional[dict] = None,
    noise: Optional[bool] = None,
) -> dict:
    """Returns {"rows": [...], "text": ..., "csv": ...}; the last row is "Overall"."""
    seed = scenario.get("seed", 0) if seed is None else seed
    rows, text, csv = _loconav.evaluate(
        json.dumps(scenario), _config_for(scenario, config, noise), list(paths), trials, seed
    )
    return {"rows": json.loads(rows), "text": text, "csv": csv}


def map_eval(scenario: Optional[dict] = None, episode: Optional[str] = None, turns: int = 24,
             config: Optional[dict] = None):
    """Noise-free in-place scan. Returns (fidelity dict, float32 array [2, side, side])."""
    scenario = synthetic_box_room() if scenario is None else scenario
    episode = scenario["episodes"][0]["id"] if episode is None else episode
    report, grid = _loconav.map_eval(json.dumps(scenario), episode, _config_for(scenario, config, False), turns)
    return json.loads(report), grid


def to_episode(chi0: Sequence[float], chi: Sequence[float]) -> tuple:
    return _loconav.to_episode(tuple(chi0), tuple(chi))


def from_episode(chi0: Sequence[float], pose: Sequence[float]) -> tuple:
    return _loconav.from_episode(tuple(chi0), tuple(pose))


def plan(blocked, start: Sequence[int], goal: Sequence[int]):
    """A* on a boolean array indexed [y, x]; cells are (x, y). Returns (cells, length in cells)."""
    return _loconav.plan(np.asarray(blocked, dtype=bool), tuple(start), tuple(goal))


def restore_depth(depth, depth_min: float = 0.0, depth_max: float = 5.0) -> np.ndarray:
    """Hole filling then 3x3 median; NaN marks invalid pixels."""
    return _loconav.restore_depth(np.asarray(depth, dtype=np.float32), depth_min, depth_max)


def encode_frame(envelope: dict, sections: Sequence[bytes] = ()) -> bytes:
    return _loconav.encode_frame(json.dumps(envelope), [bytes(s) for s in sections])


def decode_frame(frame: bytes):
    envelope, sections = _loconav.decode_frame(bytes(frame))
    return json.loads(envelope), list(sections)


websocket_accept_key = _loconav.websocket_accept_key
