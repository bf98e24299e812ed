"""Scenario files: JSON documents describing a layout, parameters, actors and a script.

Example::

    {
      "name": "fig1",
      "seed": 7,
      "layout": {"P": [0, 0], "P_A": [1, 0], "Q_0": [10, -4], "Q_1": [10, 4]},
      "params": {"n": 128, "gamma": 0.1},
      "channel": {"p_loss": 0.0, "p_err": 0.0},
      "users": {"alice": {"pool_bits": 1, "setup_at": "P"}},
      "script": [
        {"action": "acquire", "user": "alice", "token": "t", "at": "P_A",
         "presentation": {"0": "Q_0", "1": "Q_1"}},
        {"action": "decide", "user": "alice", "token": "t", "b": "0", "at": "P_D"},
        {"action": "present", "user": "alice", "token": "t", "at": "Q_0", "expect": "accept"}
      ]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..bb84 import ChannelModel
from ..coordination import CoordinationParams
from ..errors import InvalidInputError, ScenarioParseError
from ..spacetime import NetworkLayout

ACTIONS = {
    "setup": ("user", "pool_bits", "at"),
    "acquire": ("user", "token", "presentation", "at"),
    "decide": ("user", "token", "b", "at"),
    "decide_partial": ("user", "token", "bits", "at"),
    "transfer": ("token", "from", "to", "at"),
    "present": ("user", "token", "at"),
}
OPTIONAL = {"expect", "x", "memo", "tamper", "note"}


@dataclass
class UserSpec:
    name: str
    pool_bits: int = 0
    setup_at: str | None = None
    x: str | None = None


@dataclass
class Scenario:
    name: str
    layout: NetworkLayout
    params: CoordinationParams
    channel: ChannelModel
    users: dict[str, UserSpec]
    script: list[dict[str, Any]]
    seed: int = 0
    source: dict = field(default_factory=dict, repr=False)


def _get(d, key, where, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise ScenarioParseError(f"missing field {key!r}", where)
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise ScenarioParseError(f"field {key!r} must be {getattr(kind, '__name__', kind)}", f"{where}.{key}")
    return v


def parse_scenario(raw: dict) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioParseError("scenario must be a JSON object", "$")
    try:
        layout = NetworkLayout.from_mapping(_get(raw, "layout", "$", dict))
    except InvalidInputError as e:
        raise ScenarioParseError(str(e), "$.layout") from None
    try:
        params = CoordinationParams(**{"M": 1, **raw.get("params", {})})
        channel = ChannelModel(**raw.get("channel", {}))
    except (TypeError, InvalidInputError) as e:
        raise ScenarioParseError(str(e), "$.params/channel") from None

    users = {}
    for name, spec in _get(raw, "users", "$", dict).items():
        where = f"$.users.{name}"
        if not isinstance(spec, dict):
            raise ScenarioParseError("user entry must be an object", where)
        u = UserSpec(name, int(spec.get("pool_bits", 0)), spec.get("setup_at"), spec.get("x"))
        if u.pool_bits and u.setup_at not in layout:
            raise ScenarioParseError(f"unknown point {u.setup_at!r}", f"{where}.setup_at")
        users[name] = u

    script = _get(raw, "script", "$", list)
    for i, step in enumerate(script):
        where = f"$.script[{i}]"
        action = _get(step, "action", where, str)
        if action not in ACTIONS:
            raise ScenarioParseError(f"unknown action {action!r}", f"{where}.action")
        for key in ACTIONS[action]:
            _get(step, key, where)
        extra = set(step) - set(ACTIONS[action]) - OPTIONAL - {"action"}
        if extra:
            raise ScenarioParseError(f"unexpected fields {sorted(extra)}", where)
        if step["at"] not in layout:
            raise ScenarioParseError(f"unknown point {step['at']!r}", f"{where}.at")
        for key in ("user", "from", "to"):
            if key in step and step[key] not in users:
                raise ScenarioParseError(f"unknown user {step[key]!r}", f"{where}.{key}")
        if action == "acquire":
            for lab, q in _get(step, "presentation", where, dict).items():
                if q not in layout:
                    raise ScenarioParseError(f"unknown point {q!r}", f"{where}.presentation.{lab}")
        if step.get("expect") not in (None, "accept", "reject"):
            raise ScenarioParseError("expect must be 'accept' or 'reject'", f"{where}.expect")
    return Scenario(str(raw.get("name", "scenario")), layout, params, channel, users, script,
                    int(raw.get("seed", 0)), raw)


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(e.msg, f"{path}:{e.lineno}:{e.colno}") from None
    return parse_scenario(raw)


def builtin_scenario_path(name: str) -> Path:
    return Path(__file__).resolve().parent.parent / "scenarios" / f"{name}.json"
