"""Deterministic scenario execution and transcript audit."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import auth
from ..errors import SMoneyError, UnknownTokenError
from ..spacetime import Event, causal_precedes
from ..tokens import (
    Bank,
    PresentationSet,
    UserIdentity,
    acquire_token,
    decide,
    decide_partial,
    make_transfer,
    present,
    setup_user,
    transfer,
    validate_presentation,
)
from .scenario import Scenario


@dataclass
class Transcript:
    """Append-only list of records; serialized as one canonical JSON object per line."""

    records: list[dict] = field(default_factory=list)

    def append(self, record: dict) -> None:
        self.records.append({"seq": len(self.records), **record})

    def lines(self) -> list[str]:
        return [auth.canonical(r).decode() for r in self.records]

    def dumps(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "Transcript":
        return cls([json.loads(line) for line in text.splitlines() if line.strip()])

    @classmethod
    def read(cls, path) -> "Transcript":
        return cls.loads(Path(path).read_text())


@dataclass
class RunResult:
    transcript: Transcript
    verdicts: dict[str, dict]
    mismatches: list[dict]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _user_key(seed: int, name: str) -> bytes:
    return hashlib.sha256(f"smoney-user:{seed}:{name}".encode()).digest()


class _Runner:
    def __init__(self, scenario: Scenario, seed: int):
        self.sc = scenario
        self.seed = seed
        self.bank = Bank(scenario.layout, scenario.params, scenario.channel)
        self.bank_rng = np.random.default_rng([seed, 0])
        self.users = {}
        self.user_rngs = {}
        for i, name in enumerate(sorted(scenario.users)):
            self.users[name] = UserIdentity(name, _user_key(seed, name))
            self.user_rngs[name] = np.random.default_rng([seed, i + 1])
        self.tokens = {}
        self.transcript = Transcript()
        self.verdicts: dict[str, dict] = {}
        self.mismatches: list[dict] = []

    def record(self, step: dict, actor: str | None, payload, verdict: str, reason: str | None) -> None:
        at = step["at"]
        rec = {
            "action": step["action"],
            "actor": actor,
            "token": step.get("token"),
            "point": at,
            "event": self.sc.layout[at].to_list(),
            "payload_digest": None if payload is None else auth.digest(payload),
            "verdict": verdict,
            "reason": reason,
        }
        self.transcript.append(rec)
        expect = step.get("expect")
        if expect is not None and expect != verdict:
            self.mismatches.append({"seq": len(self.transcript.records) - 1, "expected": expect, **rec})

    def run(self) -> RunResult:
        self.transcript.append({"action": "begin", "scenario": self.sc.name,
                                "scenario_digest": auth.digest(self.sc.source), "seed": self.seed})
        for name in sorted(self.sc.users):
            u = self.sc.users[name]
            if u.pool_bits:
                self.step({"action": "setup", "user": name, "pool_bits": u.pool_bits,
                           "at": u.setup_at, **({"x": u.x} if u.x else {})})
        for step in self.sc.script:
            self.step(step)
        return RunResult(self.transcript, self.verdicts, self.mismatches)

    def step(self, step: dict) -> None:
        actor = step.get("user") or step.get("from")
        try:
            payload, verdict, reason = getattr(self, "_" + step["action"])(step)
        except SMoneyError as e:
            payload, verdict, reason = None, "reject", f"{type(e).__name__}: {e}"
        self.record(step, actor, payload, verdict, reason)

    def _token(self, step):
        try:
            return self.tokens[step["token"]]
        except KeyError:
            raise UnknownTokenError(f"no token named {step['token']!r} in this scenario") from None

    def _setup(self, step):
        name = step["user"]
        entry = setup_user(self.bank, self.users[name], int(step["pool_bits"]), step["at"], self.bank_rng,
                           x=step.get("x"), user_rng=self.user_rngs[name])
        instance = entry.commit.instance_id
        record = self.bank.issuer_records[instance]
        # bank-visible data only: the pulses sent and the labels reported received
        payload = {"instance": instance, "r": record.r.tolist(), "s": record.s.tolist(),
                   "received": record.received.astype(int).tolist()}
        return payload, "accept", None

    def _acquire(self, step):
        labeling = step["presentation"]
        M = len(next(iter(labeling)))
        pres = PresentationSet(labeling, M)
        token = acquire_token(self.users[step["user"]], self.bank, pres, step["at"], memo=step.get("memo"))
        self.tokens[step["token"]] = token
        self.verdicts[step["token"]] = {"token_id": token.token_id, "accepted_at": [], "rejected_at": []}
        return {"token": token.token_id, "segment": [token.segment[0], list(token.segment[1])],
                "labeling": dict(sorted(labeling.items()))}, "accept", None

    def _decide(self, step):
        msg = decide(self.bank, self._token(step), self.users[step["user"]], step["b"], step["at"])
        return msg.to_dict(), "accept", None

    def _decide_partial(self, step):
        choice = {int(k): int(v) for k, v in step["bits"].items()}
        msg = decide_partial(self.bank, self._token(step), self.users[step["user"]], choice, step["at"])
        return msg.to_dict(), "accept", None

    def _transfer(self, step):
        token = self._token(step)
        sender, recipient = self.users[step["from"]], self.users[step["to"]]
        msg = make_transfer(token, sender, recipient, step["at"], self.bank.scheme)
        if step.get("tamper"):
            flipped = "0" if msg.signature[0] != "0" else "1"
            msg = type(msg)(msg.token_id, msg.from_user, msg.to_user, msg.point, flipped + msg.signature[1:])
        transfer(self.bank, token, sender, recipient, step["at"], message=msg, memo=step.get("memo"))
        return msg.to_dict(), "accept", None

    def _present(self, step):
        token = self._token(step)
        msg = present(token, self.users[step["user"]], step["at"])
        verdict = validate_presentation(self.bank, token.token_id, step["at"], msg)
        slot = "accepted_at" if verdict else "rejected_at"
        self.verdicts[step["token"]][slot].append(step["at"])
        return msg.to_dict(), ("accept" if verdict else "reject"), verdict.reason


def run_scenario(scenario: Scenario, seed: int | None = None) -> RunResult:
    """Execute the script in order; protocol violations become rejected records."""
    return _Runner(scenario, scenario.seed if seed is None else seed).run()


@dataclass
class VerifyReport:
    ok: bool
    index: int | None = None
    expected: str | None = None
    actual: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_transcript(transcript: Transcript | str, scenario: Scenario, seed: int | None = None) -> VerifyReport:
    """Replay ``scenario`` and compare line by line.

    The replay uses ``seed`` if given, otherwise the seed in the transcript header.
    """
    if isinstance(transcript, str):
        transcript = Transcript.loads(transcript)
    given = transcript.lines()
    if not given:
        return VerifyReport(False, 0, None, None)
    if seed is None:
        seed = transcript.records[0].get("seed")
    if not isinstance(seed, int):
        return VerifyReport(False, 0, None, given[0])
    replay = run_scenario(scenario, seed).transcript.lines()
    for i, (a, b) in enumerate(zip(replay, given)):
        if a != b:
            return VerifyReport(False, i, a, b)
    if len(replay) != len(given):
        i = min(len(replay), len(given))
        return VerifyReport(False, i, replay[i] if i < len(replay) else None, given[i] if i < len(given) else None)
    return VerifyReport(True)


def causal_violations(transcript: Transcript, layout) -> list[int]:
    """Accepted presentations that rely on an accepted action outside their causal past."""
    bad = []
    history: dict[str, list] = {}
    for rec in transcript.records:
        token = rec.get("token")
        if token is None or rec.get("verdict") != "accept":
            continue
        ev = Event.from_list(rec["event"])
        if rec["action"] == "present":
            if not all(causal_precedes(prev, ev) for prev in history.get(token, [])):
                bad.append(rec["seq"])
        else:
            history.setdefault(token, []).append(ev)
    return bad
