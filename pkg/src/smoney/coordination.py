"""Bit-string coordination built from parallel BB84 commitments.

The issuer prepares ``n`` pulses per committed bit.  The user commits to bit
``x_k`` by measuring every received pulse of group ``k`` in basis ``x_k``, and
unveils by revealing the claimed bits together with all outcomes.  A group
passes when its matching-basis pulses are numerous enough and at most a
fraction ``gamma`` of them disagree with the issuer's preparation bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .bb84 import (
    ChannelModel,
    Label,
    PulseDescription,
    bits,
    label_index,
    labels,
    measure_bb84_batch,
    prepare_pulses,
    transmit_mask,
)
from .errors import InvalidInputError, ProtocolError, UnknownInstanceError

# Slack on the error threshold so that e.g. 1 <= 0.25 * 4 is not lost to rounding.
THRESHOLD_EPS = 1e-9


@dataclass(frozen=True)
class CoordinationParams:
    n: int = 128
    M: int = 3
    gamma: float = 0.1
    min_received_fraction: float = 0.5

    def __post_init__(self):
        if self.n < 1 or self.M < 1:
            raise InvalidInputError("n and M must be positive")
        if not 0.0 < self.gamma < 0.5:
            raise InvalidInputError(f"gamma must be in (0, 1/2), got {self.gamma}")
        if not 0.0 < self.min_received_fraction <= 1.0:
            raise InvalidInputError("min_received_fraction must be in (0, 1]")

    @property
    def min_group_size(self) -> float:
        return self.min_received_fraction * self.n / 2


def _new_instance_id(rng) -> str:
    return "ci-%016x" % int(rng.integers(0, 2**63))


@dataclass(frozen=True, eq=False)
class IssuerRecord:
    instance_id: str
    params: CoordinationParams
    r: np.ndarray
    s: np.ndarray
    received: np.ndarray | None = None  # bool mask frozen at commit time

    def pulses(self) -> list[PulseDescription]:
        return prepare_pulses(self.r, self.s, self.params.n, self.params.M)

    @property
    def received_labels(self) -> set[Label] | None:
        if self.received is None:
            return None
        return {lab for lab, ok in zip(labels(self.params.n, self.params.M), self.received) if ok}

    def with_received(self, received_labels) -> "IssuerRecord":
        mask = np.zeros(self.params.n * self.params.M, dtype=bool)
        if isinstance(received_labels, np.ndarray) and received_labels.dtype == bool:
            mask[:] = received_labels
        else:
            for lab in received_labels:
                mask[label_index(lab, self.params.n)] = True
        return IssuerRecord(self.instance_id, self.params, self.r, self.s, mask)


@dataclass(frozen=True, eq=False)
class CommitRecord:
    instance_id: str
    x: np.ndarray
    outcomes: np.ndarray  # flat k-major, -1 where not received
    n: int

    @property
    def received_labels(self) -> set[Label]:
        M = len(self.x)
        return {lab for lab, o in zip(labels(self.n, M), self.outcomes) if o >= 0}

    @property
    def y(self) -> dict[Label, int]:
        M = len(self.x)
        return {lab: int(o) for lab, o in zip(labels(self.n, M), self.outcomes) if o >= 0}

    def unveil(self, indices: Sequence[int] | None = None) -> "UnveilMessage":
        """Unveil the bits at 1-based ``indices`` (all bits by default)."""
        ks = list(range(1, len(self.x) + 1)) if indices is None else [int(k) for k in indices]
        rows = self.outcomes.reshape(-1, self.n)[[k - 1 for k in ks]]
        return UnveilMessage(self.instance_id, self.x[[k - 1 for k in ks]].copy(), rows.copy(), tuple(ks))


@dataclass(frozen=True, eq=False)
class UnveilMessage:
    """Claimed bits for groups ``indices`` and the outcome rows of those groups."""

    instance_id: str
    claimed_x: np.ndarray
    outcomes: np.ndarray  # shape (len(indices), n), -1 where absent
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "claimed_x", bits(self.claimed_x))
        if len(self.claimed_x) != len(self.indices):
            raise InvalidInputError("claimed_x length must match the number of unveiled bits")

    @classmethod
    def from_map(cls, instance_id: str, claimed_x, y: Mapping[Label, int], n: int,
                 indices: Sequence[int] | None = None) -> "UnveilMessage":
        claimed = bits(claimed_x)
        ks = tuple(range(1, len(claimed) + 1)) if indices is None else tuple(indices)
        rows = np.full((len(ks), n), -1, dtype=np.int8)
        pos = {k: i for i, k in enumerate(ks)}
        for (k, l), v in y.items():
            if k not in pos or not 1 <= l <= n:
                raise InvalidInputError(f"outcome label {(k, l)} outside the unveiled groups")
            rows[pos[k], l - 1] = int(v)
        return cls(instance_id, claimed, rows, ks)

    @property
    def y(self) -> dict[Label, int]:
        return {
            (k, l + 1): int(v)
            for k, row in zip(self.indices, self.outcomes)
            for l, v in enumerate(row)
            if v >= 0
        }

    def to_dict(self) -> dict:
        return {
            "instance": self.instance_id,
            "indices": list(self.indices),
            "claimed_x": "".join(map(str, self.claimed_x.tolist())),
            "y": ["".join("-" if v < 0 else str(int(v)) for v in row) for row in self.outcomes],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "UnveilMessage":
        rows = np.array(
            [[-1 if ch == "-" else int(ch) for ch in row] for row in d["y"]], dtype=np.int8
        )
        return cls(d["instance"], d["claimed_x"], rows, tuple(d["indices"]))


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None
    bit: int | None = None
    error_fraction: float | None = None

    def __bool__(self) -> bool:
        return self.accepted

    @classmethod
    def reject(cls, reason: str, bit: int | None = None, error_fraction: float | None = None):
        return cls(False, reason, bit, error_fraction)


ACCEPT = Verdict(True)


def issuer_init(params: CoordinationParams, rng, instance_id: str | None = None):
    size = params.n * params.M
    r = rng.integers(0, 2, size, dtype=np.uint8)
    s = rng.integers(0, 2, size, dtype=np.uint8)
    record = IssuerRecord(instance_id or _new_instance_id(rng), params, r, s)
    return record, record.pulses()


def commit_arrays(instance_id: str, r, s, received, x, n: int, channel: ChannelModel, rng) -> CommitRecord:
    """Measure every received pulse of group k in basis ``x[k-1]``."""
    x = bits(x)
    basis = np.repeat(x, n)
    out = measure_bb84_batch(r, s, basis, received, channel, rng)
    return CommitRecord(instance_id, x, out, n)


def user_commit(pulses_received: Sequence[PulseDescription], x, channel: ChannelModel, rng,
                *, n: int, instance_id: str = "") -> CommitRecord:
    x = bits(x)
    size = n * len(x)
    r = np.zeros(size, dtype=np.uint8)
    s = np.zeros(size, dtype=np.uint8)
    received = np.zeros(size, dtype=bool)
    for p in pulses_received:
        k, l = p.label
        if not (1 <= k <= len(x) and 1 <= l <= n):
            raise InvalidInputError(f"pulse label {p.label} outside [M] x [n]")
        i = label_index(p.label, n)
        r[i], s[i], received[i] = p.r, int(p.s), True
    return commit_arrays(instance_id, r, s, received, x, n, channel, rng)


def validate_unveil(issuer: IssuerRecord, unveil: UnveilMessage) -> Verdict:
    if unveil.instance_id != issuer.instance_id:
        raise UnknownInstanceError(f"unveil for unknown instance {unveil.instance_id!r}")
    if issuer.received is None:
        raise ProtocolError(f"instance {issuer.instance_id} has no registered commitment")
    p = issuer.params
    ks = np.asarray(unveil.indices, dtype=np.int64)
    if len(set(unveil.indices)) != len(ks) or ks.size == 0 or ks.min() < 1 or ks.max() > p.M:
        return Verdict.reject("malformed")
    outcomes = np.asarray(unveil.outcomes)
    if outcomes.shape != (len(ks), p.n) or outcomes.min(initial=0) < -1 or outcomes.max(initial=0) > 1:
        return Verdict.reject("malformed")
    rows = ks - 1
    # Outcomes must be given for exactly the labels reported received at commit time.
    if not np.array_equal(outcomes >= 0, issuer.received.reshape(-1, p.n)[rows]):
        return Verdict.reject("malformed")
    r = issuer.r.reshape(-1, p.n)[rows].ravel()
    s = issuer.s.reshape(-1, p.n)[rows].ravel()
    omega, wrong = kernels.group_errors(
        r, s, outcomes.ravel(), unveil.claimed_x, np.arange(len(rows), dtype=np.int64), p.n
    )
    return _judge(p, ks, omega, wrong)


def _judge(p: CoordinationParams, ks, omega, wrong) -> Verdict:
    for k, om, wr in zip(ks, omega, wrong):
        frac = float(wr) / om if om else 1.0
        if om < p.min_group_size:
            return Verdict.reject("insufficient-data", int(k), frac)
        if wr > p.gamma * om + THRESHOLD_EPS:
            return Verdict.reject("threshold", int(k), frac)
    return ACCEPT


def double_unveil_check(issuer: IssuerRecord, unveil_a: UnveilMessage, unveil_b: UnveilMessage) -> bool:
    """True iff both unveils are accepted yet claim different bits (a binding break)."""
    if not (validate_unveil(issuer, unveil_a) and validate_unveil(issuer, unveil_b)):
        return False
    a = dict(zip(unveil_a.indices, unveil_a.claimed_x.tolist()))
    b = dict(zip(unveil_b.indices, unveil_b.claimed_x.tolist()))
    return any(a[k] != b[k] for k in a.keys() & b.keys())
