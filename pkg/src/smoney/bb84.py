"""BB84 preparation, lossy/noisy transmission and measurement.

Honest parties only ever prepare and measure in the two BB84 bases, so their
measurements are simulated classically.  The single-qubit statevector path
exists for adversaries measuring in other bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InvalidInputError

Label = tuple[int, int]

_SQRT_HALF = 1.0 / math.sqrt(2.0)


class Basis(IntEnum):
    COMPUTATIONAL = 0
    HADAMARD = 1


@dataclass(frozen=True)
class PulseDescription:
    label: Label  # (k, l), both 1-based
    r: int
    s: Basis


@dataclass(frozen=True)
class ChannelModel:
    p_loss: float = 0.0
    p_err: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_loss < 1.0:
            raise InvalidInputError(f"p_loss must be in [0, 1), got {self.p_loss}")
        if not 0.0 <= self.p_err < 0.5:
            raise InvalidInputError(f"p_err must be in [0, 0.5), got {self.p_err}")


@dataclass(frozen=True)
class QubitState:
    a0: complex
    a1: complex

    def __post_init__(self):
        norm = abs(self.a0) ** 2 + abs(self.a1) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise InvalidInputError(f"state not normalized (|a|^2 = {norm})")


def bits(value: str | Sequence[int]) -> np.ndarray:
    """Coerce ``"0110"`` or ``[0, 1, 1, 0]`` to a uint8 array of 0/1."""
    if isinstance(value, str):
        if set(value) - {"0", "1"}:
            raise InvalidInputError(f"not a bit string: {value!r}")
        return np.frombuffer(value.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(value, dtype=np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise InvalidInputError("bit values must be 0 or 1")
    return arr.astype(np.uint8)


def labels(n: int, M: int) -> list[Label]:
    """All pulse labels in k-major order."""
    return [(k, l) for k in range(1, M + 1) for l in range(1, n + 1)]


def label_index(label: Label, n: int) -> int:
    k, l = label
    return (k - 1) * n + (l - 1)


def prepare_pulses(r, s, n: int, M: int) -> list[PulseDescription]:
    r, s = bits(r), bits(s)
    if len(r) != n * M or len(s) != n * M:
        raise InvalidInputError(f"r and s must have length n*M = {n * M}")
    return [
        PulseDescription(lab, int(r[i]), Basis(int(s[i])))
        for i, lab in enumerate(labels(n, M))
    ]


def transmit(pulses: Sequence[PulseDescription], channel: ChannelModel, rng) -> set[Label]:
    kept = rng.random(len(pulses)) >= channel.p_loss
    return {p.label for p, ok in zip(pulses, kept) if ok}


def measure_bb84(pulse: PulseDescription, basis: int, channel: ChannelModel, rng) -> int:
    flip_u, coin_u = rng.random(2)
    if int(basis) == int(pulse.s):
        return pulse.r ^ int(flip_u < channel.p_err)
    return int(coin_u < 0.5)


def statevector(pulse: PulseDescription) -> QubitState:
    if pulse.s == Basis.COMPUTATIONAL:
        return QubitState(1.0 - pulse.r, float(pulse.r))
    return QubitState(_SQRT_HALF, -_SQRT_HALF if pulse.r else _SQRT_HALF)


def projective_probabilities(state: QubitState, theta: float) -> tuple[float, float]:
    """Born probabilities for the basis rotated by ``theta`` from {|0>, |1>}."""
    c, s = math.cos(theta), math.sin(theta)
    p0 = abs(c * state.a0 + s * state.a1) ** 2
    p1 = abs(-s * state.a0 + c * state.a1) ** 2
    return p0, p1


def measure_projective(state: QubitState, theta: float, rng) -> int:
    if not 0.0 <= theta < math.pi:
        raise InvalidInputError(f"theta must be in [0, pi), got {theta}")
    p0, _ = projective_probabilities(state, theta)
    return 0 if rng.random() < p0 else 1


# Batch forms over flat k-major arrays, used on the hot paths.

def statevector_arrays(r: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.asarray(r, dtype=np.uint8)
    hadamard = np.asarray(s, dtype=np.uint8) == 1
    a0 = np.where(hadamard, _SQRT_HALF, 1.0 - r).astype(np.complex128)
    a1 = np.where(hadamard, np.where(r == 1, -_SQRT_HALF, _SQRT_HALF), r).astype(np.complex128)
    return a0, a1


def transmit_mask(size: int, channel: ChannelModel, rng) -> np.ndarray:
    return rng.random(size) >= channel.p_loss


def measure_bb84_batch(r, s, basis, received, channel: ChannelModel, rng) -> np.ndarray:
    """Outcomes for every pulse (-1 where not received); ``basis`` is per pulse."""
    size = len(r)
    flip_u = rng.random(size)
    coin_u = rng.random(size)
    return kernels.bb84_outcomes(r, s, basis, received, flip_u, coin_u, channel.p_err)


def measure_projective_batch(r, s, theta: float, rng) -> np.ndarray:
    a0, a1 = statevector_arrays(r, s)
    return kernels.projective_outcomes(a0, a1, theta, rng.random(len(a0)))
