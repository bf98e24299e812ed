"""Minkowski spacetime events and causal ordering (units with c = 1).

Regions where agents sit are approximated by points.  The light-cone test is
non-strict: an event precedes itself and lightlike separation counts as causal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import InvalidInputError

#: Absolute slack on the light-cone inequality, absorbs rounding at the boundary.
LIGHTCONE_EPS = 1e-9


@dataclass(frozen=True)
class Event:
    t: float
    x: tuple[float, ...]

    def __post_init__(self):
        xs = (self.x,) if isinstance(self.x, (int, float)) else tuple(self.x)
        if not 1 <= len(xs) <= 3:
            raise InvalidInputError(f"spatial dimension must be 1..3, got {len(xs)}")
        coords = (self.t, *xs)
        if not all(isinstance(c, (int, float)) and math.isfinite(c) for c in coords):
            raise InvalidInputError(f"non-finite or non-numeric coordinate in {coords!r}")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", tuple(float(c) for c in xs))

    @property
    def dimension(self) -> int:
        return len(self.x)

    @classmethod
    def from_list(cls, coords) -> "Event":
        """Build from ``[t, x1, ...]`` as used in scenario files."""
        coords = list(coords)
        if len(coords) < 2:
            raise InvalidInputError("an event needs a time and at least one spatial coordinate")
        return cls(coords[0], tuple(coords[1:]))

    def to_list(self) -> list[float]:
        return [self.t, *self.x]

    def interval(self) -> float:
        """Squared interval from the origin, t^2 - |x|^2."""
        return self.t * self.t - sum(c * c for c in self.x)


def _check_dims(a: Event, b: Event) -> None:
    if a.dimension != b.dimension:
        raise InvalidInputError(f"dimension mismatch: {a.dimension} vs {b.dimension}")


def causal_precedes(a: Event, b: Event) -> bool:
    """True iff a signal no faster than light can get from ``a`` to ``b``."""
    _check_dims(a, b)
    dt = b.t - a.t
    if dt < -LIGHTCONE_EPS:
        return False
    dist = math.sqrt(sum((xb - xa) ** 2 for xa, xb in zip(a.x, b.x)))
    return dist <= dt + LIGHTCONE_EPS


def in_common_causal_past(p: Event, qs: Iterable[Event]) -> bool:
    qs = list(qs)
    if not qs:
        raise InvalidInputError("need at least one target event")
    return all(causal_precedes(p, q) for q in qs)


def boost(e: Event, v: float) -> Event:
    """Lorentz boost with velocity ``v`` along x (1+1 dimensions only)."""
    if not abs(v) < 1:
        raise InvalidInputError(f"boost velocity must satisfy |v| < 1, got {v}")
    if e.dimension != 1:
        raise InvalidInputError("boost is defined for one spatial dimension")
    g = 1.0 / math.sqrt(1.0 - v * v)
    (x,) = e.x
    return Event(g * (e.t - v * x), (g * (x - v * e.t),))


@dataclass(frozen=True)
class NetworkLayout:
    """Named spacetime points sharing one spatial dimension."""

    points: Mapping[str, Event] = field(default_factory=dict)
    dimension: int = 1

    def __post_init__(self):
        pts = dict(self.points)
        for name, ev in pts.items():
            if ev.dimension != self.dimension:
                raise InvalidInputError(
                    f"point {name!r} has dimension {ev.dimension}, layout has {self.dimension}"
                )
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_mapping(cls, raw: Mapping[str, list]) -> "NetworkLayout":
        pts = {name: Event.from_list(c) for name, c in raw.items()}
        dims = {e.dimension for e in pts.values()}
        if len(dims) > 1:
            raise InvalidInputError(f"mixed spatial dimensions in layout: {sorted(dims)}")
        return cls(pts, dims.pop() if dims else 1)

    def __getitem__(self, name: str) -> Event:
        try:
            return self.points[name]
        except KeyError:
            raise InvalidInputError(f"unknown point {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.points

    def precedes(self, a: str, b: str) -> bool:
        return causal_precedes(self[a], self[b])
