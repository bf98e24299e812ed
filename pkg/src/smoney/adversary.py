"""Double-spending strategies and Monte Carlo estimates of their success.

Adversaries measure each qubit individually on receipt and keep only
classical data.  A trial counts as a success only when the bank's full
presentation validation accepts the token at two distinct presentation
points.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .bb84 import ChannelModel, bits, measure_bb84_batch, measure_projective_batch, transmit_mask
from .coordination import (
    CommitRecord,
    CoordinationParams,
    THRESHOLD_EPS,
    UnveilMessage,
    issuer_init,
    validate_unveil,
)
from .errors import InvalidInputError
from .spacetime import NetworkLayout
from .tokens import (
    Bank,
    PoolEntry,
    PresentationSet,
    PresentMessage,
    UserIdentity,
    acquire_token,
    decide,
    validate_presentation,
)

KINDS = ("single_basis", "intermediate_basis", "random_guess", "double_unveil_same_y", "honest")
BREIDBART_ANGLE = math.pi / 8


@dataclass(frozen=True)
class CheatStrategy:
    """How the adversary measures, and the two strings ``x1``, ``x2`` it will claim.

    ``honest`` measures in the bases of ``x1`` and claims ``x1`` both times.
    """

    kind: str
    claims: tuple[str, str] = ("0", "1")
    theta: float = BREIDBART_ANGLE

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown strategy {self.kind!r}; choose from {KINDS}")
        a, b = self.claims
        if len(a) != len(b):
            raise InvalidInputError("claims must have equal length")
        bits(a), bits(b)
        if self.kind != "honest" and a == b:
            raise InvalidInputError("claim pair must differ in at least one bit")

    @classmethod
    def default(cls, kind: str, M: int = 1, theta: float = BREIDBART_ANGLE) -> "CheatStrategy":
        """Claims ``0...0`` and ``10...0``."""
        a = "0" * M
        b = a if kind == "honest" else "1" + "0" * (M - 1)
        return cls(kind, (a, b), theta)

    @property
    def differing(self) -> list[int]:
        a, b = self.claims
        return [k for k in range(len(a)) if a[k] != b[k]]


@dataclass
class AttackReport:
    strategy: str
    trials: int
    successes: int
    analytical_bound: float
    predicted: float | None = None
    parameters: dict = field(default_factory=dict)

    @property
    def empirical_probability(self) -> float:
        return self.successes / self.trials

    @property
    def standard_error(self) -> float:
        p = self.empirical_probability
        return math.sqrt(p * (1 - p) / self.trials)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["empirical_probability"] = self.empirical_probability
        return d


def binding_bound(n: int, gamma: float) -> float:
    """Chernoff tail for passing a wrong-basis group of ~n/2 uniform outcomes.

    A heuristic single-strategy reference, not a security proof.
    """
    if not 0 < gamma < 0.5 + 1e-15:
        raise InvalidInputError("gamma must be in (0, 1/2)")
    return math.exp(-2.0 * (n // 2) * (0.5 - gamma) ** 2)


def exact_binomial_tail(k: int, gamma: float, p: float) -> float:
    """P[Bin(k, p) <= floor(gamma k)], summed in log space."""
    if k > 10**4:
        raise InvalidInputError("k must be <= 10^4")
    jmax = min(k, math.floor(gamma * k + THRESHOLD_EPS))
    if k == 0 or p == 0.0:
        return 1.0
    if p == 1.0:
        return 1.0 if jmax >= k else 0.0
    lp, lq = math.log(p), math.log1p(-p)
    lk = math.lgamma(k + 1)
    terms = [lk - math.lgamma(j + 1) - math.lgamma(k - j + 1) + j * lp + (k - j) * lq
             for j in range(jmax + 1)]
    top = max(terms)
    return min(1.0, math.exp(top) * math.fsum(math.exp(t - top) for t in terms))


def _binom_pmf(k: int, n: int, p: float) -> float:
    if p in (0.0, 1.0):
        return float(k == (0 if p == 0.0 else n))
    return math.exp(math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
                    + k * math.log(p) + (n - k) * math.log1p(-p))


@lru_cache(maxsize=None)
def group_pass_probability(n: int, gamma: float, q: float, p_loss: float = 0.0,
                           min_received_fraction: float = 0.5) -> float:
    """Exact probability that one claimed group passes validation.

    The group size is Bin(n, (1 - p_loss)/2) and each member errs with
    probability ``q`` independently.
    """
    keep = (1.0 - p_loss) / 2
    need = min_received_fraction * n / 2
    return math.fsum(
        _binom_pmf(w, n, keep) * exact_binomial_tail(w, gamma, q)
        for w in range(n + 1) if w >= need
    )


def intermediate_error_rates(theta: float) -> tuple[float, float]:
    """Per-qubit error rates (computational, Hadamard) when outcome 0 is read as bit 0."""
    return math.sin(theta) ** 2, math.sin(math.pi / 4 - theta) ** 2


def predicted_success(strategy: CheatStrategy, params: CoordinationParams, channel: ChannelModel) -> float | None:
    """Exact success probability where the outcome statistics are independent per group."""
    M = len(strategy.claims[0])
    D = len(strategy.differing)
    args = (params.n, params.gamma)
    kw = dict(p_loss=channel.p_loss, min_received_fraction=params.min_received_fraction)
    honest = group_pass_probability(*args, channel.p_err, **kw)
    if strategy.kind == "honest":
        return 0.0
    if strategy.kind == "intermediate_basis":
        qc, qh = intermediate_error_rates(strategy.theta)
        per_bit = group_pass_probability(*args, qc, **kw) * group_pass_probability(*args, qh, **kw)
        return per_bit**D * honest ** (M - D)
    if strategy.kind in ("single_basis", "double_unveil_same_y"):
        wrong = group_pass_probability(*args, 0.5, **kw)
        return (honest * wrong) ** D * honest ** (M - D)
    return None


def attack_layout(M: int) -> tuple[NetworkLayout, PresentationSet]:
    """Setup, acquisition and decision on the t axis; 2^M mutually spacelike presentation points."""
    count = 2**M
    t_q = count + 10.0
    pts = {"P": [0.0, 0.0], "P_A": [1.0, 0.0], "P_D": [2.0, 0.0]}
    names = []
    for i in range(count):
        name = "Q_" + format(i, f"0{M}b")
        pts[name] = [t_q, i - (count - 1) / 2]
        names.append(name)
    return NetworkLayout.from_mapping(pts), PresentationSet.lexicographic(names, M)


def _adversary_outcomes(strategy: CheatStrategy, r, s, received, n, channel, rng):
    """Outcome vectors y (first claim) and z (second claim), -1 where not received."""
    x1 = bits(strategy.claims[0])
    diff = np.zeros(len(x1), dtype=bool)
    diff[strategy.differing] = True
    diff_pulses = np.repeat(diff, n)
    if strategy.kind == "random_guess":
        y = np.where(received, rng.integers(0, 2, len(r)), -1).astype(np.int8)
    else:
        y = measure_bb84_batch(r, s, np.repeat(x1, n), received, channel, rng)
    if strategy.kind == "intermediate_basis" and diff.any():
        proj = measure_projective_batch(r, s, strategy.theta, rng)
        y = np.where(diff_pulses & received, proj, y).astype(np.int8)
    z = y
    if strategy.kind in ("single_basis", "random_guess"):
        guess = rng.integers(0, 2, len(r)).astype(np.int8)
        z = np.where(diff_pulses & received, guess, y).astype(np.int8)
    return y, z


def run_trial(strategy: CheatStrategy, params: CoordinationParams, channel: ChannelModel, rng,
              layout=None) -> bool:
    """One double-spend attempt through acquisition, one mask, and two presentations."""
    M = len(strategy.claims[0])
    layout, pres = layout or attack_layout(M)
    n = params.n
    bank = Bank(layout, params, channel)
    eve = UserIdentity("eve", b"eve-key")
    record, _ = issuer_init(CoordinationParams(n, M, params.gamma, params.min_received_fraction), rng)
    received = transmit_mask(n * M, channel, rng)
    y, z = _adversary_outcomes(strategy, record.r, record.s, received, n, channel, rng)
    x1, x2 = (bits(c) for c in strategy.claims)
    bank.register_user(eve)
    bank.register_instance(eve.user_id, record.with_received(received), "P")
    eve.pool.append(PoolEntry(CommitRecord(record.instance_id, x1, y, n), layout["P"], np.zeros(M, dtype=bool)))

    token = acquire_token(eve, bank, pres, "P_A")
    decide(bank, token, eve, "0" * M, "P_D")  # m = x1
    ks = tuple(range(1, M + 1))
    target2 = "Q_" + "".join(str(int(a ^ b)) for a, b in zip(x1, x2))
    attempts = [
        ("Q_" + "0" * M, UnveilMessage(record.instance_id, x1, y.reshape(M, n), ks)),
        (target2, UnveilMessage(record.instance_id, x2, z.reshape(M, n), ks)),
    ]
    accepted = set()
    for point, unveil in attempts:
        if point not in layout:
            continue
        msg = PresentMessage(token.token_id, eve.user_id, point, unveil)
        if validate_presentation(bank, token.token_id, point, msg):
            accepted.add(point)
    return len(accepted) == 2


def run_double_spend(strategy: CheatStrategy, params: CoordinationParams, channel: ChannelModel,
                     trials: int, rng) -> AttackReport:
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    M = len(strategy.claims[0])
    layout = attack_layout(M)
    successes = sum(run_trial(strategy, params, channel, rng, layout) for _ in range(trials))
    if strategy.kind == "intermediate_basis":
        qc, qh = intermediate_error_rates(strategy.theta)
        q = min(qc, qh)
        bound = 1.0 if q <= params.gamma else math.exp(-2.0 * (params.n // 2) * (q - params.gamma) ** 2)
    else:
        bound = binding_bound(params.n, params.gamma)
    return AttackReport(
        strategy.kind, trials, successes, bound, predicted_success(strategy, params, channel),
        {"n": params.n, "M": M, "gamma": params.gamma, "theta": strategy.theta,
         "p_loss": channel.p_loss, "p_err": channel.p_err, "claims": list(strategy.claims)},
    )


def wrong_basis_error_fractions(n: int, trials: int, rng) -> np.ndarray:
    """Error fraction on the Hadamard group after measuring everything computationally."""
    params = CoordinationParams(n, 1, 0.25)
    out = np.empty(trials)
    received = np.ones(n, dtype=bool)
    for i in range(trials):
        record, _ = issuer_init(params, rng)
        y = measure_bb84_batch(record.r, record.s, np.zeros(n, dtype=np.uint8), received, ChannelModel(), rng)
        omega, wrong = kernels.group_errors(record.r, record.s, y, [1], [0], n)
        out[i] = wrong[0] / omega[0] if omega[0] else 0.5
    return out


def single_group_pass_rate(n: int, gamma: float, q_kind: str, trials: int, rng,
                           channel: ChannelModel | None = None, theta: float = BREIDBART_ANGLE) -> float:
    """Empirical rate at which one claimed group passes ``validate_unveil``.

    ``q_kind`` is ``"wrong_basis"`` (measured in the other basis) or
    ``"intermediate"`` (measured at angle ``theta``); the claim is bit 0.
    """
    channel = channel or ChannelModel()
    params = CoordinationParams(n, 1, gamma)
    passed = 0
    for _ in range(trials):
        record, _ = issuer_init(params, rng)
        received = transmit_mask(n, channel, rng)
        if q_kind == "wrong_basis":
            y = measure_bb84_batch(record.r, record.s, np.ones(n, dtype=np.uint8), received, channel, rng)
        elif q_kind == "intermediate":
            y = np.where(received, measure_projective_batch(record.r, record.s, theta, rng), -1).astype(np.int8)
        else:
            raise InvalidInputError(f"unknown q_kind {q_kind!r}")
        v = validate_unveil(record.with_received(received),
                            UnveilMessage(record.instance_id, [0], y.reshape(1, n), (1,)))
        passed += bool(v)
    return passed / trials
