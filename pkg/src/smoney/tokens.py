"""Flexible S-money tokens.

Users run coordination instances with the bank well in advance, which pins
each of them to a secret random pool string.  A token is acquired classically
by reserving an unused M-bit segment ``x`` of that pool, its presentation
point ``Q_b`` is chosen later by sending ``m = x XOR b`` (all at once or in
stages), and it is redeemed at ``Q_b`` by unveiling the commitment to ``x``.

The bank is a network of agents.  Every bank-side notification is recorded as
a broadcast tagged with the event where it was sent; an agent at ``Q`` only
sees broadcasts sent from events in the causal past of ``Q``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import auth
from .bb84 import ChannelModel, bits, transmit_mask
from .coordination import (
    CommitRecord,
    CoordinationParams,
    IssuerRecord,
    UnveilMessage,
    Verdict,
    commit_arrays,
    issuer_init,
    validate_unveil,
)
from .errors import (
    AlreadyDecidedError,
    AuthenticationError,
    CausalityError,
    InvalidInputError,
    InvalidLabelError,
    NotOwnerError,
    PoolExhaustedError,
    ProtocolError,
    UnknownTokenError,
)
from .spacetime import Event, NetworkLayout, causal_precedes


def _bitstr(values) -> str:
    return "".join(str(int(v)) for v in values)


@dataclass
class PoolEntry:
    commit: CommitRecord
    setup_point: Event
    allocated: np.ndarray  # bool per pool bit

    @property
    def free(self) -> int:
        return int((~self.allocated).sum())


@dataclass
class UserIdentity:
    user_id: str
    key: bytes
    pool: list[PoolEntry] = field(default_factory=list)

    def unallocated(self) -> int:
        return sum(e.free for e in self.pool)

    def entry(self, instance_id: str) -> PoolEntry:
        for e in self.pool:
            if e.commit.instance_id == instance_id:
                return e
        raise ProtocolError(f"{self.user_id} holds no commitment {instance_id}")

    def _allocate(self, M: int, at: Event) -> tuple[str, tuple[int, ...]]:
        """Reserve the next M unallocated bits of one instance set up before ``at``."""
        if self.unallocated() < M or all(e.free < M for e in self.pool):
            raise PoolExhaustedError(f"{self.user_id} has no {M} unallocated pool bits")
        for e in self.pool:
            if e.free >= M and causal_precedes(e.setup_point, at):
                idx = np.flatnonzero(~e.allocated)[:M]
                e.allocated[idx] = True
                return e.commit.instance_id, tuple(int(i) + 1 for i in idx)
        raise CausalityError(f"no pool instance of {self.user_id} was set up in the causal past")


@dataclass(frozen=True)
class PresentationSet:
    """Bit-string labels ``i`` mapped to presentation point names ``Q_i``."""

    labeling: Mapping[str, str]
    M: int

    def __post_init__(self):
        object.__setattr__(self, "labeling", dict(self.labeling))
        if not 2 ** (self.M - 1) < len(self.labeling) <= 2**self.M:
            raise InvalidInputError(
                f"need 2^(M-1) < |S| <= 2^M presentation points, got {len(self.labeling)} for M={self.M}"
            )
        for lab in self.labeling:
            if len(lab) != self.M or set(lab) - {"0", "1"}:
                raise InvalidInputError(f"bad presentation label {lab!r}")
        if len(set(self.labeling.values())) != len(self.labeling):
            raise InvalidInputError("presentation points must be distinct")

    @classmethod
    def lexicographic(cls, points: Sequence[str], M: int | None = None) -> "PresentationSet":
        """Label points ``0...0, 0...1, ...`` in the given order."""
        if M is None:
            M = max(1, (len(points) - 1).bit_length())
        return cls({format(i, f"0{M}b"): q for i, q in enumerate(points)}, M)

    def label_of(self, point: str) -> str | None:
        for lab, q in self.labeling.items():
            if q == point:
                return lab
        return None

    def candidates(self, fixed: Mapping[int, int]) -> list[str]:
        """Labels consistent with the 1-based bit assignments in ``fixed``."""
        return [lab for lab in self.labeling if all(int(lab[k - 1]) == v for k, v in fixed.items())]


@dataclass(frozen=True)
class OwnerLink:
    user_id: str
    point: str
    digest: str


@dataclass
class Token:
    token_id: str
    presentation: PresentationSet
    owner_chain: list[OwnerLink]
    segment: tuple[str, tuple[int, ...]]
    acquisition_point: str
    masks: dict[int, tuple[int, str]] = field(default_factory=dict)  # k -> (m_k, decision point)
    spent: bool = False
    memo: str | None = None

    @property
    def owner(self) -> str:
        return self.owner_chain[-1].user_id

    @property
    def M(self) -> int:
        return self.presentation.M

    @property
    def decided(self) -> bool:
        return len(self.masks) == self.M

    @property
    def last_owner_point(self) -> str:
        return self.owner_chain[-1].point


@dataclass(frozen=True)
class DecisionMessage:
    token_id: str
    masks: Mapping[int, int]
    point: str

    def to_dict(self) -> dict:
        return {"token": self.token_id, "masks": {str(k): v for k, v in sorted(self.masks.items())},
                "point": self.point}


@dataclass(frozen=True)
class TransferMessage:
    token_id: str
    from_user: str
    to_user: str
    point: str
    signature: str = ""

    def payload(self) -> bytes:
        return auth.canonical(
            {"token": self.token_id, "from": self.from_user, "to": self.to_user, "point": self.point}
        )

    def to_dict(self) -> dict:
        return {"token": self.token_id, "from": self.from_user, "to": self.to_user,
                "point": self.point, "signature": self.signature}


@dataclass(frozen=True)
class PresentMessage:
    token_id: str
    presenter: str
    point: str
    unveil: UnveilMessage

    def to_dict(self) -> dict:
        return {"token": self.token_id, "presenter": self.presenter, "point": self.point,
                "unveil": self.unveil.to_dict()}


@dataclass(frozen=True)
class Broadcast:
    point: str
    event: Event
    token_id: str
    kind: str
    data: Mapping

    def to_dict(self) -> dict:
        return {"point": self.point, "t": self.event.to_list(), "token": self.token_id,
                "kind": self.kind, "data": dict(self.data)}


class Bank:
    """Issuer state: coordination records, user keys, and the broadcast log."""

    def __init__(self, layout: NetworkLayout, params: CoordinationParams,
                 channel: ChannelModel | None = None, scheme=auth.HmacScheme):
        self.layout = layout
        self.params = params
        self.channel = channel or ChannelModel()
        self.scheme = scheme
        self.issuer_records: dict[str, IssuerRecord] = {}
        self.setup_points: dict[str, str] = {}
        self.instance_users: dict[str, str] = {}
        self.user_keys: dict[str, bytes] = {}
        self.broadcasts: list[Broadcast] = []
        self.validations: list[tuple[str, Event]] = []  # spent notices
        self._token_ids = itertools.count(1)
        self._adhoc: dict[str, Event] = {}

    def resolve(self, point) -> tuple[str, Event]:
        """Map a point name or an event to ``(name, event)``; ad hoc events get a synthetic name."""
        if isinstance(point, Event):
            for name, ev in self.layout.points.items():
                if ev == point:
                    return name, ev
            name = "@" + ",".join(repr(c) for c in point.to_list())
            self._adhoc[name] = point
            return name, point
        return point, self.event(point)

    def event(self, name: str) -> Event:
        if name in self._adhoc:
            return self._adhoc[name]
        return self.layout[name]

    def register_user(self, user: UserIdentity) -> None:
        self.user_keys[user.user_id] = user.key

    def register_instance(self, user_id: str, record: IssuerRecord, point: str) -> None:
        self.issuer_records[record.instance_id] = record
        self.setup_points[record.instance_id] = point
        self.instance_users[record.instance_id] = user_id

    def broadcast(self, point: str, token_id: str, kind: str, data: Mapping) -> Broadcast:
        b = Broadcast(point, self.event(point), token_id, kind, data)
        self.broadcasts.append(b)
        return b

    def visible(self, token_id: str, at: Event) -> list[Broadcast]:
        """Broadcasts about ``token_id`` that have reached an agent at ``at``."""
        return [b for b in self.broadcasts
                if b.token_id == token_id and causal_precedes(b.event, at)]

    def known_token(self, token_id: str) -> bool:
        return any(b.token_id == token_id for b in self.broadcasts)

    def new_token_id(self) -> str:
        return "tok-%04d" % next(self._token_ids)


def _require_precedes(a: Event, b: Event, what: str) -> None:
    if not causal_precedes(a, b):
        raise CausalityError(what)


def _require_before_all(bank: Bank, at: Event, points: Iterable[str], what: str) -> None:
    late = [q for q in points if not causal_precedes(at, bank.event(q))]
    if late:
        raise CausalityError(f"{what}: not in the causal past of {', '.join(sorted(late))}")


def setup_user(bank: Bank, user: UserIdentity, pool_bits: int, at, rng, *,
               params: CoordinationParams | None = None, channel: ChannelModel | None = None,
               x=None, user_rng=None) -> PoolEntry:
    """Run one coordination instance committing ``user`` to a random ``pool_bits``-bit string.

    Bank-side draws (preparation, channel) come from ``rng``; the user's
    choice of ``x`` and measurement noise come from ``user_rng`` (default
    ``rng``).  Passing ``x`` fixes the committed string.
    """
    if pool_bits < 1:
        raise InvalidInputError("pool_bits must be >= 1")
    base = params or bank.params
    params = CoordinationParams(base.n, pool_bits, base.gamma, base.min_received_fraction)
    channel = channel or bank.channel
    user_rng = user_rng if user_rng is not None else rng
    name, _ = bank.resolve(at)
    record, _ = issuer_init(params, rng)
    received = transmit_mask(params.n * pool_bits, channel, rng)
    x = user_rng.integers(0, 2, pool_bits, dtype=np.uint8) if x is None else bits(x)
    if len(x) != pool_bits:
        raise InvalidInputError("x must have pool_bits entries")
    commit = commit_arrays(record.instance_id, record.r, record.s, received, x, params.n, channel, user_rng)
    bank.register_user(user)
    bank.register_instance(user.user_id, record.with_received(received), name)
    entry = PoolEntry(commit, bank.resolve(at)[1], np.zeros(pool_bits, dtype=bool))
    user.pool.append(entry)
    return entry


def acquire_token(user: UserIdentity, bank: Bank, pres_set: PresentationSet, at,
                  memo: str | None = None) -> Token:
    name, ev = bank.resolve(at)
    for q in pres_set.labeling.values():
        bank.event(q)  # unknown point -> InvalidInputError
    _require_before_all(bank, ev, pres_set.labeling.values(), f"acquisition at {name}")
    instance_id, indices = user._allocate(pres_set.M, ev)
    token_id = bank.new_token_id()
    data = {"owner": user.user_id, "instance": instance_id, "indices": list(indices),
            "labeling": dict(sorted(pres_set.labeling.items())), "memo": memo}
    b = bank.broadcast(name, token_id, "acquire", data)
    link = OwnerLink(user.user_id, name, auth.digest(b.to_dict()))
    return Token(token_id, pres_set, [link], (instance_id, indices), name, memo=memo)


def _check_owner(token: Token, caller: UserIdentity) -> None:
    if caller.user_id != token.owner:
        raise NotOwnerError(f"{caller.user_id} does not own {token.token_id}")


def decide_partial(bank: Bank, token: Token, caller: UserIdentity, choice: Mapping[int, int],
                   at) -> DecisionMessage:
    """Fix the 1-based bits ``choice`` of the presentation label, sending their masks."""
    name, ev = bank.resolve(at)
    if token.spent:
        raise ProtocolError(f"{token.token_id} is spent")
    _check_owner(token, caller)
    choice = {int(k): int(v) for k, v in choice.items()}
    if not choice:
        raise InvalidInputError("nothing to decide")
    for k, v in choice.items():
        if not 1 <= k <= token.M or v not in (0, 1):
            raise InvalidInputError(f"bad decision bit {k}={v}")
    again = sorted(set(choice) & set(token.masks))
    if again:
        raise AlreadyDecidedError(f"bits {again} of {token.token_id} already decided")
    instance_id, indices = token.segment
    x = caller.entry(instance_id).commit.x
    fixed = {k: m ^ int(x[indices[k - 1] - 1]) for k, (m, _) in token.masks.items()}
    remaining = token.presentation.candidates(fixed)
    if not token.presentation.candidates({**fixed, **choice}):
        raise InvalidLabelError("no presentation point carries the chosen label bits")
    _require_precedes(bank.event(token.last_owner_point), ev,
                      f"decision at {name} not after {token.last_owner_point}")
    for _, point in token.masks.values():
        _require_precedes(bank.event(point), ev, f"decision at {name} not after earlier decision at {point}")
    _require_before_all(bank, ev, (token.presentation.labeling[c] for c in remaining), f"decision at {name}")

    masks = {k: int(x[indices[k - 1] - 1]) ^ v for k, v in sorted(choice.items())}
    for k, m in masks.items():
        token.masks[k] = (m, name)
    msg = DecisionMessage(token.token_id, masks, name)
    bank.broadcast(name, token.token_id, "decide", {"masks": msg.to_dict()["masks"]})
    return msg


def decide(bank: Bank, token: Token, caller: UserIdentity, b, at) -> DecisionMessage:
    """Choose the full presentation label ``b`` at once."""
    b = _bitstr(bits(b))
    if token.masks:
        raise AlreadyDecidedError(f"{token.token_id} already has decided bits")
    if len(b) != token.M or b not in token.presentation.labeling:
        raise InvalidLabelError(f"{b!r} is not a presentation label")
    return decide_partial(bank, token, caller, {k + 1: int(c) for k, c in enumerate(b)}, at)


def make_transfer(token: Token, sender: UserIdentity, recipient: UserIdentity, at: str,
                  scheme=auth.HmacScheme) -> TransferMessage:
    unsigned = TransferMessage(token.token_id, sender.user_id, recipient.user_id, at)
    return replace(unsigned, signature=scheme.sign(sender.key, unsigned.payload()))


def transfer(bank: Bank, token: Token, sender: UserIdentity, recipient: UserIdentity, at,
             message: TransferMessage | None = None, memo: str | None = None) -> Token:
    name, ev = bank.resolve(at)
    if message is None:
        message = make_transfer(token, sender, recipient, name, bank.scheme)
    key = bank.user_keys.get(message.from_user)
    if (key is None or not bank.scheme.verify(key, message.payload(), message.signature)
            or (message.token_id, message.from_user, message.to_user, message.point)
            != (token.token_id, sender.user_id, recipient.user_id, name)):
        raise AuthenticationError(f"transfer message for {token.token_id} does not verify")
    if token.spent or token.masks:
        raise AlreadyDecidedError(f"{token.token_id} can only be transferred while undecided")
    _check_owner(token, sender)
    _require_precedes(bank.event(token.last_owner_point), ev,
                      f"transfer at {name} not after {token.last_owner_point}")
    _require_before_all(bank, ev, token.presentation.labeling.values(), f"transfer at {name}")
    instance_id, indices = recipient._allocate(token.M, ev)
    digest = auth.digest(message.to_dict())
    bank.broadcast(name, token.token_id, "transfer",
                   {"owner": recipient.user_id, "from": sender.user_id, "instance": instance_id,
                    "indices": list(indices), "message": digest, "memo": memo})
    token.owner_chain.append(OwnerLink(recipient.user_id, name, digest))
    token.segment = (instance_id, indices)
    return token


def present(token: Token, caller: UserIdentity, at: str) -> PresentMessage:
    """Unveil the segment commitment at ``at``.  Emitting anywhere is allowed."""
    if not token.decided:
        raise ProtocolError(f"{token.token_id} is not fully decided")
    _check_owner(token, caller)
    instance_id, indices = token.segment
    unveil = caller.entry(instance_id).commit.unveil(indices)
    token.spent = True
    return PresentMessage(token.token_id, caller.user_id, at, unveil)


def validate_presentation(bank: Bank, token_id: str, at, msg: PresentMessage) -> Verdict:
    name, ev = bank.resolve(at)
    if not bank.known_token(token_id):
        raise UnknownTokenError(token_id)
    view = bank.visible(token_id, ev)
    ownership = [b for b in view if b.kind in ("acquire", "transfer")]
    if not ownership or ownership[0].kind != "acquire":
        return Verdict.reject("insufficient-data")
    acquire = ownership[0].data
    # transfer points are causally chained, so the last visible one is current
    current = ownership[-1].data
    labeling = acquire["labeling"]
    M = len(next(iter(labeling)))
    label = next((lab for lab, q in labeling.items() if q == name), None)
    if msg.token_id != token_id or msg.presenter != current["owner"]:
        return Verdict.reject("not-owner")
    if label is None:
        return Verdict.reject("not-presentation-point")

    masks: dict[int, int] = {}
    for b in view:
        if b.kind == "decide":
            masks.update({int(k): int(v) for k, v in b.data["masks"].items()})
    if len(masks) < M:
        return Verdict.reject("undecided")

    unveil = msg.unveil
    if unveil.instance_id != current["instance"] or list(unveil.indices) != list(current["indices"]):
        return Verdict.reject("wrong-segment")
    record = bank.issuer_records.get(unveil.instance_id)
    if record is None or bank.instance_users[unveil.instance_id] != current["owner"]:
        return Verdict.reject("wrong-segment")
    verdict = validate_unveil(record, unveil)
    if not verdict:
        return Verdict.reject(f"commitment-{verdict.reason}", verdict.bit, verdict.error_fraction)
    if _bitstr(masks[k] ^ int(unveil.claimed_x[k - 1]) for k in range(1, M + 1)) != label:
        return Verdict.reject("mask-mismatch")
    if any(t == token_id and causal_precedes(q, ev) for t, q in bank.validations):
        return Verdict.reject("double-spend")
    bank.validations.append((token_id, ev))
    bank.broadcast(name, token_id, "spent", {"point": name})
    return Verdict(True)
