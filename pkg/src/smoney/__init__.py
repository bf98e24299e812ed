"""Flexible S-money tokens over simulated BB84 bit-string coordination."""

from .bb84 import Basis, ChannelModel, PulseDescription, QubitState
from .coordination import CoordinationParams, Verdict
from .errors import (
    AuthenticationError,
    CausalityError,
    InvalidInputError,
    PoolExhaustedError,
    ProtocolError,
    SMoneyError,
)
from .kernels import BACKEND
from .spacetime import Event, NetworkLayout, causal_precedes
from .tokens import Bank, PresentationSet, Token, UserIdentity

__version__ = "0.1.0"
