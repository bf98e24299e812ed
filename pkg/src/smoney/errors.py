"""Exception hierarchy shared by every protocol layer."""


class SMoneyError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(SMoneyError, ValueError):
    """Arguments violate a documented precondition (shape, range, dimension)."""


class ProtocolError(SMoneyError):
    """An action is not allowed in the current protocol state."""


class CausalityError(ProtocolError):
    """An action's spacetime point breaks a required causal ordering."""


class AlreadyDecidedError(ProtocolError):
    pass


class NotOwnerError(ProtocolError):
    pass


class InvalidLabelError(ProtocolError):
    """The chosen presentation label is not in the agreed presentation set."""


class PoolExhaustedError(ProtocolError):
    """The user has fewer unallocated precommitted bits than the token needs."""


class UnknownInstanceError(ProtocolError):
    pass


class UnknownTokenError(ProtocolError):
    pass


class AuthenticationError(SMoneyError):
    """A signed message failed verification."""


class ScenarioParseError(SMoneyError, ValueError):
    """A scenario file is malformed. ``where`` locates the offending field."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
