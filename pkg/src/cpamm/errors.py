"""Exceptions raised on invalid transactions, traces and generator configs."""


class AmmError(Exception):
    """Base class for every model error."""


class InsufficientBalance(AmmError):
    """The account does not own enough of the token (``enough``)."""


class UninitializedAmm(AmmError):
    """The pool for the token pair has not been created (``exi``)."""


class ReserveDrained(AmmError):
    """The operation would leave a pool reserve at zero (``nodrain``)."""


class AlreadyInitialized(AmmError):
    pass


class SameToken(AmmError):
    pass


class InvalidInitialState(AmmError):
    pass


class StepInvalid(AmmError):
    """A trace step failed validation; carries its index and the cause."""

    def __init__(self, index: int, cause: AmmError):
        super().__init__(f"step {index}: {type(cause).__name__}: {cause}")
        self.index = index
        self.cause = cause


class GenerationStalled(AmmError):
    """No valid transaction could be found within the retry budget."""
