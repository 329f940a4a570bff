"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: user/config mistakes (ParameterError,
ValidationError, ContractError, missing files) exit 2; integrity failures
(FormatError, BaseMismatchError) exit 3.
"""


class SuperSubError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(SuperSubError):
    """Shape mismatch between operands; carries both shapes."""

    def __init__(self, message: str, left_shape=None, right_shape=None):
        super().__init__(message)
        self.left_shape = left_shape
        self.right_shape = right_shape


class ParameterError(SuperSubError):
    """Invalid argument value (negative sigma, zero epsilon, bad spec...)."""


class ValidationError(SuperSubError):
    """Structural violation in a manifest or config document."""


class ContractError(SuperSubError):
    """Caller broke an API precondition (mismatched cache, wrong head width...)."""


class FormatError(SuperSubError):
    """Corrupt or truncated container file; offset points at the failing byte."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DeltaModeError(SuperSubError):
    """Requested delta mode is incompatible with the given networks."""


class BaseMismatchError(SuperSubError):
    """Delta fingerprint does not match the base network it is applied to."""
