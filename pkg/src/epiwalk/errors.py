"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ValidationError -> 1, IOError -> 2,
ConvergenceError / ProtocolError -> 3.
"""


class EpiwalkError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(EpiwalkError):
    """Bad parameters, malformed input, or violated preconditions."""


class EdgeListError(ValidationError):
    """Malformed edge-list content. Carries the offending line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyGraphError(ValidationError):
    """An operation that needs at least one node or edge got none."""


class ConvergenceError(EpiwalkError):
    """An iterative numeric routine hit its cap. Carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ProtocolError(EpiwalkError):
    """A multi-party protocol aborted or was asked to violate its contract."""


class HeadroomError(ProtocolError):
    """Fixed-point scale would overflow the plaintext modulus."""
