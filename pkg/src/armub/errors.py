"""Exception hierarchy shared by all modules.

Exit-code mapping for the CLI lives in ``armub.cli``; library code raises
these types and never calls ``sys.exit``.
"""


class ArmubError(Exception):
    """Base class for all library errors."""


class DomainError(ArmubError, ValueError):
    """Arguments outside the mathematical domain of an operation."""


class StructuralError(ArmubError, ValueError):
    """Structurally incompatible operands (e.g. mixed radicands)."""


class ExactArithmeticError(ArmubError, ZeroDivisionError):
    """Division by zero / vanishing denominator in exact arithmetic."""


class NotConstructibleError(ArmubError, RuntimeError):
    """No generator factorization reaches the requested Hadamard order.

    Carries the orders that were attempted so callers can report honestly.
    """

    def __init__(self, target, attempted):
        self.target = target
        self.attempted = sorted(attempted)
        super().__init__(
            f"no Hadamard matrix of order {target} reachable; "
            f"attempted generator orders {self.attempted}"
        )


class ResourceLimitError(ArmubError, RuntimeError):
    """A configured size/enumeration cap was exceeded.

    ``partial_best`` holds the best result found before the cap was hit
    (may be None).
    """

    def __init__(self, message, partial_best=None):
        self.partial_best = partial_best
        super().__init__(message)


class CertificationError(ArmubError, RuntimeError):
    """An exact re-verification failed; carries the located violation."""


class ParseError(ArmubError, ValueError):
    """A persisted artifact could not be decoded."""
