"""
Error hierarchy shared by the services and the management commands.

Services raise these; commands map ContractViolation to exit code 2 and
everything else to exit code 1.
"""


class DynamicsError(Exception):
    """Base class for every error raised by the dynamics services."""


class ContractViolation(DynamicsError, ValueError):
    """The caller broke a precondition of the operation."""


class PolynomialSyntaxError(ContractViolation):
    """Polynomial text could not be parsed."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class PrecisionError(DynamicsError):
    """Working precision too low to separate roots or meet a residual bound."""

    def __init__(self, message, required_bits):
        super().__init__(f"{message} (estimated precision needed: {required_bits} bits)")
        self.required_bits = required_bits


class QuadratureError(DynamicsError):
    """Quadrature doubling check failed."""


class ConvergenceError(DynamicsError):
    """An iteration, search or cutoff cap was reached without success."""
