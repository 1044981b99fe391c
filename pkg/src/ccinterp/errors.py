"""Exception hierarchy shared across the package.

Numerical failures (non-convergence, gap collapse, ...) derive from
``NumericalFailure`` so the CLI can map them to a single exit code.
"""


class CcInterpError(Exception):
    """Base class for all package errors."""


class InputError(CcInterpError):
    """Malformed user input (files, configs, preconditions)."""


class NumericalFailure(CcInterpError):
    """A numerical procedure failed to produce an acceptable result."""


class DegenerateGeometry(InputError):
    pass


class BasisParseError(InputError):
    pass


class LinearDependence(NumericalFailure):
    def __init__(self, min_eigenvalue: float, threshold: float = 1e-10):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"overlap matrix is numerically singular: smallest eigenvalue "
            f"{min_eigenvalue:.3e} < {threshold:.0e}"
        )


class ScfNotConverged(NumericalFailure):
    def __init__(self, iterations: int, grad_norm: float):
        self.iterations = iterations
        self.grad_norm = grad_norm
        super().__init__(
            f"SCF not converged after {iterations} iterations "
            f"(gradient norm {grad_norm:.3e})"
        )


class GapCollapse(NumericalFailure):
    def __init__(self, gap: float, gap_min: float):
        self.gap = gap
        self.gap_min = gap_min
        super().__init__(f"HOMO-LUMO gap {gap:.3e} below minimum {gap_min:.1e}")


class DegenerateDenominator(NumericalFailure):
    pass


class CcNotConverged(NumericalFailure):
    def __init__(self, iterations: int, residual_norm: float):
        self.iterations = iterations
        self.residual_norm = residual_norm
        super().__init__(
            f"CCSD not converged after {iterations} iterations "
            f"(residual norm {residual_norm:.3e})"
        )


class TooLarge(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class ZeroReference(NumericalFailure):
    pass


class NonpositiveError(InputError):
    pass


class NoCrossingDetected(NumericalFailure):
    pass


class NodeFailure(NumericalFailure):
    """Wraps a failure of the offline stage at a specific interpolation node."""

    def __init__(self, node_index: int, mu: float, cause: Exception):
        self.node_index = node_index
        self.mu = mu
        self.cause = cause
        super().__init__(f"node {node_index} (mu={mu:.12g}): {cause}")


# snapshot-store
class SnapshotError(CcInterpError):
    pass


class IoFailure(SnapshotError):
    pass


class CorruptContainer(SnapshotError):
    pass


class InvariantViolation(SnapshotError):
    def __init__(self, invariant: str, residual: float):
        self.invariant = invariant
        self.residual = residual
        super().__init__(f"invariant '{invariant}' violated (residual {residual:.3e})")


class VersionMismatch(SnapshotError):
    pass


class InconsistentSet(SnapshotError):
    def __init__(self, message: str, pair: tuple = ()):
        self.pair = pair
        super().__init__(message)
