"""Exception types shared across the package."""


class CliffdynError(Exception):
    """Base class for all library errors."""


class CapacityError(CliffdynError):
    """An algebra context is too small (or too large) for the request."""


class ContextError(CliffdynError):
    """Operands belong to different algebra contexts."""


class ValidationError(CliffdynError, ValueError):
    """Input fails a structural precondition (Hermiticity, nullness, unitarity...)."""


class DimensionError(ValidationError):
    pass


class DomainError(CliffdynError, ValueError):
    """A root or power argument left its admissible domain."""


class EinbeinError(DomainError):
    pass


class TurningPointError(CliffdynError):
    """mu changes sign inside the requested window."""

    def __init__(self, interval, message=None):
        self.interval = tuple(interval)
        super().__init__(message or f"turning point inside window, bracketed by {self.interval}")


class DegenerateError(CliffdynError):
    pass


class NotGaugeableError(CliffdynError):
    """Commutator preconditions for joint diagonalization are violated."""

    def __init__(self, residual, message=None):
        self.residual = float(residual)
        super().__init__(message or f"family does not commute (max commutator norm {self.residual:.3e})")


class DegenerateMetricError(CliffdynError):
    def __init__(self, nodes, message=None):
        self.nodes = list(nodes)
        super().__init__(message or f"degenerate worldsheet metric at {len(self.nodes)} node(s)")


class FrameError(CliffdynError):
    pass


class ConfigError(CliffdynError):
    """Invalid run configuration; carries field-level diagnostics."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
