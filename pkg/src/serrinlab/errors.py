"""Exception hierarchy shared by the solvers, verifiers and the CLI."""


class SerrinLabError(Exception):
    """Base class for all package errors."""


class UsageError(SerrinLabError, ValueError):
    """Invalid arguments or parameter combinations."""


class DomainError(SerrinLabError, ValueError):
    """A point or domain lies outside the region where the model is defined."""


class DegenerateMetricError(DomainError):
    """The warp function is not positive where it is evaluated."""


class UnsupportedError(SerrinLabError, ValueError):
    """The requested operation does not apply to this model or dimension."""


class SolverError(SerrinLabError, RuntimeError):
    """A numerical solver failed to produce a solution."""


class ResonanceError(SolverError):
    """The homogeneous problem has (numerically) a nontrivial solution."""


class PositivityError(SolverError):
    """The solution cannot be positive on the requested domain."""


class PoleError(SerrinLabError, ValueError):
    """An integrand has a pole on the integration domain (e.g. 1/H with H = 0)."""
