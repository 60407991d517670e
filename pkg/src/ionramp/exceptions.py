"""Exception taxonomy.

Two broad failure classes matter downstream: configuration problems
(bad input, inconsistent parameters) and numerical problems (solver
did not converge, unstable chain, pathological gap window).  The CLI
maps ConfigError to exit code 2 and NumericalError to exit code 3.
"""


class IonRampError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(IonRampError, ValueError):
    """Invalid or inconsistent configuration or input data."""


class NumericalError(IonRampError, RuntimeError):
    """A numerical routine failed to produce a trustworthy result."""


class ConvergenceError(NumericalError):
    """An iterative solver or integrator failed its convergence check."""


class ChainInstabilityError(NumericalError):
    """Transverse confinement too weak: the linear chain is unstable."""


class EigensolverError(NumericalError):
    """The sparse eigensolver failed or returned too few states."""


class GapWindowError(NumericalError):
    """The gap minimum sits on the edge of the scanned field window."""
