"""Exception hierarchy.

RangeError / ConfigError are argument problems (CLI maps them to usage
errors, exit 2).  ResourceError / ContourError / SolverError are runtime
failures of an otherwise valid request.
"""


class DivmeanError(Exception):
    pass


class RangeError(DivmeanError, ValueError):
    """Argument outside the supported domain or table range."""


class PoleError(RangeError):
    """Evaluation requested exactly at a pole."""


class ConfigError(DivmeanError, ValueError):
    """Malformed rule, mapping, or shape argument."""


class ResourceError(DivmeanError, RuntimeError):
    """Request exceeds a configured size budget."""


class ContourError(DivmeanError, RuntimeError):
    """Winding-number contour too close to a zero or pole."""


class SolverError(DivmeanError, RuntimeError):
    """Root search failed (no bracket sign change, Newton divergence)."""
