"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration and model-validation
problems exit 1, solver failures exit 2, invariant violations exit 3.
"""


class ModelError(ValueError):
    """Invalid game data (population, threat, curve, mixing vector...)."""


class AssumptionViolation(ModelError):
    """A standing modelling assumption does not hold for the given input."""


class InadmissibleMixingError(ModelError):
    """Mixing vector does not satisfy sum_d w_d g_d = 1 for the population."""


class ConfigError(ValueError):
    """Malformed or unknown configuration content."""


class SolverError(RuntimeError):
    """Root finding or minimization did not produce a usable answer."""


class BracketError(SolverError):
    """The fixed-point residual does not change sign on the exposure bracket."""


class BoundaryEquilibriumError(SolverError):
    """Operation needs an interior equilibrium but some investment is at a bound."""


class InvariantViolation(RuntimeError):
    """A property guaranteed by the theory failed numerically."""
