"""Exception types raised across the package."""


class PoissonReduceError(Exception):
    """Base class for all package errors."""


class NotSkew(PoissonReduceError, ValueError):
    pass


class NotTangent(PoissonReduceError, ValueError):
    pass


class NotUnit(PoissonReduceError, ValueError):
    pass


class Degenerate(PoissonReduceError, ValueError):
    pass


class ConstraintViolated(PoissonReduceError, ValueError):
    pass


class SingularMetric(PoissonReduceError, ArithmeticError):
    pass


class TurningRegion(PoissonReduceError, ArithmeticError):
    """The query reached the boundary ``V >= h`` of the region of possible motion."""


class NotUnitSpeed(PoissonReduceError, ValueError):
    pass


class StepRejected(PoissonReduceError, RuntimeError):
    """Adaptive step size fell below the minimum step."""


class HookAbort(PoissonReduceError, RuntimeError):
    """Raised by a step hook to stop an integration early."""


class InvariantBlown(PoissonReduceError, RuntimeError):
    """A constraint residual exceeded the hard limit during a simulation."""


class OutOfRange(PoissonReduceError, ValueError):
    pass


class ConfigError(PoissonReduceError, ValueError):
    pass


class SchemaError(PoissonReduceError, ValueError):
    pass
