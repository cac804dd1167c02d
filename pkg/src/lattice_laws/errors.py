"""Exception types raised across the package."""


class LatticeLawsError(Exception):
    """Base class for all package errors."""


class SingularMatrix(LatticeLawsError, ArithmeticError):
    pass


class SeriesDivergence(LatticeLawsError, ArithmeticError):
    """Trace-log series requested outside its disc of convergence."""


class LogDetMismatch(LatticeLawsError, ArithmeticError):
    """The pivot and series routes to a log-determinant disagree."""


class OutOfBall(LatticeLawsError, ValueError):
    """State lies outside the small-data ball where the identities are proven."""


class OutOfBallWarning(UserWarning):
    pass


class DegenerateGreen(LatticeLawsError, ArithmeticError):
    """A Green's function entry used as a denominator is too close to zero."""


class DomainError(LatticeLawsError, ValueError):
    pass


class StepUnderflow(LatticeLawsError, RuntimeError):
    pass


class BallUnreachable(LatticeLawsError, ValueError):
    pass


class ConfigError(LatticeLawsError, ValueError):
    pass
