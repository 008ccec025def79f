"""Exception types raised across the package."""


class NotInterior(ValueError):
    """Point is outside the open domain of a barrier."""


class FactorizationFailure(ArithmeticError):
    """A matrix that must be symmetric positive definite failed to factor."""


class StepTooLarge(RuntimeError):
    """A finite-difference probe could not be kept inside the domain."""


class TuningFailed(RuntimeError):
    """Step-size tuning ended with an acceptance rate outside safe bounds."""


class ConfigError(ValueError):
    """Experiment configuration file is malformed or inconsistent."""


class OracleUnavailable(LookupError):
    """No ground-truth oracle exists for the requested functional."""


class ZeroVariance(ArithmeticError):
    """A diagnostic needed sample variance but the draws are constant."""


class DomainError(ValueError):
    """Argument lies outside the mathematical domain of a function."""
