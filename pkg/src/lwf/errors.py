"""Exception hierarchy shared by all lwf modules.

Every error class carries an ``exit_code`` so the command line front end can
map error classes to distinct non-zero process exit codes.
"""


class LwfError(Exception):
    """Base class for all lwf errors."""

    exit_code = 1


class ConfigError(LwfError):
    """A configuration file could not be parsed or failed validation."""

    exit_code = 2


class ParameterError(LwfError):
    """An argument is outside its admissible range."""

    exit_code = 3


class InvalidGamma(ParameterError):
    """A tail-integrability exponent gamma must be positive."""

    exit_code = 3


class NonIntegrable(LwfError):
    """Adaptive quadrature failed to converge at the configured tolerance."""

    exit_code = 4


class InfiniteRate(LwfError):
    """Event-rate truncation left an infinite jump rate."""

    exit_code = 5


class WrongRegime(LwfError):
    """An estimator was invoked outside the parameter regime it requires."""

    exit_code = 6


class HorizonExceeded(LwfError):
    """A stopping time was not reached within the allowed horizon."""

    exit_code = 7


class DomainError(LwfError):
    """A transform was evaluated outside its finiteness region."""

    exit_code = 8


class InternalConsistencyError(LwfError):
    """An invariant that should hold by construction was violated."""

    exit_code = 9


class NegativeDiscriminant(InternalConsistencyError):
    """Impossible for valid inputs of the environmental inverse map."""

    exit_code = 9
