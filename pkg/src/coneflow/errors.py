"""Exception hierarchy for coneflow."""


class ConeFlowError(Exception):
    """Base class for every error raised by the package."""


class ZeroVelocity(ConeFlowError, ValueError):
    pass


class ZeroScale(ConeFlowError, ValueError):
    pass


class RadialState(ConeFlowError, ValueError):
    """The state lies on a generatrix; the requested quantity is undefined."""


class NotNormalized(ConeFlowError, ValueError):
    pass


class ZeroVector(ConeFlowError, ValueError):
    """The integral vector is zero: it names the whole radial family."""


class DomainError(ConeFlowError, ValueError):
    pass


class RankDeficient(ConeFlowError, ArithmeticError):
    pass


class NotOnCone(ConeFlowError, ValueError):
    pass


class NoConvergence(ConeFlowError, ArithmeticError):
    pass


class IntegrationError(ConeFlowError, RuntimeError):
    """Base class for failures of the numerical flow."""


class StepLimit(IntegrationError):
    pass


class VertexApproach(IntegrationError):
    pass


class ConfigError(ConeFlowError, ValueError):
    pass
