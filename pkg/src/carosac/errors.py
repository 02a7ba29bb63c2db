"""Exception types shared across the toolkit."""


class CarosacError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CarosacError):
    """Configuration could not be used (usage-level failure)."""


class ParseError(ConfigError):
    pass


class InvalidRig(ConfigError):
    """A rig configuration violates one of the geometry invariants."""


class NonConvergence(CarosacError):
    """Forward kinematics could not reach the residual tolerance."""


class NumericalDivergence(CarosacError):
    """The cable simulation produced NaN or exploding velocities."""


class InvalidInitialPosition(CarosacError):
    pass


class InsufficientBuffer(CarosacError):
    pass


class InfeasibleSpeed(CarosacError):
    pass


class InvalidCount(CarosacError):
    pass


class EmptyRecord(CarosacError):
    pass


class MalformedCsv(CarosacError):
    pass


class NonMonotoneTime(MalformedCsv):
    pass
