"""Exception hierarchy shared across the engine."""


class TepdynError(Exception):
    """Base class for all engine errors."""


class DimensionMismatch(TepdynError):
    """State dimensions do not match the field or model arity."""


class InvalidParameter(TepdynError, ValueError):
    """A physical parameter is outside its admissible range."""


class SingularDissipation(TepdynError):
    """The dissipative-force construction is ill-posed at this state:
    the dissipation is non-negligible but the normalizing denominator
    vanishes."""


class DegenerateMass(TepdynError):
    """The rate-Hessian of the kinetic energy is singular or indefinite."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class DensityCollapse(TepdynError):
    """The strain-dependent density reached zero or below at some node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class StepSizeUnderflow(TepdynError):
    """Adaptive step control drove the step below its minimum: the
    problem is too stiff for the explicit integrator."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ConfigError(TepdynError):
    """A run configuration failed validation."""
