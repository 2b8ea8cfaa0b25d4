"""Exception types raised by spheretrack."""


class SphereTrackError(Exception):
    """Base class for all library errors."""


class AdmissibilityError(SphereTrackError, ValueError):
    """A point is off the unit sphere or a velocity is not tangent."""


class AntipodalSingularity(SphereTrackError, ValueError):
    """Rodrigues' operator requested for an (almost) antipodal pair."""


class DegeneratePair(SphereTrackError, ValueError):
    """Two sphere points are (almost) linearly dependent."""


class NonTangentControl(SphereTrackError, ValueError):
    """A structural control A_i has a normal component at x_i."""


class RequiresConstantSigma(SphereTrackError, ValueError):
    """The analysis needs a constant inter-agent gain sigma."""


class AntipodalToTarget(SphereTrackError, ValueError):
    """An agent sits (almost) antipodal to the target; weighted functionals blow up."""


class RepeatedRoot(SphereTrackError, ArithmeticError):
    """c_p**2 == 4*c_q: the characteristic roots coincide."""


class NonFiniteState(SphereTrackError, FloatingPointError):
    """The integrator produced a NaN or an infinity."""


class ConstraintBlowup(SphereTrackError, RuntimeError):
    """Agents drifted off the sphere beyond the allowed tolerance."""

    def __init__(self, message, t=None, drift=None):
        super().__init__(message)
        self.t = t
        self.drift = drift


class ConfigError(SphereTrackError, ValueError):
    """Bad key=value configuration input."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
