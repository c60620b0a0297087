"""Exception types raised by the solver pipeline."""


class TfstarError(Exception):
    """Base class for all package errors."""


class InadmissibleConstants(TfstarError):
    """Constant set violates the coefficient ordering required by the model."""


class NonPositiveInput(TfstarError):
    """A quantity that must be strictly positive was not."""


class NumericalBlowup(TfstarError):
    """Integrator step size underflowed or the step budget was exhausted."""


class InvalidHandoff(TfstarError):
    """Atmosphere hand-off values are unusable (non-positive density or radius)."""


class BracketFailure(TfstarError):
    """Critical-slope search could not bracket both a compact and an unbounded outcome."""


class NoRootInBracket(TfstarError):
    """Proportionality equation has no sign change on the expected bracket."""


class QuadratureNotConverged(TfstarError):
    """Refinement estimate of a radial quadrature exceeded the requested tolerance."""


class EnvelopeFitFailure(TfstarError):
    """u * r^4 is not approximately constant over the fitted tail window."""


class Inadmissible(TfstarError):
    """Central densities fail the sign conditions at the origin."""


class InadmissibleRatio(TfstarError):
    """Requested N_e/N_p lies outside the admissibility window."""


class RatioNotBracketed(TfstarError):
    """The count-ratio sweep at alpha=1 did not span the requested target."""


class NonIntegrable(TfstarError):
    """Atmosphere outcome is unbounded; the configuration carries no finite counts."""
