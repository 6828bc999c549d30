"""Exception hierarchy shared by all toolbox modules."""


class DelayHinfError(Exception):
    """Base class for all toolbox errors."""


class ParseError(DelayHinfError):
    """Configuration or input file could not be parsed."""


class NonConvergence(DelayHinfError):
    """An iterative solver failed to converge within its budget."""


class ContourThroughZero(DelayHinfError):
    """A contour integrand dropped below tolerance after max refinement."""


class RootCountMismatch(DelayHinfError):
    """Polished roots do not reproduce the argument-principle count."""


class AxisZero(DelayHinfError):
    """A zero was detected on (or too close to) the imaginary axis."""


class AxisRoot(DelayHinfError):
    """A spectral density has a root on the imaginary axis."""


class ImproperDensity(DelayHinfError):
    """Spectral density could not be split into mirror-image halves."""


class AssumptionA1Violation(DelayHinfError):
    """Structural plant assumption A.1 fails (delay ordering / degrees)."""


class AssumptionA2Violation(DelayHinfError):
    """Plant has an imaginary-axis zero or pole within tolerance."""


class DegenerateLeadTerm(DelayHinfError):
    """Leading delay term of a delay system vanishes identically."""


class InnerCheckFailed(DelayHinfError):
    """A factor that must be inner is not unimodular on the axis."""


class NoCrossing(DelayHinfError):
    """Determinant has constant sign over the performance-level bracket."""


class DegenerateNullspace(DelayHinfError):
    """Interpolation system nullspace dimension is not one."""


class L1AtMinusAZero(DelayHinfError):
    """Suboptimal interpolant denominator vanishes at the anchor point."""


class UnsupportedMultiplicity(DelayHinfError):
    """Repeated interpolation points are not supported."""


class InfiniteZeros(DelayHinfError):
    """Zero count keeps growing with the search box (not a finite case)."""


class DegenerateMap(DelayHinfError):
    """Conformal disk map sent a point onto the unit circle."""


class PickNotPSD(DelayHinfError):
    """Pick matrix test and interpolation recursion disagree."""


class CancellationFailure(DelayHinfError):
    """A removable singularity failed its numerical cancellation check."""


class SearchExhausted(DelayHinfError):
    """All schedules were exhausted without a certified design."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class IllPosed(DelayHinfError):
    """Closed loop is numerically ill posed (near-singular return difference)."""
