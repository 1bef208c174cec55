"""Exception types raised across krflab."""


class KrflabError(Exception):
    """Base class for all domain errors."""


class DimensionTooSmall(KrflabError, ValueError):
    pass


class SymmetryViolation(KrflabError, ValueError):
    """A curvature array breaks a Kähler symmetry.

    Attributes carry the failing identity, the worst index quadruple and the
    size of the violation.
    """

    def __init__(self, identity, index, magnitude):
        self.identity = identity
        self.index = tuple(int(i) for i in index)
        self.magnitude = float(magnitude)
        super().__init__(
            f"{identity} symmetry violated at {self.index}: |defect| = {self.magnitude:.3e}"
        )


class ZeroVector(KrflabError, ValueError):
    pass


class NotOrthogonal(KrflabError, ValueError):
    def __init__(self, inner):
        self.inner = float(inner)
        super().__init__(f"vectors are not orthogonal: |<X, Y>| = {self.inner:.3e}")


class NonConvergence(KrflabError, RuntimeError):
    """Optimizer ran out of iterations; ``best`` holds the best value found."""

    def __init__(self, message, best=None, certificate=None):
        self.best = best
        self.certificate = certificate
        super().__init__(message)


class SamplingBudgetExhausted(KrflabError, RuntimeError):
    pass


class NegativeTime(KrflabError, ValueError):
    pass


class InvalidMu0(KrflabError, ValueError):
    pass


class ParamOutOfRange(KrflabError, ValueError):
    pass


class StepUnderflow(KrflabError, RuntimeError):
    pass


class SymmetryDrift(KrflabError, RuntimeError):
    pass


class NotTight(KrflabError, ValueError):
    pass


class DiagonalizationFailure(KrflabError, RuntimeError):
    pass


class NotPSD(KrflabError, ValueError):
    pass


class NotAtMinimum(KrflabError, ValueError):
    pass


class MetricDegenerate(KrflabError, RuntimeError):
    """The evolving potential left the Kähler cone of the ansatz."""

    def __init__(self, message, node=None, time=None):
        self.node = node
        self.time = time
        super().__init__(message)


class CFLFailure(KrflabError, RuntimeError):
    pass


class MalformedCSV(KrflabError, ValueError):
    pass


class ConfigError(KrflabError, ValueError):
    pass
