"""Exception hierarchy shared by all eigentrack modules."""


class EigentrackError(Exception):
    """Base class; ``code`` is the short name reported by the CLI."""

    @property
    def code(self):
        return type(self).__name__


class NumericalError(EigentrackError):
    pass


class ConfigError(EigentrackError):
    pass


class NotHermitian(NumericalError):
    pass


class NotNormal(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class RankDeficient(NumericalError):
    def __init__(self, index, message=None, t=None):
        self.index = index
        self.t = t
        msg = message or f"vector {index} is numerically dependent on its predecessors"
        if t is not None:
            msg += f" (t={t!r})"
        super().__init__(msg)


class Singular(NumericalError):
    def __init__(self, message="matrix is numerically singular", pivot_index=None):
        self.pivot_index = pivot_index
        super().__init__(message)


class SpectrumHit(NumericalError):
    def __init__(self, z, message=None):
        self.z = z
        super().__init__(message or f"z={z!r} lies (numerically) in the spectrum")


class EigenvalueOnContour(NumericalError):
    def __init__(self, t, eigenvalue, distance):
        self.t = t
        self.eigenvalue = eigenvalue
        self.distance = distance
        super().__init__(
            f"eigenvalue {eigenvalue!r} at t={t!r} is {distance:.3g} from the contour"
        )


class QuadratureStall(NumericalError):
    pass


class ContourBreach(NumericalError):
    def __init__(self, interval, message=None):
        self.interval = tuple(interval)
        super().__init__(
            message or f"contour stopped isolating the cluster in {self.interval!r}"
        )


class NotInvariant(NumericalError):
    pass


class LengthMismatch(EigentrackError, ValueError):
    pass


class BoundViolated(NumericalError):
    pass


class OverlappingSegments(EigentrackError, ValueError):
    pass


class StructureViolation(NumericalError):
    def __init__(self, t, defect, structure):
        self.t = t
        self.defect = defect
        self.structure = structure
        super().__init__(f"family is not {structure} at t={t!r} (defect {defect:.3g})")


class ClusterMismatch(NumericalError):
    def __init__(self, interval, message=None):
        self.interval = tuple(interval)
        super().__init__(message or f"eigenspace blocks do not match across {self.interval!r}")


class NotHyperbolic(NumericalError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"polynomial has non-real roots at t={t!r}")


class ExponentUnresolved(NumericalError):
    pass
