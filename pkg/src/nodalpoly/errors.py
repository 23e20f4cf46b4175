"""Exception hierarchy shared by the geometry, solver and analysis modules."""


class NodalPolyError(Exception):
    """Base class for all package errors."""


class GeometryError(NodalPolyError):
    pass


class NonSimpleBoundary(GeometryError):
    pass


class DegenerateFacet(GeometryError):
    pass


class OpenBoundary(GeometryError):
    pass


class PointOutsideDomain(GeometryError):
    pass


class ChartMiss(GeometryError):
    pass


class NonPositiveRadius(GeometryError):
    pass


class RadiusTooLarge(GeometryError):
    pass


class CoverageGap(NodalPolyError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class CertificateFailure(NodalPolyError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class MeshFailure(NodalPolyError):
    pass


class SolverDivergence(NodalPolyError):
    pass


class NoiseFloor(NodalPolyError):
    pass


class HypothesisFailure(NodalPolyError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class FlatnessViolation(NodalPolyError):
    pass


class ResolutionGuard(NodalPolyError):
    pass
