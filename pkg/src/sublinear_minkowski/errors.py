"""Exception hierarchy shared by all modules."""


class MinkowskiError(Exception):
    """Base class for every error raised by this package."""


class InvalidBody(MinkowskiError, ValueError):
    """Vertex data does not describe a strictly convex counter-clockwise polygon."""


class EmptyInterior(MinkowskiError, ValueError):
    pass


class Unbounded(MinkowskiError, ValueError):
    pass


class ZeroMassMeasure(MinkowskiError, ValueError):
    pass


class NonpositiveScale(MinkowskiError, ValueError):
    pass


class GridMismatch(MinkowskiError, ValueError):
    pass


class MeshFailure(MinkowskiError, RuntimeError):
    pass


class NonConvergence(MinkowskiError, RuntimeError):
    """An iterative procedure exhausted its budget without meeting its tolerance."""


class NonPositivity(MinkowskiError, RuntimeError):
    """The discrete solution lost positivity, usually a mesh-quality problem."""


class BracketFailure(MinkowskiError, RuntimeError):
    pass


class CentroidViolation(MinkowskiError, ValueError):
    """The target measure has a nonzero first moment and cannot be realized."""


class DegenerateMeasure(MinkowskiError, ValueError):
    """The target measure is concentrated on a single antipodal pair."""


class CollapseDetected(MinkowskiError, RuntimeError):
    pass
