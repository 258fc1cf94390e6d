"""Exception types shared across the package."""


class FlatPathError(Exception):
    """Base class for all flatpath errors."""


class SurfaceError(FlatPathError):
    """Polygon or gluing data does not define a translation surface."""


class NonParallelEdges(SurfaceError):
    """Glued edges are not antiparallel (outward normals must oppose)."""


class LengthMismatch(SurfaceError):
    """Glued edges have different lengths."""


class UnpairedEdge(SurfaceError):
    """An edge is missing from the gluing list, repeated, or glued to itself."""


class AngleNotMultipleOf2Pi(SurfaceError):
    """A cone class has total angle away from every positive multiple of 2*pi."""


class DegenerateMatrix(FlatPathError):
    """Matrix determinant too far from 1 to act on a unit-area surface."""


class NotFoundWithinBound(FlatPathError):
    """No saddle connection was found within the requested length bound."""


class InvalidEpsilon(FlatPathError):
    """Obstacle radius incompatible with the surface geometry."""


class SingularImpact(FlatPathError):
    """A traced ray passed within corner tolerance of a cone point."""


class IncompleteDecomposition(FlatPathError):
    """The vertical flow does not return the whole transversal cleanly.

    Raised when an orbit exceeds the height bound, a degenerate landing is
    detected, or the rectangles fail to cover the surface (a vertical
    cylinder misses the transversal).  Perturb the direction or the surface.
    """

    def __init__(self, message, covered_area=None):
        super().__init__(message)
        self.covered_area = covered_area


class GridMismatch(FlatPathError):
    """Two empirical distributions were compared on different t-grids."""


class SpecFileError(FlatPathError):
    """Surface spec file could not be parsed into polygons and gluings."""
