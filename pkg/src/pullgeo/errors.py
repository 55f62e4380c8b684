"""Exception types raised by the geometry and learning layers."""


class GeometryError(Exception):
    """Base class for all pullgeo errors."""


class AntipodalPoints(GeometryError):
    """Logarithmic map requested between (numerically) antipodal sphere points."""


class ZeroDirection(GeometryError):
    """A curvature spectrum was requested along a (numerically) zero vector."""


class KappaTooLarge(GeometryError):
    """A beta function was evaluated at kappa >= pi^2 where it is undefined."""


class SingularJacobian(GeometryError):
    """The pushforward at a point is numerically rank deficient."""


class PoleExcluded(GeometryError):
    """Stereographic chart evaluated at (a neighbourhood of) the excluded pole."""


class ModelNotEuclidean(GeometryError):
    """Closed-form Euclidean barycentre requested on a curved model space."""


class MaxItersExceeded(GeometryError):
    """Barycentre gradient descent did not reach the relative tolerance."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class RankDeficient(GeometryError):
    """Truncation rank exceeds the numerical rank of the coefficient matrix."""


class SingularNormalEquations(GeometryError):
    """Curvature-corrected least squares remained singular after regularisation."""


class DependentInput(GeometryError):
    """Gram-Schmidt received linearly dependent vectors."""


class DisconnectedGraph(GeometryError):
    """The k-nearest-neighbour graph used for geodesic targets is disconnected."""

    def __init__(self, message, n_components=None):
        super().__init__(message)
        self.n_components = n_components


class EmptyNeighborhood(GeometryError):
    """Local PCA found no neighbours within the requested radius."""


class FixedPointDivergence(GeometryError):
    """Residual block inversion did not converge; the Lipschitz bound is broken."""


class DegenerateCurve(GeometryError):
    """Ordered data has (numerically) zero total chord length."""
