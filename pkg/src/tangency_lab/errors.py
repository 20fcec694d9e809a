"""Exception types shared across the laboratory modules."""


class TangencyLabError(Exception):
    """Base class for all laboratory errors."""


class DegenerateVector(TangencyLabError):
    """A vector (or matrix row) has norm below 1e-12; its angle is undefined."""


class NearParallelRows(TangencyLabError):
    """Two distinct rows are antiparallel within 1e-9; the angle gradient is singular."""


class DimensionMismatch(TangencyLabError):
    """Operand dimensions are incompatible with the chart or matrix size."""


class InvalidPartition(TangencyLabError):
    """Block sizes do not form a valid ordered partition of d."""


class UnsupportedLabel(TangencyLabError):
    """No representative construction exists for the requested component label."""


class UnsupportedFamily(TangencyLabError):
    """Unknown family identifier, or the family cannot be built at this d."""


class NewtonDiverged(TangencyLabError):
    """Newton residual failed to decrease for five consecutive iterations."""


class SingularJacobian(TangencyLabError):
    """Newton Jacobian condition number exceeded the solvable threshold."""


class AmbiguousType(TangencyLabError):
    """Big-block diagonal too close to zero to call the point type I or II."""


class RepresentativeDegenerate(TangencyLabError):
    """A representative matrix has Frobenius norm below 1e-10."""


class MultiplicityMismatch(TangencyLabError):
    """Assembled spectrum multiplicities do not sum to d^2."""


class TooLarge(TangencyLabError):
    """Dense Hessian requested above the supported size (d > 12)."""


class BadDirection(TangencyLabError):
    """Arc seed direction is outside the chart span or not a Hessian eigenvector."""


class NoConvergence(TangencyLabError):
    """No sphere-extremization start reached stationarity within the iteration cap."""


class InsufficientSamples(TangencyLabError):
    """An arc record holds too few samples for the requested computation."""


class CoincidentPoint(TangencyLabError):
    """Tangency residual is undefined at the center itself."""
