"""
Error types
Every failure raised by the homsol library derives from HomsolError
"""

from typing import Optional


class HomsolError(Exception):
    """Base class for library errors"""


class DimensionMismatch(HomsolError):
    """Operand shapes or variable counts disagree"""


class ParseError(HomsolError):
    """Malformed polynomial, operator or grid text"""

    def __init__(self, message: str, text: str = "", position: Optional[int] = None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
            if text:
                message = f"{message}: {text!r}"
        super().__init__(message)


class NotSymmetric(HomsolError):
    """Matrix is not symmetric within tolerance"""


class NotSPD(HomsolError):
    """Matrix is not symmetric positive definite"""


class EigenNonConvergence(HomsolError):
    """Jacobi sweeps exhausted before the off-diagonal mass vanished"""


class NotHomogeneous(HomsolError):
    """Polynomial mixes total degrees or disagrees with a declared degree"""


class OriginEvaluation(HomsolError):
    """Homogeneous function evaluated at (or numerically at) the origin"""


class StencilOutOfRange(HomsolError):
    """Grid interpolation requested outside the interpolable latitude band"""


class NotUnitVector(HomsolError):
    """Point expected on the unit sphere is not"""


class ResolutionTooLow(HomsolError):
    """Sphere grid below the minimum resolution"""


class GridTooLargeForDense(HomsolError):
    """Dense eigensolve refused for a grid above the size cap"""


class GridMismatch(HomsolError):
    """Profile samples do not live on the operator's grid"""


class ConfigInvalid(HomsolError):
    """Hunt or run configuration violates its invariants"""


class ClassificationError(HomsolError):
    """Theorem pipeline cannot classify the request"""


class DegreeTwoUnsupported(ClassificationError):
    """d = 2 lies outside the classification theorem"""

    def __init__(self, d: float):
        self.d = d
        super().__init__(
            f"d = 2 is not covered (got d = {d}): homogeneous degree 2 solutions "
            "are not classified by the linearization argument"
        )


class NotElliptic(ClassificationError):
    """Linearization at zero is not positive definite"""


class NonC1AtZero(ClassificationError):
    """Difference quotients at the zero matrix disagree between steps"""
