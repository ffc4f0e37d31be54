"""Diagonal AH algebras on finite metric nets: corners, covering, stable rank one."""
from .errors import DiagAHError
from .metric_space import FiniteMetricSpace, Subset, ScalarFunction
from .matrix_function import MatrixFunction
from .homotopy import Permutation
from .diagonal_hom import PointMap, DiagonalHom, AHSystem, Summand, BondingMap

__all__ = ["DiagAHError", "FiniteMetricSpace", "Subset", "ScalarFunction", "MatrixFunction",
           "Permutation", "PointMap", "DiagonalHom", "AHSystem", "Summand", "BondingMap"]
