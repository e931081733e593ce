"""Numerical tangent-cone estimation and C1-regularity analysis for
definable (semialgebraic) sets."""

from .config import AnalysisConfig
from .subspaces import (Subspace, DirectionSample, orthonormalize, principal_angles,
                        grassmann_distance, project_onto, fit_subspace)
from .polynomials import Polynomial, RationalExpr, Piece, PiecewiseExpr, PiecewiseMap
from .sets import (DefinableSet, PointOnSet, eval_membership, jacobian,
                   is_regular_point, tangent_space_at, project_to_set,
                   set_to_json, set_from_json, load_set)

__version__ = "0.1.0"
