"""Second-order perturbation theory for self-adjoint extensions with Lagrangian boundary conditions.

The model is the finite-difference boundary triplet of ``-d^2/dx^2 + V`` on an
interval with ``C^n``-valued functions; see :mod:`lagpert.discretization`.
"""

import os

# BLAS thread cap; only effective before numpy is first imported
_threads = os.environ.get("LAGPERT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from .discretization import DiscreteTriplet, ExtensionOperator, assemble_operator, build_triplet  # noqa: E402
from .perturbation import (BoundaryFamily, ExpansionResult, expand, general_family, operator_at,  # noqa: E402
                           robin_family, sampled_family)
from .spectral import LambdaGroup, lambda_group  # noqa: E402
from .symplectic import LagrangianPlane, SymplecticSpace, make_plane_from_Z, omega  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "DiscreteTriplet", "ExtensionOperator", "assemble_operator", "build_triplet",
    "BoundaryFamily", "ExpansionResult", "expand", "general_family", "operator_at", "robin_family",
    "sampled_family", "LambdaGroup", "lambda_group", "LagrangianPlane", "SymplecticSpace",
    "make_plane_from_Z", "omega",
]
