from .models import DenseBfgs, HierEnumeration, SeqEnumeration
from .services import (
    dense_bfgs_matrix,
    dense_bfgs_push,
    enumerate_hier,
    enumerate_seq,
    exact_subproblem_solve,
    fd_gradient,
    fd_hessian,
    hessian_via_phi,
    phi_hessian,
    seq_features,
    superlinear_ratios,
)

__all__ = [
    "DenseBfgs",
    "HierEnumeration",
    "SeqEnumeration",
    "dense_bfgs_matrix",
    "dense_bfgs_push",
    "enumerate_hier",
    "enumerate_seq",
    "exact_subproblem_solve",
    "fd_gradient",
    "fd_hessian",
    "hessian_via_phi",
    "phi_hessian",
    "seq_features",
    "superlinear_ratios",
]
