"""Algebraic multigrid preconditioned Krylov solvers for sparse systems."""
from .backend import Backend, Builtin, default_backend
from .coarsening import CoarseningParams
from .config import ParamTree, build_runtime_solver, make_solver, parse_config
from .hierarchy import AMG, AMGParams, apply_preconditioner, hierarchy_report, setup
from .krylov import SolveResult, SolverParams, bicgstab, cg
from .poisson import generate_poisson
from .relaxation import RelaxParams, RelaxType
from .sparse import CSRMatrix, csr_from_triplets, galerkin_product, spgemm, transpose

__version__ = "0.1.0"

__all__ = [
    "AMG", "AMGParams", "Backend", "Builtin", "CSRMatrix", "CoarseningParams",
    "ParamTree", "RelaxParams", "RelaxType", "SolveResult", "SolverParams",
    "apply_preconditioner", "bicgstab", "build_runtime_solver", "cg",
    "csr_from_triplets", "default_backend", "galerkin_product", "generate_poisson",
    "hierarchy_report", "make_solver", "parse_config", "setup", "spgemm",
    "transpose",
]
