"""Runtime configuration.

Solvers can be composed at runtime from a :class:`ParamTree`, a flat map
from dotted paths to scalar leaves::

    prm = ParamTree()
    prm.put("solver.type", "bicgstab")
    prm.put("solver.tol", 1e-6)
    prm.put("precond.coarsening.type", "smoothed_aggregation")
    prm.put("precond.relax.type", "spai0")
    solve = build_runtime_solver(A, prm)
    u, result = solve(f)

The text form is one ``path = value`` per line with ``#`` comments.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .backend import Backend, default_backend
from .coarsening import CoarseningParams
from .hierarchy import AMG, AMGParams
from .krylov import BiCGStab, CG, SolveResult, SolverParams
from .relaxation import RelaxParams, RelaxType
from .sparse import CSRMatrix

__all__ = [
    "ConfigError",
    "KEYS",
    "ParamTree",
    "RuntimeSolver",
    "amg_params_from_tree",
    "build_runtime_solver",
    "make_solver",
    "parse_config",
    "registered_keys",
    "solver_params_from_tree",
]

Leaf = str | int | float | bool

_PATH = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")


class ConfigError(ValueError):
    pass


class ParamTree:
    """Hierarchical parameter store keyed by dotted paths."""

    def __init__(self, items: dict | None = None):
        self._leaves: dict[str, Leaf] = {}
        for k, v in (items or {}).items():
            self.put(k, v)

    def put(self, path: str, value: Leaf) -> "ParamTree":
        if not isinstance(path, str) or not _PATH.match(path):
            raise ConfigError(f"invalid parameter path {path!r}")
        if isinstance(value, np.generic):
            value = value.item()
        if not isinstance(value, (str, int, float, bool)):
            raise ConfigError(f"{path}: unsupported value type {type(value).__name__}")
        self._leaves[path] = value
        return self

    def get(self, path: str, default: Any = None, as_type: type | None = None):
        """Leaf at ``path`` or ``default``. With ``as_type`` given, the stored
        leaf must be of that type (integers are accepted where reals are
        requested)."""
        if path not in self._leaves:
            return default
        value = self._leaves[path]
        if as_type is None:
            return value
        ok = isinstance(value, as_type) and not (
            as_type is int and isinstance(value, bool))
        if as_type is float and isinstance(value, int) and not isinstance(value, bool):
            value, ok = float(value), True
        if not ok:
            raise ConfigError(f"{path}: expected {as_type.__name__}, "
                              f"found {type(value).__name__} {value!r}")
        return value

    def __contains__(self, path):
        return path in self._leaves

    def __len__(self):
        return len(self._leaves)

    def __eq__(self, other):
        return isinstance(other, ParamTree) and self._leaves == other._leaves

    def __repr__(self):
        return f"ParamTree({self._leaves!r})"

    def keys(self):
        return self._leaves.keys()

    def items(self):
        return self._leaves.items()

    def copy(self) -> "ParamTree":
        return ParamTree(dict(self._leaves))

    def update(self, other: "ParamTree") -> "ParamTree":
        for k, v in other.items():
            self.put(k, v)
        return self

    def subtree(self, prefix: str) -> dict:
        head = prefix + "."
        return {k[len(head):]: v for k, v in self._leaves.items() if k.startswith(head)}

    def dumps(self) -> str:
        """Text form accepted by :func:`parse_config`."""
        return "".join(f"{k} = {_format_leaf(v)}\n" for k, v in self._leaves.items())


def _format_leaf(v: Leaf) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        text = repr(v)
        return text if any(c in text for c in ".eEn") else text + ".0"
    return str(v)


_INT = re.compile(r"^[+-]?\d+$")
_REAL = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$|^[+-]?(inf|nan)$")


def parse_value(text: str) -> Leaf:
    if text in ("true", "false"):
        return text == "true"
    if _INT.match(text):
        return int(text)
    if _REAL.match(text):
        return float(text)
    return text


def parse_config(text: str) -> ParamTree:
    """Parse ``path = value`` lines; blank lines and ``#`` comments are
    skipped and later lines overwrite earlier ones."""
    tree = ParamTree()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        path, sep, value = line.partition("=")
        path, value = path.strip(), value.strip()
        if not sep or not path or not value:
            raise ConfigError(f"line {lineno}: expected 'path = value', got {raw.strip()!r}")
        if not _PATH.match(path):
            raise ConfigError(f"line {lineno}: invalid parameter path {path!r}")
        tree.put(path, parse_value(value))
    return tree


def parse_assignment(text: str) -> tuple[str, Leaf]:
    """``path=value`` as given on the command line."""
    tree = parse_config(text)
    if len(tree) != 1:
        raise ConfigError(f"expected a single 'path=value', got {text!r}")
    return next(iter(tree.items()))


# ---------------------------------------------------------------------------
# key registry

@dataclass(frozen=True)
class Key:
    path: str
    type: type
    default: Any
    help: str
    choices: tuple = ()


SOLVER_TYPES = ("cg", "bicgstab")
COARSENING_TYPES = ("aggregation", "smoothed_aggregation")
RELAX_TYPES = tuple(t.value for t in RelaxType)

_C, _R, _A, _S = CoarseningParams(), RelaxParams(), AMGParams(), SolverParams()

KEYS: dict[str, Key] = {k.path: k for k in [
    Key("solver.type", str, "cg", "Krylov method", SOLVER_TYPES),
    Key("solver.tol", float, _S.tol, "relative residual target, ||f - Au|| / ||f||"),
    Key("solver.abstol", float, _S.abstol, "absolute residual target"),
    Key("solver.maxiter", int, _S.maxiter, "iteration limit"),
    Key("precond.coarsening.type", str, "smoothed_aggregation",
        "transfer operator construction", COARSENING_TYPES),
    Key("precond.coarsening.eps_strong", float, _C.eps_strong,
        "strength threshold: a_ij^2 > eps^2 a_ii a_jj"),
    Key("precond.coarsening.eps_decay", float, _C.eps_decay,
        "eps_strong is multiplied by this on each coarser level"),
    Key("precond.coarsening.omega", float, _C.smoothing_omega,
        "damping of the prolongation smoother"),
    Key("precond.coarsening.adapt_omega", bool, _C.adapt_omega,
        "use 4/3 / rho(D^-1 A) as prolongation damping"),
    Key("precond.coarsening.power_iters", int, _C.power_iters,
        "power iterations for adapt_omega"),
    Key("precond.relax.type", str, _R.type.value, "smoother", RELAX_TYPES),
    Key("precond.relax.omega", float, _R.omega, "damped Jacobi factor"),
    Key("precond.relax.degree", int, _R.cheb_degree, "Chebyshev degree"),
    Key("precond.relax.lower_fraction", float, _R.cheb_lower_fraction,
        "Chebyshev lower bound as a fraction of the upper"),
    Key("precond.relax.power_iters", int, _R.power_iters,
        "power iterations for Chebyshev bounds"),
    Key("precond.npre", int, _A.npre, "pre-smoothing sweeps"),
    Key("precond.npost", int, _A.npost, "post-smoothing sweeps"),
    Key("precond.coarse_enough", int, _A.coarse_enough,
        "largest level solved directly"),
    Key("precond.max_levels", int, _A.max_levels, "level limit"),
]}


def registered_keys() -> list[Key]:
    return list(KEYS.values())


def defaults_tree() -> ParamTree:
    """Every registered key at its default value."""
    return ParamTree({k.path: k.default for k in KEYS.values()})


def _read(tree: ParamTree, path: str):
    key = KEYS[path]
    value = tree.get(path, key.default, key.type)
    if key.choices and value not in key.choices:
        raise ConfigError(f"{path}: unknown value {value!r}; choose from {list(key.choices)}")
    return value


def _check_unknown(tree: ParamTree) -> None:
    for path in tree.keys():
        if path not in KEYS:
            warnings.warn(f"unrecognised parameter {path!r} ignored", stacklevel=3)


def amg_params_from_tree(tree: ParamTree) -> AMGParams:
    coarsening = CoarseningParams(
        eps_strong=_read(tree, "precond.coarsening.eps_strong"),
        eps_decay=_read(tree, "precond.coarsening.eps_decay"),
        smoothing_omega=_read(tree, "precond.coarsening.omega"),
        smooth=_read(tree, "precond.coarsening.type") == "smoothed_aggregation",
        adapt_omega=_read(tree, "precond.coarsening.adapt_omega"),
        power_iters=_read(tree, "precond.coarsening.power_iters"),
    )
    relax = RelaxParams(
        type=_read(tree, "precond.relax.type"),
        omega=_read(tree, "precond.relax.omega"),
        cheb_degree=_read(tree, "precond.relax.degree"),
        cheb_lower_fraction=_read(tree, "precond.relax.lower_fraction"),
        power_iters=_read(tree, "precond.relax.power_iters"),
    )
    return AMGParams(
        coarsening=coarsening, relax=relax,
        npre=_read(tree, "precond.npre"), npost=_read(tree, "precond.npost"),
        coarse_enough=_read(tree, "precond.coarse_enough"),
        max_levels=_read(tree, "precond.max_levels"),
    )


def solver_params_from_tree(tree: ParamTree) -> SolverParams:
    return SolverParams(tol=_read(tree, "solver.tol"),
                        abstol=_read(tree, "solver.abstol"),
                        maxiter=_read(tree, "solver.maxiter"))


_METHODS: dict[str, Callable] = {"cg": CG, "bicgstab": BiCGStab}


class RuntimeSolver:
    """A preconditioner bound to a Krylov method.

    Calling the solver with a right-hand side returns ``(u, SolveResult)``.
    ``setup_seconds`` records the time spent building the hierarchy.
    """

    def __init__(self, A: CSRMatrix, precond: AMG, method: str,
                 params: SolverParams, backend: Backend):
        self.A = A
        self.precond = precond
        self.method = method
        self.params = params
        self.backend = backend
        self._solver = _METHODS[method](A.nrows, params, backend)

    def __call__(self, f, u0=None) -> tuple[np.ndarray, SolveResult]:
        u = self.backend.vector(self.A.nrows)
        if u0 is not None:
            u[:] = u0
        result = self._solver(self.A, self.precond, np.asarray(f, dtype=u.dtype), u)
        return u, result

    def __repr__(self):
        return f"RuntimeSolver({self.method}, {self.precond!r})"


def make_solver(A: CSRMatrix, precond: AMGParams = AMGParams(), solver: str = "cg",
                params: SolverParams = SolverParams(),
                backend: Backend | None = None) -> RuntimeSolver:
    """Compose a solver directly from parameter objects."""
    if solver not in _METHODS:
        raise ConfigError(f"unknown solver {solver!r}")
    backend = backend or default_backend()
    return RuntimeSolver(A, AMG(A, precond, backend), solver, params, backend)


def build_runtime_solver(A: CSRMatrix, tree: ParamTree,
                         backend: Backend | None = None) -> RuntimeSolver:
    """Compose a solver from a parameter tree. Unset keys take their
    defaults; unknown keys produce a warning, unknown type names an error."""
    _check_unknown(tree)
    method = _read(tree, "solver.type")
    return make_solver(A, amg_params_from_tree(tree), method,
                       solver_params_from_tree(tree), backend)
