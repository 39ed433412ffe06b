"""Finite-difference radial operators on (0, r_max] and their eigensolution.

The half-line operators handled here are

    Lambda        = -d^2/dr^2 + l(l+1)/r^2                   (kind "lambda")
    K_l(0)        = Lambda - 1/r - varsigma U(r)             (kind "nonrel")
    K_l(beta)     = f(Lambda) - 1/r - varsigma U(r)          (kind "rel")

with the relativistic kinetic function

    f(x) = 2 x / (sqrt(4 beta^2 x + 1) + 1)
         = sqrt(x / beta^2 + 1/(4 beta^4)) - 1/(2 beta^2),

applied through the full eigendecomposition of the tridiagonal Lambda.
The rational form of f is used internally because the square-root form
cancels catastrophically for small beta.

Discretization: uniform grid r_i = i h, i = 1..N, Dirichlet truncation
v(0) = v(r_max) = 0, standard 3-point second difference.  Eigenvectors are
normalized to unit grid-quadrature norm, h * sum(v_i^2) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .perturbation import PerturbationSpec

__all__ = [
    "RadialGrid",
    "DiscreteOperator",
    "EigenPair",
    "BETA_CRITICAL",
    "build_grid",
    "coarsen",
    "build_lambda",
    "build_nonrel",
    "build_rel",
    "rel_kinetic_matrix",
    "eigensolve",
    "solve_radial",
    "solve_rel_family",
    "default_grid_for",
]

#: largest coupling accepted by the relativistic builder (criticality threshold)
BETA_CRITICAL = 2.0 / math.pi

_DENSE_LIMIT = 20000


@dataclass(frozen=True)
class RadialGrid:
    """Uniform discretization of (0, r_max]: points i*h for i = 1..n_points."""

    step: float
    n_points: int
    r_max: float

    def __post_init__(self):
        if abs(self.step * self.n_points - self.r_max) > 1e-12 * self.r_max:
            raise ValueError("inconsistent grid: step * n_points must equal r_max")

    @cached_property
    def points(self) -> np.ndarray:
        return self.step * np.arange(1, self.n_points + 1)


@dataclass(frozen=True)
class EigenPair:
    """One eigenvalue with its grid eigenvector (unit grid-quadrature norm)."""

    value: float
    vector: np.ndarray


@dataclass(frozen=True)
class DiscreteOperator:
    """Symmetric matrix realization of a radial operator on a RadialGrid.

    Tridiagonal kinds ("lambda", "nonrel") are stored banded; the dense
    N x N array is materialized on demand through ``matrix``.  The
    relativistic kind stores the dense matrix directly.
    """

    kind: str
    l: int
    beta: float
    grid: RadialGrid
    diag: np.ndarray = None
    offdiag: np.ndarray = None
    dense: np.ndarray = None

    @property
    def n(self) -> int:
        return self.grid.n_points

    @property
    def is_tridiagonal(self) -> bool:
        return self.dense is None

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        if self.n > _DENSE_LIMIT:
            raise RuntimeError(
                f"refusing to materialize a dense {self.n}x{self.n} matrix; "
                "use the banded storage directly"
            )
        m = np.diag(self.diag)
        idx = np.arange(self.n - 1)
        m[idx, idx + 1] = self.offdiag
        m[idx + 1, idx] = self.offdiag
        return m

    def norm_estimate(self) -> float:
        """Cheap upper bound on the operator norm (Gershgorin)."""
        if self.is_tridiagonal:
            pad = np.abs(np.concatenate(([0.0], self.offdiag)))
            return float(np.max(np.abs(self.diag) + pad + pad[::-1]))
        return float(np.max(np.sum(np.abs(self.dense), axis=1)))


def build_grid(r_max: float, n_points: int) -> RadialGrid:
    """Uniform Dirichlet grid; rejects resolutions coarser than h = 0.1."""
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    if n_points < 100:
        raise ValueError("need at least 100 grid points")
    h = r_max / n_points
    if h > 0.1 + 1e-12:
        raise ValueError(f"grid too coarse: h={h:.4g} > 0.1; increase n_points")
    return RadialGrid(step=h, n_points=n_points, r_max=r_max)


def coarsen(grid: RadialGrid) -> RadialGrid:
    """Grid with doubled step on the same domain, for step-halving extrapolation.

    Built directly (build_grid would reject h > 0.1); only used internally
    to cancel the O(h^2) discretization term from eigenvalue scans.
    """
    if grid.n_points % 2:
        raise ValueError("coarsening requires an even point count")
    return RadialGrid(step=2 * grid.step, n_points=grid.n_points // 2, r_max=grid.r_max)


def default_grid_for(n_max: int, span: float = 8.0, step: float = 0.1) -> RadialGrid:
    """Grid sized for bound states up to principal number n_max.

    The states live inside r ~ 4 n^2, so the domain extends to
    span * n_max^2 (span = 8 leaves the truncation error ~1e-11).
    """
    n_points = int(round(span * n_max**2 / step))
    if n_points % 2:
        n_points += 1
    return RadialGrid(step=step, n_points=n_points, r_max=n_points * step)


def _as_spec_list(perturbation) -> list[PerturbationSpec]:
    if perturbation is None:
        return []
    if isinstance(perturbation, PerturbationSpec):
        return [perturbation]
    return list(perturbation)


def _check_perturbation(grid: RadialGrid, perturbation):
    for spec in _as_spec_list(perturbation):
        if spec.support_radius > grid.r_max / 2:
            raise ValueError(
                f"perturbation support {spec.support_radius} exceeds r_max/2={grid.r_max / 2}"
            )


def _coulomb_diag(grid: RadialGrid, perturbation) -> np.ndarray:
    """Diagonal of V = 1/r + sum varsigma U; the H = T - V sign convention.

    Accepts a single PerturbationSpec or a sequence of them (superposed).
    """
    r = grid.points
    c = 1.0 / r
    for spec in _as_spec_list(perturbation):
        if spec.varsigma != 0.0:
            c = c + spec.varsigma * spec.values(r)
    return c


def build_lambda(grid: RadialGrid, l: int) -> DiscreteOperator:
    """Tridiagonal -d^2/dr^2 + l(l+1)/r^2 with Dirichlet ends."""
    if l < 0:
        raise ValueError("angular index l must be non-negative")
    h = grid.step
    r = grid.points
    diag = 2.0 / h**2 + l * (l + 1) / r**2
    offdiag = np.full(grid.n_points - 1, -1.0 / h**2)
    return DiscreteOperator(kind="lambda", l=l, beta=0.0, grid=grid, diag=diag, offdiag=offdiag)


def build_nonrel(
    grid: RadialGrid, l: int, perturbation: PerturbationSpec | None = None
) -> DiscreteOperator:
    """Non-relativistic radial Hamiltonian Lambda - 1/r - varsigma U."""
    _check_perturbation(grid, perturbation)
    lam = build_lambda(grid, l)
    diag = lam.diag - _coulomb_diag(grid, perturbation)
    return DiscreteOperator(
        kind="nonrel", l=l, beta=0.0, grid=grid, diag=diag, offdiag=lam.offdiag
    )


def _f_rational(x: np.ndarray, beta: float) -> np.ndarray:
    return 2.0 * x / (np.sqrt(4.0 * beta**2 * x + 1.0) + 1.0)


def _f_sqrt(x: np.ndarray, beta: float) -> np.ndarray:
    return np.sqrt(x / beta**2 + 0.25 / beta**4) - 0.5 / beta**2


def _lambda_eig(grid: RadialGrid, l: int) -> tuple[np.ndarray, np.ndarray]:
    lam = build_lambda(grid, l)
    return eigh_tridiagonal(lam.diag, lam.offdiag)


def _check_beta(beta: float):
    if not 0.0 < beta <= BETA_CRITICAL + 1e-15:
        raise ValueError(f"beta={beta} outside (0, 2/pi]; use build_nonrel for beta=0")


def rel_kinetic_matrix(grid: RadialGrid, l: int, beta: float, form: str = "rational") -> np.ndarray:
    """Dense relativistic kinetic matrix f(Lambda), by eigendecomposition.

    ``form`` picks the scalar evaluation: "rational" (default, stable for
    all beta) or "sqrt" (the literal square-root expression).  The two are
    algebraically identical; comparing them bounds the round-off of the
    construction.
    """
    _check_beta(beta)
    if grid.n_points > _DENSE_LIMIT:
        raise RuntimeError("grid too large for the dense relativistic path")
    d, v = _lambda_eig(grid, l)
    f = _f_rational(d, beta) if form == "rational" else _f_sqrt(d, beta)
    t = (v * f) @ v.T
    return 0.5 * (t + t.T)


def build_rel(
    grid: RadialGrid, l: int, beta: float, perturbation: PerturbationSpec | None = None
) -> DiscreteOperator:
    """Relativistic radial Hamiltonian f(Lambda) - 1/r - varsigma U, dense."""
    _check_beta(beta)
    _check_perturbation(grid, perturbation)
    t = rel_kinetic_matrix(grid, l, beta, form="rational")
    np.fill_diagonal(t, np.diagonal(t) - _coulomb_diag(grid, perturbation))
    return DiscreteOperator(kind="rel", l=l, beta=beta, grid=grid, dense=t)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # deterministic sign: largest-magnitude component positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigensolve(op: DiscreteOperator, count: int) -> list[EigenPair]:
    """The `count` algebraically smallest eigenpairs, values ascending.

    Eigenvectors come back orthonormal in grid quadrature and with a
    deterministic sign.  LAPACK convergence failures propagate as
    LinAlgError.
    """
    if count < 1 or count > op.n:
        raise ValueError(f"count must be in 1..{op.n}")
    if op.is_tridiagonal:
        w, v = eigh_tridiagonal(op.diag, op.offdiag, select="i", select_range=(0, count - 1))
    else:
        w, v = eigh(op.dense, subset_by_index=[0, count - 1])
    v = _fix_signs(v) / math.sqrt(op.grid.step)
    return [EigenPair(value=float(w[k]), vector=v[:, k]) for k in range(count)]


def solve_radial(
    grid: RadialGrid,
    l: int,
    beta: float,
    perturbation: PerturbationSpec | None = None,
    count: int = 1,
) -> list[EigenPair]:
    """Eigenpairs of K_l(beta); beta = 0 requests route to the banded builder."""
    if beta == 0.0:
        op = build_nonrel(grid, l, perturbation)
    else:
        op = build_rel(grid, l, beta, perturbation)
    return eigensolve(op, count)


def solve_rel_family(
    grid: RadialGrid,
    l: int,
    betas,
    perturbation: PerturbationSpec | None = None,
    count: int = 1,
) -> dict:
    """Eigenpairs of K_l(beta) for several beta sharing one Lambda eigenbasis.

    Equivalent to build_rel + eigensolve for each beta (orthogonal
    similarity), but the expensive N^3 change of basis for the Coulomb
    diagonal is amortized over the whole beta batch.
    """
    _check_perturbation(grid, perturbation)
    if grid.n_points > _DENSE_LIMIT:
        raise RuntimeError("grid too large for the dense relativistic path")
    d, v = _lambda_eig(grid, l)
    c = _coulomb_diag(grid, perturbation)
    m = v.T @ (c[:, None] * v)
    out = {}
    for beta in betas:
        _check_beta(beta)
        b = -0.5 * (m + m.T)
        np.fill_diagonal(b, np.diagonal(b) + _f_rational(d, beta))
        w, y = eigh(b, subset_by_index=[0, count - 1], overwrite_a=True)
        vecs = _fix_signs(v @ y) / math.sqrt(grid.step)
        out[beta] = [EigenPair(value=float(w[k]), vector=vecs[:, k]) for k in range(count)]
    return out
