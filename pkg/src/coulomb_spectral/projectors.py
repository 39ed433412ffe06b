"""Riesz projectors by contour integration and the trace identities they obey.

The projector onto a spectral cluster is the contour integral
(1/2pi i) oint (z - H)^(-1) dz over a circle separating the cluster from
the rest of the spectrum.  With nodes placed symmetrically about the real
axis the imaginary parts cancel in conjugate pairs, so only the upper
half-circle is solved.  Trapezoidal quadrature of the (analytic) resolvent
converges geometrically in the node count.

All 3-D traces reduce to radial traces with weight 2l+1 per angular block.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh, eigh_tridiagonal, lu_factor, lu_solve, solve_banded, svdvals

from . import clusters as cl
from . import radial_operator as ro
from .perturbation import PerturbationSpec

__all__ = [
    "Contour",
    "ProjectorMatrix",
    "ProjectorQualityError",
    "TruncationMismatch",
    "schatten_norm",
    "projector_contour",
    "projector_eigensum",
    "projector_defects",
    "cluster_contour",
    "resolvent_series_terms",
    "projector_lemma_check",
    "trace_functionals",
    "sum_rule",
    "two_perturbation_trace",
]


class ProjectorQualityError(RuntimeError):
    """Contour quadrature failed the idempotency tolerance."""


class TruncationMismatch(RuntimeError):
    """An eigenvalue crossed the truncation level during a coupling sweep."""


@dataclass(frozen=True)
class Contour:
    """Circle in the complex plane enclosing exactly one cluster."""

    center: float
    radius: float
    n_quad: int = 64

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("contour radius must be positive")
        if self.n_quad < 8 or self.n_quad % 2:
            raise ValueError("need an even node count >= 8")


@dataclass
class ProjectorMatrix:
    """Real symmetric projector onto a cluster subspace."""

    matrix: np.ndarray
    cluster_index: int
    source: str  # "contour" or "eigensum"


def schatten_norm(m: np.ndarray, p) -> float:
    """Trace (p=1), Frobenius (p=2) or operator (p=inf) norm."""
    if p in (2, "frobenius"):
        return float(np.linalg.norm(m, "fro"))
    sv = svdvals(m)
    if p in (1, "trace"):
        return float(np.sum(sv))
    if p in (np.inf, "inf", "operator"):
        return float(sv[0]) if len(sv) else 0.0
    raise ValueError(f"unsupported norm tag {p!r}; use 1/2/inf")


def _resolvent(op: ro.DiscreteOperator, z: complex) -> np.ndarray:
    """Dense (z - H)^(-1) at one quadrature node."""
    n = op.n
    if op.is_tridiagonal:
        ab = np.zeros((3, n), dtype=complex)
        ab[0, 1:] = -op.offdiag
        ab[1, :] = z - op.diag
        ab[2, :-1] = -op.offdiag
        return solve_banded((1, 1), ab, np.eye(n, dtype=complex))
    return lu_solve(lu_factor(z * np.eye(n, dtype=complex) - op.dense), np.eye(n, dtype=complex))


def _upper_nodes(contour: Contour):
    """Half-offset trapezoid nodes on the upper half-circle with weights.

    The mirror nodes contribute the complex conjugate, so the full-circle
    trapezoid sum equals twice the real part of the upper-half sum.
    """
    m = contour.n_quad
    thetas = 2.0 * math.pi * (np.arange(m) + 0.5) / m
    upper = thetas[thetas < math.pi]
    return upper, 2.0 * contour.radius / m


def projector_contour(op: ro.DiscreteOperator, contour: Contour) -> ProjectorMatrix:
    """Trapezoidal contour quadrature of the resolvent.

    Raises ProjectorQualityError when the result fails idempotency at
    1e-8 (contour too close to the spectrum or too few nodes).
    """
    thetas, w = _upper_nodes(contour)
    acc = np.zeros((op.n, op.n))
    for t in thetas:
        phase = complex(math.cos(t), math.sin(t))
        z = contour.center + contour.radius * phase
        acc += w * np.real(phase * _resolvent(op, z))
    acc = 0.5 * (acc + acc.T)
    defect = np.linalg.norm(acc @ acc - acc, 2)
    if defect > 1e-8:
        raise ProjectorQualityError(
            f"idempotency defect {defect:.3g} > 1e-8; enlarge the margin or n_quad"
        )
    return ProjectorMatrix(matrix=acc, cluster_index=-1, source="contour")


def projector_eigensum(op: ro.DiscreteOperator, lo: float, hi: float) -> ProjectorMatrix:
    """Sum of eigenvector outer products over eigenvalues in (lo, hi)."""
    if op.is_tridiagonal:
        _, v = eigh_tridiagonal(op.diag, op.offdiag, select="v", select_range=(lo, hi))
    else:
        _, v = eigh(op.dense, subset_by_value=[lo, hi])
    return ProjectorMatrix(matrix=v @ v.T, cluster_index=-1, source="eigensum")


def projector_defects(p: ProjectorMatrix) -> dict:
    m = p.matrix
    return {
        "idempotency": float(np.linalg.norm(m @ m - m, 2)),
        "symmetry": float(np.linalg.norm(m - m.T, 2)),
        "trace": float(np.trace(m)),
        "trace_defect": float(abs(np.trace(m) - round(np.trace(m)))),
    }


def cluster_contour(values, n: int, n_quad: int = 64) -> Contour:
    """Contour for cluster n: centered at its midpoint, radius half the
    smaller adjacent gap.  ``values`` is any sorted iterable of (negative)
    eigenvalues containing the clusters around n.
    """
    found = cl.detect_clusters(
        [cl.WeightedLevel(float(v), 1, 0, 0) for v in sorted(values)], beta=math.inf
    )
    target = None
    for c in found:
        if c.index_n == n:
            target = c
    if target is None:
        raise ValueError(f"no cluster with index {n} among the provided values")
    center = 0.5 * (target.eigenvalues[0] + target.eigenvalues[-1])
    radius = 0.5 * min(target.gap_below, target.gap_above)
    if not math.isfinite(radius):
        radius = 0.5 * target.gap_above if math.isfinite(target.gap_above) else 0.5 * target.gap_below
    if target.width > 2.0 * radius - radius / 10.0:
        raise ValueError("cluster too wide for a separating circle with 10% margin")
    return Contour(center=float(center), radius=float(radius), n_quad=n_quad)


def resolvent_series_terms(
    op0: ro.DiscreteOperator, perturbation: PerturbationSpec, contour: Contour, K: int
) -> list[np.ndarray]:
    """Regular terms of the resolvent expansion of the projector difference.

    Term k is (-varsigma)^k (1/2pi i) oint R0 (U R0)^k dz, whose partial
    sums converge to pi_n - pi0_n while varsigma * n^3 stays small; a
    divergence warning is emitted otherwise.
    """
    if K < 1:
        raise ValueError("need at least one term")
    n_est = 1.0 / (2.0 * math.sqrt(-contour.center))
    if perturbation.varsigma * n_est**3 > 0.5:
        warnings.warn(
            f"varsigma * n^3 = {perturbation.varsigma * n_est ** 3:.3g}; expansion may diverge"
        )
    u = perturbation.values(op0.grid.points)
    thetas, w = _upper_nodes(contour)
    terms = [np.zeros((op0.n, op0.n)) for _ in range(K)]
    for t in thetas:
        phase = complex(math.cos(t), math.sin(t))
        z = contour.center + contour.radius * phase
        r0 = _resolvent(op0, z)
        cur = r0
        for k in range(K):
            cur = cur @ (u[:, None] * r0) * (-perturbation.varsigma)
            terms[k] += w * np.real(phase * cur)
    return terms


def projector_lemma_check(p: ProjectorMatrix, p0: ProjectorMatrix, norm_tag) -> dict:
    """Both sides of the projector-comparison inequality in one norm.

    Requires equal ranks and separation epsilon = ||(I-P)P0|| < 1/2;
    outside that regime the check reports INAPPLICABLE instead of failing.
    """
    m, m0 = p.matrix, p0.matrix
    rank, rank0 = int(round(np.trace(m))), int(round(np.trace(m0)))
    eye = np.eye(m.shape[0])
    eps = schatten_norm((eye - m) @ m0, np.inf)
    if rank != rank0 or eps >= 0.5:
        return {"applicable": False, "epsilon": eps, "ranks": (rank, rank0)}
    lhs = schatten_norm(m - m0, norm_tag)
    rhs = 2.0 / (1.0 - eps) * schatten_norm((eye - m) @ m0, norm_tag)
    return {
        "applicable": True,
        "epsilon": eps,
        "ranks": (rank, rank0),
        "lhs": lhs,
        "rhs": rhs,
        "holds": lhs <= rhs + 1e-12,
    }


def _grid_inner(grid: ro.RadialGrid, u: np.ndarray, w: np.ndarray) -> float:
    return float(grid.step * np.sum(u * w * w))


def _cluster_pairs(grid, l, beta, perturbation, n):
    """Radial eigenpair of cluster n in the l block (index n-l-1)."""
    pairs = cl.solve_cached(grid, l, beta, perturbation, n - l)
    return pairs[n - l - 1]


def trace_functionals(
    grid: ro.RadialGrid,
    beta: float,
    perturbation: PerturbationSpec,
    n: int,
    weight_power: float = 1.5,
) -> dict:
    """Tr[U pi0_n] and Tr[U (pi_n - pi0_n)] with their reference scales.

    Radial traces carry the 2l+1 angular weights.  The weight in the
    reference norms is <x> = (|x|^2 + 1)^(1/2).
    """
    u = perturbation.values(grid.points)
    tr0 = 0.0
    tr1 = 0.0
    for l in range(n):
        p0 = _cluster_pairs(grid, l, beta, None, n)
        p1 = _cluster_pairs(grid, l, beta, perturbation, n)
        tr0 += (2 * l + 1) * _grid_inner(grid, u, p0.vector)
        tr1 += (2 * l + 1) * (_grid_inner(grid, u, p1.vector) - _grid_inner(grid, u, p0.vector))
    norm = perturbation.weighted_l1(weight_power)
    r = perturbation.support_radius
    s = perturbation.varsigma
    logterm = 1.0 + abs(math.log(r / n**2))
    return {
        "n": n,
        "tr_U_pi0": tr0,
        "tr_U_dpi": tr1,
        "ref_pi0": r * norm * n**-3,
        "ref_dpi": s * r * norm * (r**1.5 * n**-3 * logterm + 1.0 / n),
        "weighted_norm": norm,
    }


def _negative_block(grid, beta, perturbation, n_max, cutoff):
    """Per-l eigenpairs below the cutoff, with the truncation-boundary check."""
    blocks = []
    for l in range(n_max):
        count = n_max - l
        pairs = cl.solve_cached(grid, l, beta, perturbation, count + 1)
        if pairs[count - 1].value >= cutoff or pairs[count].value <= cutoff:
            raise TruncationMismatch(
                f"l={l}: eigenvalues straddle the truncation level {cutoff:.6g}"
            )
        blocks.append(pairs[:count])
    return blocks


def sum_rule(
    grid: ro.RadialGrid,
    beta: float,
    perturbation: PerturbationSpec,
    n_max: int,
    nodes: int = 16,
) -> dict:
    """Coupling-integral identity for the truncated negative trace.

    Compares Tr[H_V^- - H_V0^-] (clusters up to n_max, both spectra
    truncated at the same midgap level) against minus the Gauss-Legendre
    integral over t of Tr[U theta(-H_t)], plus the per-cluster version.
    """
    sigma = perturbation.varsigma
    cutoff = cl.midgap(n_max)
    u = perturbation.values(grid.points)
    x, gl_w = leggauss(nodes)
    ts = 0.5 * sigma * (x + 1.0)
    ws = 0.5 * sigma * gl_w

    base = _negative_block(grid, beta, None, n_max, cutoff)
    full = _negative_block(grid, beta, perturbation, n_max, cutoff)

    lhs = sum(
        (2 * l + 1) * (p1.value - p0.value)
        for l in range(n_max)
        for p0, p1 in zip(base[l], full[l])
    )
    per_cluster_sum = {
        n: sum(
            (2 * l + 1) * (full[l][n - l - 1].value - base[l][n - l - 1].value)
            for l in range(n)
        )
        for n in range(1, n_max + 1)
    }

    trace_t = np.zeros((len(ts), n_max + 1))  # column n: Tr[U pi_n^t]; column 0 unused
    for i, t in enumerate(ts):
        spec_t = replace(perturbation, varsigma=t) if t > 0 else None
        blocks = _negative_block(grid, beta, spec_t, n_max, cutoff)
        for l in range(n_max):
            for j, pair in enumerate(blocks[l]):
                trace_t[i, l + 1 + j] += (2 * l + 1) * _grid_inner(grid, u, pair.vector)

    rhs = -float(np.sum(ws * np.sum(trace_t[:, 1:], axis=1)))
    per_cluster = []
    for n in range(1, n_max + 1):
        integral = float(np.sum(ws * trace_t[:, n]))
        per_cluster.append(
            {
                "n": n,
                "sum_delta": per_cluster_sum[n],
                "integral": integral,
                "defect": per_cluster_sum[n] + integral,
            }
        )
    defect = lhs - rhs
    return {
        "lhs": lhs,
        "rhs": rhs,
        "defect": defect,
        "rel_defect": abs(defect) / max(abs(lhs), 1e-300),
        "per_cluster": per_cluster,
        "nodes": nodes,
    }


def two_perturbation_trace(
    grid: ro.RadialGrid,
    beta: float,
    u_spec: PerturbationSpec,
    phi_spec: PerturbationSpec,
    varsigma: float,
    varepsilon: float,
    n_max: int,
    kappa: float = 0.0,
) -> dict:
    """Four-term difference of truncated negative traces under two bumps.

    Computes Tr[H^-_(eps Phi)] - Tr[H^-_0] - Tr[H^-_(sig U + eps Phi)]
    + Tr[H^-_(sig U)], all spectra truncated at the same midgap level, and
    reports it against the scale
    (sig+eps)^(1-kappa) r (sig ||<x>^-3/2 U||_L1 + eps r^(3/2)).
    """
    cutoff = cl.midgap(n_max)
    u = replace(u_spec, varsigma=varsigma)
    phi = replace(phi_spec, varsigma=varepsilon)

    def tr_minus(pert):
        blocks = _negative_block(grid, beta, pert, n_max, cutoff)
        return sum((2 * l + 1) * p.value for l in range(n_max) for p in blocks[l])

    value = tr_minus([phi]) - tr_minus(None) - tr_minus([u, phi]) + tr_minus([u])
    r = max(u_spec.support_radius, phi_spec.support_radius)
    ref = (varsigma + varepsilon) ** (1.0 - kappa) * r * (
        varsigma * u_spec.weighted_l1(1.5) + varepsilon * r**1.5
    )
    return {
        "value": value,
        "ref_scale": ref,
        "varsigma": varsigma,
        "varepsilon": varepsilon,
        "flags": {"eps_r32_small": varepsilon * r**1.5 <= 0.01},
    }
