"""Closed-form hydrogenic radial functions and spherical-harmonic sums.

Conventions: the Coulomb Hamiltonian is H = -Laplacian - 1/|x| (kinetic
term without the conventional 1/2), so the bound-state energies are
-1/(4 n^2) and the radial factor carries the exp(-r/(2n)) scale.  All
radial functions are normalized to unit L^2(r^2 dr) norm, equivalently
the reduced function v(r) = r R(r) has unit L^2(dr) norm on (0, inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import lpmv

__all__ = [
    "QuantumNumbers",
    "TurningPoints",
    "ZeroCountError",
    "laguerre",
    "radial_nr",
    "reduced_radial",
    "zeros",
    "turning_points",
    "sph_harmonic_sum",
]

#: largest principal quantum number accepted by the closed-form evaluators
N_MAX_SUPPORTED = 200


class ZeroCountError(RuntimeError):
    """Sign-change bracketing found a number of roots different from n-l-1."""


@dataclass(frozen=True)
class QuantumNumbers:
    """Principal / angular indices (n, l) labelling one radial mode.

    The magnetic index m is implicit: it ranges over -l..l and enters only
    through the spherical-harmonic addition identity.
    """

    n: int
    l: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and isinstance(self.l, (int, np.integer))):
            raise TypeError("quantum numbers must be integers")
        if self.n < 1:
            raise ValueError(f"principal number must be positive, got n={self.n}")
        if not 0 <= self.l <= self.n - 1:
            raise ValueError(f"need 0 <= l <= n-1, got (n, l)=({self.n}, {self.l})")
        if self.n > N_MAX_SUPPORTED:
            raise ValueError(f"n={self.n} exceeds supported maximum {N_MAX_SUPPORTED}")


@dataclass(frozen=True)
class TurningPoints:
    """Roots of the classical radial momentum, r^2/(4n^2) - r + l(l+1) = 0.

    For l = 0 the inner root degenerates to 0; the outer root is then
    exactly 4 n^2.
    """

    r_star: float
    r_star_upper: float


def _laguerre_scaled(n: int, k: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Three-term recurrence for L_n^(k)(z) with overflow rescaling.

    Returns (mantissa, log_scale) with L = mantissa * exp(log_scale).
    Rescaling keeps the recurrence finite for large n and z where the
    polynomial value itself overflows a double.
    """
    z = np.asarray(z, dtype=float)
    prev = np.ones_like(z)
    if n == 0:
        return prev, np.zeros_like(z)
    cur = 1.0 + k - z
    log_scale = np.zeros_like(z)
    for j in range(2, n + 1):
        prev, cur = cur, ((2 * j - 1 + k - z) * cur - (j - 1 + k) * prev) / j
        big = np.abs(cur) > 1e280
        if np.any(big):
            prev = np.where(big, prev * 1e-280, prev)
            cur = np.where(big, cur * 1e-280, cur)
            log_scale = np.where(big, log_scale + math.log(1e280), log_scale)
    return cur, log_scale


def laguerre(n: int, k: int, z):
    """Associated Laguerre polynomial L_n^(k)(z).

    Evaluated with the stable three-term recurrence in the degree; this
    agrees with the explicit alternating sum for small n but does not
    cancel catastrophically for large n or z.  Accepts scalar or array z.
    """
    if n < 0 or k < 0:
        raise ValueError(f"degree and order must be non-negative, got n={n}, k={k}")
    if n > N_MAX_SUPPORTED:
        raise ValueError(f"degree n={n} exceeds supported maximum {N_MAX_SUPPORTED}")
    scalar = np.isscalar(z)
    val, log_scale = _laguerre_scaled(n, k, np.atleast_1d(np.asarray(z, dtype=float)))
    out = val * np.exp(log_scale)
    return float(out[0]) if scalar else out


def _log_norm(n: int, l: int) -> float:
    # sqrt((n-l-1)! / (2 n^4 (n+l)!)) in log space; overflows for n ~ 20 otherwise
    return 0.5 * (math.lgamma(n - l) - math.log(2.0) - 4.0 * math.log(n) - math.lgamma(n + l + 1))


def radial_nr(qn: QuantumNumbers, r):
    """Non-relativistic radial eigenfunction R_{n,l}(r), unit L^2(r^2 dr) norm.

    R_{n,l}(r) = sqrt((n-l-1)!/(2 n^4 (n+l)!)) (r/n)^l exp(-r/2n)
                 L_{n-l-1}^(2l+1)(r/n).
    """
    n, l = qn.n, qn.l
    scalar = np.isscalar(r)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    z = r / n
    lag, log_scale = _laguerre_scaled(n - l - 1, 2 * l + 1, z)
    log_amp = _log_norm(n, l) + log_scale - z / 2.0
    if l > 0:
        with np.errstate(divide="ignore"):
            log_amp = log_amp + l * np.log(np.where(z > 0, z, 1.0))
        out = np.where(z > 0, lag * np.exp(log_amp), 0.0)
    else:
        out = lag * np.exp(log_amp)
    return float(out[0]) if scalar else out


def reduced_radial(qn: QuantumNumbers, r):
    """Reduced radial function v_{n,l}(r) = r R_{n,l}(r).

    Solves -v'' + l(l+1) v / r^2 - v / r = -v/(4 n^2) with v(0) = 0 and
    behaves like r^(l+1) at the origin.
    """
    scalar = np.isscalar(r)
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    out = rr * radial_nr(qn, rr)
    return float(out[0]) if scalar else out


def turning_points(qn: QuantumNumbers) -> TurningPoints:
    """Classical turning points 2n^2 (1 -+ sqrt(1 - l(l+1)/n^2))."""
    n, l = qn.n, qn.l
    ll = l * (l + 1)
    disc = 1.0 - ll / n**2
    if disc < 0:
        raise ValueError(f"l(l+1) > n^2 for (n, l)=({n}, {l}); no classical window")
    root = math.sqrt(disc)
    if l == 0:
        return TurningPoints(0.0, 4.0 * n**2)
    return TurningPoints(2.0 * n**2 * (1.0 - root), 2.0 * n**2 * (1.0 + root))


def zeros(qn: QuantumNumbers) -> np.ndarray:
    """All zeros of v_{n,l} in (0, inf), exactly n-l-1 of them, ascending.

    Brackets sign changes of the Laguerre factor on a grid uniform in
    sqrt(r) with 40 n samples over (0, 1.2 r*], then bisects each bracket
    to 1e-12 relative tolerance.  Consecutive zeros are bounded apart in
    sqrt(r), so the sampling density cannot skip a root.  Raises
    ZeroCountError if the bracket count disagrees with n-l-1.
    """
    n, l = qn.n, qn.l
    want = n - l - 1
    if want == 0:
        return np.array([])
    upper = 1.2 * turning_points(qn).r_star_upper
    s = np.linspace(0.0, math.sqrt(upper), 40 * n + 1)[1:]
    grid = s**2

    def lag_sign(r):
        val, _ = _laguerre_scaled(want, 2 * l + 1, np.asarray(r, dtype=float) / n)
        return val

    vals = lag_sign(grid)
    flip = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if len(flip) != want:
        raise ZeroCountError(
            f"({n}, {l}): bracketing found {len(flip)} sign changes, expected {want}; "
            "sampling grid too coarse"
        )
    roots = np.empty(want)
    for i, j in enumerate(flip):
        a, b = grid[j], grid[j + 1]
        fa = vals[j]
        while (b - a) > 1e-12 * max(1.0, 0.5 * (a + b)):
            mid = 0.5 * (a + b)
            fm = lag_sign(np.array([mid]))[0]
            if fa * fm <= 0:
                b = mid
            else:
                a, fa = mid, fm
        roots[i] = 0.5 * (a + b)
    return roots


def _real_harmonic_row(l: int, theta: float, phi: float) -> np.ndarray:
    """Values of the 2l+1 real spherical harmonics of degree l at (theta, phi)."""
    x = math.cos(theta)
    out = np.empty(2 * l + 1)
    # m = 0
    p0 = lpmv(0, l, x)
    out[l] = math.sqrt((2 * l + 1) / (4.0 * math.pi)) * p0
    for m in range(1, l + 1):
        pm = lpmv(m, l, x)
        log_ratio = math.lgamma(l - m + 1) - math.lgamma(l + m + 1)
        norm = math.sqrt(2.0 * (2 * l + 1) / (4.0 * math.pi)) * math.exp(0.5 * log_ratio)
        out[l + m] = norm * pm * math.cos(m * phi)
        out[l - m] = norm * pm * math.sin(m * phi)
    return out


def sph_harmonic_sum(l: int, direction) -> float:
    """Explicit sum over m of |Y_{l,m}|^2 at a unit direction vector.

    Uses real spherical harmonics (the squared sum is basis independent)
    and must equal (2l+1)/(4 pi) for every direction.
    """
    if l < 0:
        raise ValueError("degree l must be non-negative")
    d = np.asarray(direction, dtype=float)
    if d.shape != (3,):
        raise ValueError("direction must be a 3-vector")
    norm = float(np.linalg.norm(d))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"direction must be a unit vector, |d|={norm}")
    d = d / norm
    theta = math.acos(max(-1.0, min(1.0, d[2])))
    phi = math.atan2(d[1], d[0])
    row = _real_harmonic_row(l, theta, phi)
    return float(np.sum(row**2))
