"""Compactly supported radial perturbations of the Coulomb potential.

The perturbed Hamiltonian is H = T - V with V = 1/r + varsigma * U where
U is a bounded (|U| <= 1) radial profile supported in the ball or annulus
[inner_radius, support_radius].  U >= 0 with positive varsigma deepens the
well, so it lowers eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

__all__ = ["PerturbationSpec", "SMALLNESS_EPS0"]

#: default experimental smallness threshold for the coupling flags
SMALLNESS_EPS0 = 0.01

_PROFILES = ("box", "bump", "custom")


@dataclass(frozen=True)
class PerturbationSpec:
    """A radial potential bump varsigma * U with |U| <= 1.

    ``profile`` selects the shape: "box" is the indicator of
    [inner_radius, support_radius], "bump" a smooth compactly supported
    mollifier on the same interval, "custom" a linearly interpolated
    table (radii, values) clipped to the support.

    The smallness products varsigma*r and varsigma*r^(3/2) are recorded
    as flags, never enforced.
    """

    varsigma: float
    support_radius: float
    inner_radius: float = 0.0
    profile: str = "box"
    table: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self.varsigma < 0:
            raise ValueError("coupling varsigma must be non-negative")
        if self.support_radius < 1.0:
            raise ValueError("support radius must be >= 1")
        if not 0.0 <= self.inner_radius < self.support_radius:
            raise ValueError("need 0 <= inner_radius < support_radius")
        if self.profile not in _PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}, expected one of {_PROFILES}")
        if self.profile == "custom":
            if self.table is None:
                raise ValueError("custom profile requires a (radii, values) table")
            radii, values = self.table
            if np.max(np.abs(values)) > 1.0 + 1e-12:
                raise ValueError("custom profile violates |U| <= 1")
            if np.min(radii) < self.inner_radius or np.max(radii) > self.support_radius:
                raise ValueError("custom table extends outside the declared support")

    def values(self, r) -> np.ndarray:
        """U(r) on an array of radii; zero outside the support."""
        r = np.asarray(r, dtype=float)
        inside = (r >= self.inner_radius) & (r <= self.support_radius)
        if self.profile == "box":
            return inside.astype(float)
        if self.profile == "bump":
            a, b = self.inner_radius, self.support_radius
            t = (2.0 * r - (a + b)) / (b - a)
            out = np.zeros_like(r)
            core = inside & (np.abs(t) < 1.0)
            out[core] = np.exp(1.0 - 1.0 / (1.0 - t[core] ** 2))
            return out
        radii, values = self.table
        out = np.interp(r, radii, values, left=0.0, right=0.0)
        out[~inside] = 0.0
        return out

    def smallness_flags(self, eps0: float = SMALLNESS_EPS0) -> dict:
        """Recorded (not enforced) smallness indicators of the coupling."""
        r = self.support_radius
        return {
            "varsigma_r": self.varsigma * r,
            "varsigma_r_small": self.varsigma * r <= eps0,
            "varsigma_r32": self.varsigma * r**1.5,
            "varsigma_r32_small": self.varsigma * r**1.5 <= eps0,
            "eps0": eps0,
        }

    def weighted_l1(self, power: float = 1.5) -> float:
        """Three-dimensional L1 norm of <x>^(-power) |U|, <x> = (r^2+1)^(1/2).

        Computed as 4 pi * int |U(r)| (r^2+1)^(-power/2) r^2 dr over the
        support (adaptive quadrature, kink points passed explicitly).
        """

        def integrand(r):
            return abs(float(self.values(np.array([r]))[0])) * (r * r + 1.0) ** (-power / 2.0) * r * r

        val, _ = quad(
            integrand,
            self.inner_radius,
            self.support_radius,
            limit=200,
            epsabs=1e-13,
            epsrel=1e-11,
        )
        return 4.0 * math.pi * val

    def plain_l1(self) -> float:
        """Unweighted three-dimensional L1 norm of |U|."""
        return self.weighted_l1(power=0.0)

    def cache_key(self) -> tuple:
        digest = None
        if self.table is not None:
            radii, values = self.table
            digest = hash((np.asarray(radii).tobytes(), np.asarray(values).tobytes()))
        return (self.profile, self.varsigma, self.support_radius, self.inner_radius, digest)
