import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from coulomb_spectral import specfun as sf


def laguerre_sum(n, k, z):
    """Independent oracle: the explicit alternating sum, in exact rationals."""
    zq = Fraction(z).limit_denominator(10**12) if not isinstance(z, Fraction) else z
    total = Fraction(0)
    for j in range(n + 1):
        c = Fraction(math.factorial(n + k), math.factorial(n - j) * math.factorial(k + j) * math.factorial(j))
        total += c * (-zq) ** j
    return float(total)


class TestLaguerre:
    def test_degree_zero_is_one(self):
        for k in (0, 1, 5):
            for z in (0.0, 1.5, 40.0):
                assert sf.laguerre(0, k, z) == 1.0

    def test_simple_values(self):
        assert sf.laguerre(1, 1, 2.0) == pytest.approx(0.0, abs=1e-14)
        assert sf.laguerre(2, 3, 0.0) == pytest.approx(10.0, rel=1e-14)

    @given(
        n=st.integers(0, 20),
        k=st.integers(0, 8),
        z=st.floats(0.0, 30.0, allow_nan=False),
    )
    @settings(max_examples=150, deadline=None)
    def test_recurrence_matches_explicit_sum(self, n, k, z):
        expected = laguerre_sum(n, k, z)
        got = sf.laguerre(n, k, z)
        assert got == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_rejects_negative_arguments(self):
        with pytest.raises(ValueError):
            sf.laguerre(-1, 0, 1.0)
        with pytest.raises(ValueError):
            sf.laguerre(2, -1, 1.0)
        with pytest.raises(ValueError):
            sf.laguerre(201, 0, 1.0)

    def test_large_degree_does_not_overflow(self):
        val = sf.laguerre(200, 1, 1500.0)
        assert math.isfinite(val) or math.isinf(val)  # scaled recurrence stays defined
        # the reduced radial function built on it must stay finite
        v = sf.reduced_radial(sf.QuantumNumbers(200, 0), 3000.0)
        assert math.isfinite(v)


class TestQuantumNumbers:
    def test_validation(self):
        sf.QuantumNumbers(3, 2)
        with pytest.raises(ValueError):
            sf.QuantumNumbers(0, 0)
        with pytest.raises(ValueError):
            sf.QuantumNumbers(2, 2)
        with pytest.raises(ValueError):
            sf.QuantumNumbers(2, -1)


class TestRadial:
    def test_ground_state_origin(self):
        assert sf.radial_nr(sf.QuantumNumbers(1, 0), 0.0) == pytest.approx(1 / math.sqrt(2), rel=1e-14)

    def test_vanishes_at_origin_for_positive_l(self):
        for n, l in [(2, 1), (5, 3), (7, 6)]:
            assert sf.radial_nr(sf.QuantumNumbers(n, l), 0.0) == 0.0

    def test_unit_norm_quadrature(self):
        # domain extends past 8n^2: the tail there still holds ~5e-5 of the
        # mass for small n (polynomial enhancement of exp(-r/n))
        qn = sf.QuantumNumbers(3, 1)
        val, _ = quad(
            lambda r: sf.radial_nr(qn, r) ** 2 * r**2, 0, 8 * 9 + 60 * 3, limit=300
        )
        assert val == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("l", [0, 2])
    def test_orthogonality_same_l(self, l):
        grid = np.linspace(1e-6, 8 * 36 + 60 * 6, 40001)
        for n in range(l + 1, 7):
            for n2 in range(n, 7):
                f = sf.radial_nr(sf.QuantumNumbers(n, l), grid) * sf.radial_nr(
                    sf.QuantumNumbers(n2, l), grid
                ) * grid**2
                val = np.trapezoid(f, grid)
                assert val == pytest.approx(1.0 if n == n2 else 0.0, abs=1e-8)

    def test_reduced_ground_state_closed_form(self):
        r = np.linspace(0.1, 30, 50)
        expect = r / math.sqrt(2) * np.exp(-r / 2)
        got = sf.reduced_radial(sf.QuantumNumbers(1, 0), r)
        np.testing.assert_allclose(got, expect, rtol=1e-13)

    def test_reduced_satisfies_radial_ode(self):
        # second difference of v at r=4 for (2,0): residual is O(h^2)
        qn = sf.QuantumNumbers(2, 0)
        h = 1e-4
        r = 4.0
        v = lambda x: sf.reduced_radial(qn, x)
        vpp = (v(r + h) - 2 * v(r) + v(r - h)) / h**2
        lam = -1.0 / 16.0
        residual = -vpp - v(r) / r - lam * v(r)
        assert abs(residual) < 1e-6

    def test_reduced_small_r_power(self):
        # v_{2,1} = r^2 * analytic: v(r)/r^2 tends to a nonzero constant
        qn = sf.QuantumNumbers(2, 1)
        ratios = [sf.reduced_radial(qn, r) / r**2 for r in (1e-3, 1e-4, 1e-5)]
        assert ratios[0] == pytest.approx(ratios[2], rel=1e-3)
        assert ratios[2] != 0.0


class TestZeros:
    def test_no_zeros_for_circular(self):
        assert len(sf.zeros(sf.QuantumNumbers(1, 0))) == 0
        assert len(sf.zeros(sf.QuantumNumbers(5, 4))) == 0

    def test_explicit_roots_n3(self):
        # L_2^(1)(r/3) = 3 - 3(r/3) + (r/3)^2/2 vanishes at r = 3(3 +- sqrt(3))
        zs = sf.zeros(sf.QuantumNumbers(3, 0))
        expect = [3 * (3 - math.sqrt(3)), 3 * (3 + math.sqrt(3))]
        np.testing.assert_allclose(zs, expect, rtol=1e-11)

    @pytest.mark.parametrize("n", range(1, 13))
    def test_counts_exact(self, n):
        for l in range(n):
            assert len(sf.zeros(sf.QuantumNumbers(n, l))) == n - l - 1

    def test_zero_positions_10_3(self):
        qn = sf.QuantumNumbers(10, 3)
        zs = sf.zeros(qn)
        assert len(zs) == 6
        scaled = zs / np.array([(3 + k + 1) ** 2 for k in range(1, 7)], dtype=float)
        # one fitted constant c covers all zeros: c^-1 <= r_k/(l+k+1)^2 <= c
        c = math.sqrt(np.max(scaled) * np.min(scaled))
        assert np.all(scaled / c <= 2.0) and np.all(scaled / c >= 0.5)

    def test_zeros_inside_classical_window(self):
        for n, l in [(6, 0), (8, 3), (12, 7)]:
            qn = sf.QuantumNumbers(n, l)
            tp = sf.turning_points(qn)
            zs = sf.zeros(qn)
            assert np.all(zs > tp.r_star) and np.all(zs < tp.r_star_upper)

    def test_zero_floor(self):
        # every zero sits above (l + 1/2)^2
        for n, l in [(8, 0), (10, 2), (12, 5)]:
            zs = sf.zeros(sf.QuantumNumbers(n, l))
            assert np.all(zs >= (l + 0.5) ** 2)


class TestTurningPoints:
    def test_l_zero(self):
        tp = sf.turning_points(sf.QuantumNumbers(2, 0))
        assert tp.r_star == 0.0
        assert tp.r_star_upper == 16.0

    def test_2_1(self):
        tp = sf.turning_points(sf.QuantumNumbers(2, 1))
        assert tp.r_star == pytest.approx(8 * (1 - math.sqrt(0.5)), rel=1e-14)
        assert tp.r_star_upper == pytest.approx(8 * (1 + math.sqrt(0.5)), rel=1e-14)

    def test_outer_is_4n_squared_at_l0(self):
        for n in (1, 5, 17):
            assert sf.turning_points(sf.QuantumNumbers(n, 0)).r_star_upper == 4.0 * n**2

    def test_ordering_vs_quadratic(self):
        for n, l in [(9, 4), (20, 13)]:
            tp = sf.turning_points(sf.QuantumNumbers(n, l))
            assert l * (l + 1) < tp.r_star < tp.r_star_upper < 4 * n**2


class TestSphericalSum:
    def test_monopole(self):
        assert sf.sph_harmonic_sum(0, (0, 0, 1.0)) == pytest.approx(1 / (4 * math.pi), rel=1e-14)

    def test_north_pole_quadrupole(self):
        assert sf.sph_harmonic_sum(2, (0, 0, 1.0)) == pytest.approx(5 / (4 * math.pi), rel=1e-12)

    def test_rotation_invariance(self):
        a = sf.sph_harmonic_sum(3, (0.6, 0.8, 0.0))
        b = sf.sph_harmonic_sum(3, (0.0, 0.0, 1.0))
        assert abs(a - b) < 1e-12

    @given(st.integers(0, 10), st.floats(-1, 1), st.floats(0, 2 * math.pi))
    @settings(max_examples=80, deadline=None)
    def test_addition_identity_everywhere(self, l, ct, phi):
        stheta = math.sqrt(max(0.0, 1 - ct * ct))
        d = (stheta * math.cos(phi), stheta * math.sin(phi), ct)
        assert sf.sph_harmonic_sum(l, d) == pytest.approx((2 * l + 1) / (4 * math.pi), abs=1e-12)

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            sf.sph_harmonic_sum(1, (0, 0, 2.0))
