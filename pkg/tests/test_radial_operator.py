import math

import numpy as np
import pytest

from coulomb_spectral import radial_operator as ro
from coulomb_spectral import specfun as sf
from coulomb_spectral.perturbation import PerturbationSpec


class TestGrid:
    def test_step_examples(self):
        assert ro.build_grid(1000.0, 10000).step == pytest.approx(0.1)
        g = ro.build_grid(16.0, 1600)
        assert g.step == pytest.approx(0.01)
        assert g.points[-1] == pytest.approx(16.0)
        assert g.step * g.n_points == pytest.approx(g.r_max)

    def test_uniformity(self):
        g = ro.build_grid(50.0, 800)
        steps = np.diff(g.points)
        assert np.all(np.abs(steps - g.step) < 1e-14 * g.r_max)

    def test_rejections(self):
        with pytest.raises(ValueError):
            ro.build_grid(1000.0, 5000)  # h = 0.2
        with pytest.raises(ValueError):
            ro.build_grid(5.0, 99)
        with pytest.raises(ValueError):
            ro.build_grid(-1.0, 500)

    def test_coarsen_preserves_domain(self):
        g = ro.build_grid(100.0, 1000)
        c = ro.coarsen(g)
        assert c.r_max == g.r_max
        assert c.step == 2 * g.step
        assert c.points[-1] == pytest.approx(g.points[-1])


class TestLambda:
    def test_annihilates_constants_in_the_interior(self):
        g = ro.build_grid(10.0, 1000)
        lam = ro.build_lambda(g, 0)
        vec = np.ones(g.n_points)
        out = lam.matrix @ vec
        interior = out[1:-1]
        assert np.max(np.abs(interior)) < 1e-9

    def test_dirichlet_ground_state_unit_interval(self):
        g = ro.build_grid(1.0, 10000)
        lam = ro.build_lambda(g, 0)
        val = ro.eigensolve(lam, 1)[0].value
        assert val == pytest.approx(math.pi**2, rel=0.01)

    def test_centrifugal_difference_is_diagonal(self):
        g = ro.build_grid(20.0, 400)
        d = ro.build_lambda(g, 1).matrix - ro.build_lambda(g, 0).matrix
        np.testing.assert_allclose(d, np.diag(2.0 / g.points**2), atol=1e-12)

    def test_positive_spectrum(self):
        g = ro.build_grid(30.0, 300)
        vals = [p.value for p in ro.eigensolve(ro.build_lambda(g, 0), 5)]
        assert all(v > 0 for v in vals)


class TestNonRel:
    def test_hydrogen_levels(self):
        g = ro.build_grid(200.0, 4000)
        pairs = ro.eigensolve(ro.build_nonrel(g, 0), 4)
        assert pairs[0].value == pytest.approx(-0.25, rel=5e-4)
        assert pairs[3].value == pytest.approx(-1.0 / 64.0, rel=1e-3)

    def test_zero_coupling_is_identity(self):
        g = ro.build_grid(50.0, 500)
        plain = ro.build_nonrel(g, 0)
        seasoned = ro.build_nonrel(g, 0, PerturbationSpec(varsigma=0.0, support_radius=4.0))
        np.testing.assert_array_equal(plain.diag, seasoned.diag)
        np.testing.assert_array_equal(plain.offdiag, seasoned.offdiag)

    def test_rejects_wide_support(self):
        g = ro.build_grid(50.0, 500)
        with pytest.raises(ValueError):
            ro.build_nonrel(g, 0, PerturbationSpec(varsigma=0.1, support_radius=30.0))

    def test_symmetry_invariant(self):
        g = ro.build_grid(40.0, 400)
        m = ro.build_nonrel(g, 1).matrix
        assert np.linalg.norm(m - m.T) <= 1e-12 * np.linalg.norm(m)

    def test_convergence_order(self):
        # halving h cuts the n=1 eigenvalue error by 4 (second-order scheme)
        errs = []
        for n_pts in (400, 800):
            g = ro.build_grid(40.0, n_pts)
            val = ro.eigensolve(ro.build_nonrel(g, 0), 1)[0].value
            errs.append(abs(val + 0.25))
        assert 3.5 <= errs[0] / errs[1] <= 4.5


class TestRel:
    def test_identity_of_the_two_kinetic_forms(self):
        g = ro.build_grid(50.0, 500)
        for beta in (0.05, 0.2, ro.BETA_CRITICAL):
            a = ro.rel_kinetic_matrix(g, 0, beta, form="rational")
            b = ro.rel_kinetic_matrix(g, 0, beta, form="sqrt")
            assert np.linalg.norm(a - b, 2) <= 1e-10 * np.linalg.norm(a, 2)

    def test_small_beta_limit(self):
        g = ro.build_grid(60.0, 1200)
        rel = ro.eigensolve(ro.build_rel(g, 0, 1e-4), 1)[0].value
        assert rel == pytest.approx(-0.25, rel=1e-3)

    def test_beta_domain(self):
        g = ro.build_grid(50.0, 500)
        with pytest.raises(ValueError):
            ro.build_rel(g, 0, 0.0)
        with pytest.raises(ValueError):
            ro.build_rel(g, 0, 0.7)  # past 2/pi

    def test_every_eigenvalue_below_nonrel(self):
        g = ro.build_grid(80.0, 800)
        rel = [p.value for p in ro.eigensolve(ro.build_rel(g, 0, 0.2), 3)]
        non = [p.value for p in ro.eigensolve(ro.build_nonrel(g, 0), 3)]
        assert all(a < b for a, b in zip(rel, non))

    def test_beta_monotonicity_small_case(self):
        g = ro.build_grid(80.0, 800)
        for l in (0, 1):
            mu_2 = {
                beta: ro.eigensolve(ro.build_rel(g, l, beta), 2 - l)[1 - l].value
                for beta in (0.05, 0.1, 0.2)
            }
            assert mu_2[0.2] < mu_2[0.1] < mu_2[0.05] <= -1.0 / 16.0 + 1e-9

    def test_family_matches_direct_construction(self):
        g = ro.build_grid(60.0, 600)
        fam = ro.solve_rel_family(g, 1, [0.1, 0.2], count=2)
        for beta in (0.1, 0.2):
            direct = ro.eigensolve(ro.build_rel(g, 1, beta), 2)
            for a, b in zip(fam[beta], direct):
                assert a.value == pytest.approx(b.value, abs=1e-12)

    def test_lipschitz_in_beta_squared(self):
        # |mu(b) - mu(b')| / |b^2 - b'^2| tracks n^-3 (l+1)^-1 with a
        # constant that stays within one order of magnitude over the scan
        g = ro.default_grid_for(4)
        consts = []
        for l in range(4):
            fam = ro.solve_rel_family(g, l, [0.05, 0.1], count=4 - l)
            for j in range(4 - l):
                n = l + 1 + j
                dmu = fam[0.05][j].value - fam[0.1][j].value
                c = dmu / ((0.1**2 - 0.05**2) * n**-3 / (l + 1))
                consts.append(c)
        consts = np.array(consts)
        assert np.all(consts > 0)
        assert np.max(consts) / np.min(consts) < 10.0

    def test_rel_tail_beyond_classical_region(self):
        # eigenvector mass far outside C0 n^2 undercuts fixed-power falloff
        g = ro.build_grid(144.0, 1440)
        w = ro.eigensolve(ro.build_rel(g, 0, 0.1), 3)[2].vector  # n = 3
        pts = g.points
        amp = np.abs(w)
        a54 = amp[np.argmin(np.abs(pts - 54.0))]
        a108 = amp[np.argmin(np.abs(pts - 108.0))]
        assert a108 / a54 <= 2.0**-4
        assert a108 / a54 <= 2.0**-6


class TestEigensolve:
    def test_orthonormal_in_grid_quadrature(self):
        g = ro.build_grid(100.0, 1000)
        pairs = ro.eigensolve(ro.build_nonrel(g, 0), 4)
        vecs = np.stack([p.vector for p in pairs], axis=1)
        gram = g.step * vecs.T @ vecs
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-10)

    def test_residuals(self):
        g = ro.build_grid(100.0, 1000)
        op = ro.build_nonrel(g, 0)
        m = op.matrix
        scale = np.linalg.norm(m, 2)
        for p in ro.eigensolve(op, 3):
            res = np.linalg.norm(m @ p.vector - p.value * p.vector)
            assert res <= 1e-8 * scale

    def test_values_ascending(self):
        g = ro.build_grid(100.0, 1000)
        vals = [p.value for p in ro.eigensolve(ro.build_nonrel(g, 1), 5)]
        assert vals == sorted(vals)

    def test_eigenvector_matches_closed_form(self):
        g = ro.build_grid(200.0, 4000)
        pair = ro.eigensolve(ro.build_nonrel(g, 0), 2)[1]  # (n, l) = (2, 0)
        exact = sf.reduced_radial(sf.QuantumNumbers(2, 0), g.points)
        vec = pair.vector.copy()
        if np.dot(vec, exact) < 0:
            vec = -vec
        dist = math.sqrt(g.step * np.sum((vec - exact) ** 2))
        assert dist <= 1e-3

    def test_count_validation(self):
        g = ro.build_grid(20.0, 200)
        with pytest.raises(ValueError):
            ro.eigensolve(ro.build_nonrel(g, 0), 0)
        with pytest.raises(ValueError):
            ro.eigensolve(ro.build_nonrel(g, 0), 500)


def test_rel_level_shift_constant_is_stable():
    # the gap -1/(4n^2) - mu_n(beta) scales like n^-3 with a constant
    # varying by less than a factor 2 across n (l = 0 column)
    beta = 0.2
    grid = ro.default_grid_for(12, span=6.0)
    fine = ro.solve_rel_family(grid, 0, [beta], count=12)[beta]
    coarse = ro.solve_rel_family(ro.coarsen(grid), 0, [beta], count=12)[beta]
    consts = []
    for j in range(3, 12):  # n = 4..12
        n = j + 1
        mu = (4.0 * fine[j].value - coarse[j].value) / 3.0
        gap = -1.0 / (4.0 * n**2) - mu
        assert gap > 0
        consts.append(gap * n**3)
    assert max(consts) / min(consts) < 2.0
