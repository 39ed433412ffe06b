import math

import numpy as np
import pytest

from coulomb_spectral import clusters as cl
from coulomb_spectral import projectors as pj
from coulomb_spectral import radial_operator as ro
from coulomb_spectral.perturbation import PerturbationSpec


@pytest.fixture(scope="module")
def op_small():
    grid = ro.default_grid_for(3)  # r_max = 72
    return ro.build_nonrel(grid, 0)


@pytest.fixture(scope="module")
def contour_n2(op_small):
    values = [p.value for p in ro.eigensolve(op_small, 4)]
    return pj.cluster_contour(values, 2)


class TestSchatten:
    def test_norms_of_a_known_matrix(self):
        m = np.diag([3.0, -1.0, 0.0])
        assert pj.schatten_norm(m, 1) == pytest.approx(4.0)
        assert pj.schatten_norm(m, 2) == pytest.approx(math.sqrt(10.0))
        assert pj.schatten_norm(m, np.inf) == pytest.approx(3.0)

    def test_rejects_unknown_tag(self):
        with pytest.raises(ValueError):
            pj.schatten_norm(np.eye(2), 3)


class TestContourProjector:
    def test_rank_one_ground_state(self, op_small):
        values = [p.value for p in ro.eigensolve(op_small, 3)]
        contour = pj.cluster_contour(values, 1)
        p = pj.projector_contour(op_small, contour)
        d = pj.projector_defects(p)
        assert d["trace"] == pytest.approx(1.0, abs=1e-6)
        assert d["idempotency"] <= 1e-8
        assert d["symmetry"] <= 1e-10

    def test_matches_eigensum(self, op_small, contour_n2):
        pc = pj.projector_contour(op_small, contour_n2)
        pe = pj.projector_eigensum(
            op_small, contour_n2.center - contour_n2.radius, contour_n2.center + contour_n2.radius
        )
        assert np.linalg.norm(pc.matrix - pe.matrix, 2) <= 1e-6

    def test_node_doubling_stability(self, op_small, contour_n2):
        p32 = pj.projector_contour(op_small, pj.Contour(contour_n2.center, contour_n2.radius, 32))
        p64 = pj.projector_contour(op_small, contour_n2)
        p128 = pj.projector_contour(
            op_small, pj.Contour(contour_n2.center, contour_n2.radius, 128)
        )
        assert np.linalg.norm(p32.matrix - p64.matrix, 2) <= 1e-8
        assert np.linalg.norm(p64.matrix - p128.matrix, 2) <= 1e-8

    def test_gauge_independence(self, op_small, contour_n2):
        base = pj.projector_contour(op_small, contour_n2)
        shrunk = pj.projector_contour(
            op_small, pj.Contour(contour_n2.center, 0.8 * contour_n2.radius, 64)
        )
        assert np.linalg.norm(base.matrix - shrunk.matrix, 2) <= 1e-8

    def test_weighted_trace_counts_cluster_states(self):
        # 3-D trace of the cluster-2 projector: sum over l of (2l+1) ranks
        grid = ro.default_grid_for(3)
        total = 0.0
        for l in (0, 1):
            op = ro.build_nonrel(grid, l)
            values = [p.value for p in ro.eigensolve(op, 3 - l)]
            contour = pj.cluster_contour(values, 2)
            p = pj.projector_contour(op, contour)
            total += (2 * l + 1) * np.trace(p.matrix)
        assert total == pytest.approx(4.0, abs=1e-6)

    def test_dense_operator_route(self):
        grid = ro.build_grid(60.0, 600)
        op = ro.build_rel(grid, 0, 0.1)
        values = [p.value for p in ro.eigensolve(op, 3)]
        contour = pj.cluster_contour(values, 1, n_quad=32)
        p = pj.projector_contour(op, contour)
        assert pj.projector_defects(p)["trace"] == pytest.approx(1.0, abs=1e-6)

    def test_bad_contour_raises(self, op_small):
        # circle straddling an eigenvalue cannot be idempotent
        bad = pj.Contour(center=-0.25, radius=0.25 - 1.0 / 16.0, n_quad=16)
        with pytest.raises(pj.ProjectorQualityError):
            pj.projector_contour(op_small, bad)


class TestResolventSeries:
    def test_zero_coupling_terms_vanish(self, op_small, contour_n2):
        pert = PerturbationSpec(varsigma=0.0, support_radius=4.0)
        terms = pj.resolvent_series_terms(op_small, pert, contour_n2, 2)
        for t in terms:
            assert np.linalg.norm(t, 2) == pytest.approx(0.0, abs=1e-30)

    def test_partial_sums_converge(self, op_small, contour_n2):
        pert = PerturbationSpec(varsigma=1e-3, support_radius=4.0)
        op1 = ro.build_nonrel(op_small.grid, 0, pert)
        p1 = pj.projector_contour(op1, contour_n2)
        p0 = pj.projector_contour(op_small, contour_n2)
        target = p1.matrix - p0.matrix
        terms = pj.resolvent_series_terms(op_small, pert, contour_n2, 3)
        errs = []
        acc = np.zeros_like(target)
        for t in terms:
            acc += t
            errs.append(np.linalg.norm(target - acc, 2))
        assert errs[0] < np.linalg.norm(target, 2)
        assert errs[1] < 0.1 * errs[0]
        assert errs[2] <= errs[1]

    def test_first_order_matches_finite_differences(self, op_small):
        # d/ds sum of cluster-2 eigenvalues at s=0 equals -Tr[U pi0_2]
        grid = op_small.grid
        pert = lambda s: PerturbationSpec(varsigma=s, support_radius=4.0)
        u = pert(1.0).values(grid.points)
        tr = 0.0
        for l in (0, 1):
            pair = cl.solve_cached(grid, l, 0.0, None, 2 - l)[1 - l]
            tr += (2 * l + 1) * grid.step * float(np.sum(u * pair.vector**2))
        h = 1e-4
        def cluster_sum(s):
            total = 0.0
            for l in (0, 1):
                pairs = cl.solve_cached(grid, l, 0.0, pert(s) if s else None, 2 - l)
                total += (2 * l + 1) * pairs[1 - l].value
            return total
        deriv = (cluster_sum(h) - cluster_sum(0.0)) / h
        assert deriv == pytest.approx(-tr, rel=1e-3)


class TestLemma:
    def test_identical_projectors(self):
        p = pj.ProjectorMatrix(np.diag([1.0, 1.0, 0.0, 0.0]), 0, "eigensum")
        for tag in (1, 2, np.inf):
            rec = pj.projector_lemma_check(p, p, tag)
            assert rec["applicable"]
            assert rec["lhs"] == pytest.approx(0.0, abs=1e-14)
            assert rec["holds"]

    def test_two_dimensional_closed_form(self):
        for phi in (0.1, 0.4, math.pi / 8):
            p0 = pj.ProjectorMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]), 0, "eigensum")
            c, s = math.cos(phi), math.sin(phi)
            v = np.array([c, s])
            p = pj.ProjectorMatrix(np.outer(v, v), 0, "eigensum")
            rec = pj.projector_lemma_check(p, p0, np.inf)
            assert rec["epsilon"] == pytest.approx(abs(s), rel=1e-10)
            assert rec["lhs"] == pytest.approx(abs(s), rel=1e-10)
            assert rec["rhs"] == pytest.approx(2 * abs(s) / (1 - abs(s)), rel=1e-10)
            assert rec["holds"]

    def test_randomized_trials(self):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 200:
            dim = int(rng.integers(4, 51))
            rank = int(rng.integers(1, min(10, dim - 1) + 1))
            q0, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
            p0 = q0[:, :rank] @ q0[:, :rank].T
            gen = rng.normal(size=(dim, dim)) * rng.uniform(0.01, 0.5) / dim
            skew = gen - gen.T
            from scipy.linalg import expm

            q = expm(skew)
            p = q @ p0 @ q.T
            rec0 = pj.projector_lemma_check(
                pj.ProjectorMatrix(p, 0, "eigensum"), pj.ProjectorMatrix(p0, 0, "eigensum"), 1
            )
            if not rec0["applicable"]:
                continue
            for tag in (1, 2, np.inf):
                rec = pj.projector_lemma_check(
                    pj.ProjectorMatrix(p, 0, "eigensum"),
                    pj.ProjectorMatrix(p0, 0, "eigensum"),
                    tag,
                )
                assert rec["holds"], f"lemma violated at dim={dim} rank={rank} p={tag}"
            checked += 1

    def test_inapplicable_is_reported_not_failed(self):
        p0 = pj.ProjectorMatrix(np.diag([1.0, 0.0]), 0, "eigensum")
        p1 = pj.ProjectorMatrix(np.diag([0.0, 1.0]), 0, "eigensum")
        rec = pj.projector_lemma_check(p1, p0, 1)
        assert not rec["applicable"]


class TestTraceFunctionals:
    def test_zero_coupling(self):
        grid = ro.default_grid_for(3)
        pert = PerturbationSpec(varsigma=0.0, support_radius=4.0)
        rec = pj.trace_functionals(grid, 0.0, pert, 2)
        assert rec["tr_U_dpi"] == 0.0

    def test_constructed_cancellation(self):
        # a profile with zero overlap against the (1,0) density kills Tr[U pi0_1]
        grid = ro.default_grid_for(2)
        pair = cl.solve_cached(grid, 0, 0.0, None, 1)[0]
        w2 = pair.vector**2
        mask = grid.points <= 4.0
        cum = np.cumsum(w2 * mask)
        split = grid.points[np.searchsorted(cum, 0.5 * cum[mask.sum() - 1])]
        a = float(grid.step * np.sum(w2[(grid.points <= split)]))
        b = float(grid.step * np.sum(w2[(grid.points > split) & mask]))
        big = max(a, b)
        radii = np.array([0.0, split, split + 1e-9, 4.0])
        # amplitudes b/big and -a/big cancel the overlap while keeping |U| <= 1
        values = np.array([b / big, b / big, -a / big, -a / big])
        assert np.max(np.abs(values)) <= 1.0 + 1e-9
        pert = PerturbationSpec(
            varsigma=1e-3, support_radius=4.0, profile="custom", table=(radii, values)
        )
        rec = pj.trace_functionals(grid, 0.0, pert, 1)
        full = PerturbationSpec(varsigma=1e-3, support_radius=4.0)
        ref = pj.trace_functionals(grid, 0.0, full, 1)
        assert abs(rec["tr_U_pi0"]) <= 1e-6 * abs(ref["tr_U_pi0"])

    def test_box_scale_bounded_over_n(self):
        grid = ro.default_grid_for(5)
        pert = PerturbationSpec(varsigma=1e-3, support_radius=4.0)
        ratios = []
        for n in range(1, 6):
            rec = pj.trace_functionals(grid, 0.0, pert, n)
            ratios.append(abs(rec["tr_U_pi0"]) / rec["ref_pi0"])
        assert max(ratios) < 1.0
        assert max(ratios) / min(ratios) < 20.0


class TestSumRule:
    def test_zero_coupling_identity(self):
        grid = ro.default_grid_for(3)
        pert = PerturbationSpec(varsigma=0.0, support_radius=4.0)
        rep = pj.sum_rule(grid, 0.0, pert, 3, nodes=4)
        assert rep["lhs"] == 0.0
        assert rep["rhs"] == 0.0

    def test_identity_defect_small(self):
        grid = ro.default_grid_for(4)
        pert = PerturbationSpec(varsigma=1e-3, support_radius=4.0)
        rep = pj.sum_rule(grid, 0.0, pert, 4, nodes=16)
        assert rep["rel_defect"] <= 1e-4
        for rec in rep["per_cluster"]:
            assert abs(rec["defect"]) <= 1e-5

    def test_truncation_mismatch_detected(self):
        grid = ro.default_grid_for(3)
        pert = PerturbationSpec(varsigma=0.2, support_radius=8.0)
        with pytest.raises(pj.TruncationMismatch):
            pj.sum_rule(grid, 0.0, pert, 3, nodes=4)


def _opnorm_sym(m):
    """Operator norm of a symmetric matrix by Lanczos (SVD is too slow here)."""
    from scipy.sparse.linalg import eigsh

    return float(abs(eigsh(m, k=1, which="LM", return_eigenvectors=False, tol=1e-6)[0]))


def _projector_norm_3d(grid, pert, n, n_solve):
    """max over l-blocks of ||pi_n - pi0_n|| (block structure of the 3-D norm)."""
    norms = []
    for l in range(n):
        op0 = ro.build_nonrel(grid, l)
        op1 = ro.build_nonrel(grid, l, pert)
        values = [p.value for p in ro.eigensolve(op0, n_solve - l)]
        contour = pj.cluster_contour(values, n, n_quad=32)
        p0 = pj.projector_contour(op0, contour)
        p1 = pj.projector_contour(op1, contour)
        norms.append(_opnorm_sym(p1.matrix - p0.matrix))
    return max(norms)


class TestProjectorNormEnvelopes:
    def test_bulk_norm_envelope_constant_stable(self):
        # ||pi_n - pi0_n|| / varsigma against the logarithmic envelope
        # r^(3/2)(1+|log(r n^-2)|) + n^(1/2) r^(3/4): the fitted multiple
        # stays within a factor 3 across the n range
        grid = ro.default_grid_for(6)
        r = 4.0
        s = 1e-3
        pert = PerturbationSpec(varsigma=s, support_radius=r)
        consts = []
        for n in (2, 3, 4, 5):
            measured = _projector_norm_3d(grid, pert, n, 6) / s
            ref = r**1.5 * (1 + abs(math.log(r / n**2))) + math.sqrt(n) * r**0.75
            consts.append(measured / ref)
        assert max(consts) / min(consts) <= 3.0

    def test_annulus_norm_suppression_where_asymptotics_hold(self):
        # far annulus: the projector moves less than varsigma * r^-2 once the
        # eigenfunction amplitude on the annulus is small enough (r = 60, n = 1)
        s = 1e-3
        pert = PerturbationSpec(varsigma=s, support_radius=60.0, inner_radius=30.0)
        grid = ro.default_grid_for(2, span=34.0)
        measured = _projector_norm_3d(grid, pert, 1, 3) / s
        assert measured <= 60.0**-2


class TestTwoPerturbation:
    @pytest.fixture(scope="class")
    def setup(self):
        grid = ro.default_grid_for(3)
        u = PerturbationSpec(varsigma=1.0, support_radius=4.0)
        phi = PerturbationSpec(varsigma=1.0, support_radius=4.0, profile="bump")
        return grid, u, phi

    def test_zero_epsilon(self, setup):
        grid, u, phi = setup
        rec = pj.two_perturbation_trace(grid, 0.0, u, phi, 1e-3, 0.0, 3)
        assert rec["value"] == 0.0

    def test_zero_varsigma(self, setup):
        grid, u, phi = setup
        rec = pj.two_perturbation_trace(grid, 0.0, u, phi, 0.0, 1e-3, 3)
        assert rec["value"] == 0.0

    def test_ratio_to_reference_bounded(self, setup):
        grid, u, phi = setup
        for s in (1e-3, 1e-2):
            for e in (1e-3, 1e-2):
                rec = pj.two_perturbation_trace(grid, 0.0, u, phi, s, e, 3)
                assert abs(rec["value"]) <= rec["ref_scale"]
