from fractions import Fraction

import pytest

from curvedkakeya.contact import (build_contact_matrix, bourgain_check,
                                  contact_order, genericity_sweep, rank)
from curvedkakeya.jets import EXACT, Jet
from curvedkakeya.phases import (Phase, hessian_along_curve, qterm_phase,
                                 standard_phase)

from conftest import random_phase

F = Fraction

QTERM_ROWS = {
    "h11": (2, 4, 0, 0),
    "h12": (0, 0, 6, 0),
    "h22": (2, 0, 0, 48),
    "det": (0, 8, 24, 0),
}


class TestBuildMatrix:
    def test_standard_rows(self):
        hc = hessian_along_curve(standard_phase(3), None, 4)
        cm = build_contact_matrix(hc, 4)
        rows = {str(lab): row for lab, row in zip(cm.labels, cm.rows)}
        assert rows["h11"] == (2, 0, 0, 0)
        assert rows["h12"] == (0, 0, 0, 0)
        assert rows["h22"] == (2, 0, 0, 0)
        assert rows["det"] == (0, 8, 0, 0)

    def test_qterm_rows(self):
        hc = hessian_along_curve(qterm_phase(), None, 4)
        cm = build_contact_matrix(hc, 4)
        rows = {str(lab): row for lab, row in zip(cm.labels, cm.rows)}
        assert rows == QTERM_ROWS

    def test_row_count_asserted(self, rng):
        for _ in range(5):
            hc = hessian_along_curve(random_phase(rng), None, 4)
            cm = build_contact_matrix(hc, 4)
            assert cm.num_rows == 4

    def test_low_l_rejected(self):
        hc = hessian_along_curve(qterm_phase(), None, 4)
        with pytest.raises(ValueError):
            build_contact_matrix(hc, 3)

    def test_low_columns_vanish_below_degree(self, rng):
        # a degree-k product row is O(t^k): columns h < k are zero
        p = random_phase(rng, n=4, order=21)
        hc = hessian_along_curve(p, None, 19)
        cm = build_contact_matrix(hc, 19)
        for lab, row in zip(cm.labels, cm.rows):
            deg = lab.degree if lab.kind == "product" else 3
            assert all(v == 0 for v in row[:deg - 1])


class TestRank:
    def test_qterm_full(self):
        hc = hessian_along_curve(qterm_phase(), None, 4)
        assert rank(build_contact_matrix(hc, 4))[0] == 4

    def test_qterm_determinant_value(self):
        from curvedkakeya.linalg import det_exact
        hc = hessian_along_curve(qterm_phase(), None, 4)
        cm = build_contact_matrix(hc, 4)
        assert det_exact([list(r) for r in cm.rows]) == 4608

    def test_standard_rank_two(self):
        hc = hessian_along_curve(standard_phase(3), None, 4)
        assert rank(build_contact_matrix(hc, 4))[0] == 2

    def test_float_agrees_with_exact(self, rng):
        for _ in range(10):
            p = random_phase(rng, order=7)
            hc = hessian_along_curve(p, None, 5)
            cm = build_contact_matrix(hc, 5)
            r_exact, _ = rank(cm)
            hc_f = hessian_along_curve(p.to_float(), None, 5)
            cm_f = build_contact_matrix(hc_f, 5)
            r_float, smin = rank(cm_f)
            assert r_float == r_exact


class TestContactOrder:
    def test_qterm_order_four(self):
        rep = contact_order(qterm_phase(), None, 4)
        assert rep.contact_order == 4
        assert rep.rank_at_lmax == 4

    def test_standard_never(self):
        rep = contact_order(standard_phase(3, order=10), None, 8)
        assert rep.contact_order is None
        assert rep.rank_at_lmax <= 2

    def test_rank_monotone_in_l(self):
        p = qterm_phase(order=9)
        ranks = []
        for l in range(4, 8):
            hc = hessian_along_curve(p, None, l)
            ranks.append(rank(build_contact_matrix(hc, l))[0])
        assert ranks == sorted(ranks)

    def test_json_shape(self):
        d = contact_order(qterm_phase(), None, 4).to_dict()
        assert set(d) == {"contact_order", "rank", "A_n", "sigma_min", "l_max"}

    def test_stable_at_noncentral_points(self):
        # the full-rank condition is open: nearby base points keep order 4
        p = qterm_phase(order=8)
        for point in [(F(1, 50), F(-1, 64), F(1, 50), F(1, 64), F(-1, 50)),
                      (F(0), F(0), F(1, 32), F(0), F(0))]:
            rep = contact_order(p, point, 6)
            assert rep.contact_order == 4

    def test_rank_invariant_under_y_permutation(self, rng):
        for _ in range(20):
            p = random_phase(rng)
            q = p.permute_y([1, 0])
            r1 = contact_order(p, None, 4).rank_at_lmax
            r2 = contact_order(q, None, 4).rank_at_lmax
            assert r1 == r2


class TestDimensionFour:
    def test_generic_perturbation_attains_minimal_order(self):
        # exercises degree-2 product rows and the 19-row matrix end to end
        from curvedkakeya.contact import perturbed_phase
        from curvedkakeya import counting
        a4 = counting.a_n(4)
        assert a4 == 19
        base = standard_phase(4, order=a4 + 2)
        p = perturbed_phase(base, a4, F(1, 8), seed=77, trial=0)
        rep = contact_order(p, None, a4)
        assert rep.contact_order == a4

    def test_standard_rank_caps_at_three(self):
        rep = contact_order(standard_phase(4, order=25), None, 23)
        assert rep.contact_order is None
        assert rep.rank_at_lmax == 3


class TestBourgain:
    def test_straight_lines(self):
        res = bourgain_check(standard_phase(3))
        assert res["holds"] and res["residual"] == 0.0

    def test_qterm_fails(self):
        res = bourgain_check(qterm_phase())
        assert not res["holds"] and res["residual"] > 0

    def test_proportional_family(self):
        # x.y + t h(y) + alpha t^2 h(y): second normal derivative is
        # proportional to the first with factor 2 alpha
        alpha = F(3, 2)
        nv = 5
        coeffs = {
            (1, 0, 0, 1, 0): 1, (0, 1, 0, 0, 1): 1,
            (0, 0, 1, 2, 0): 1, (0, 0, 1, 0, 2): 1,
            (0, 0, 2, 2, 0): alpha, (0, 0, 2, 0, 2): alpha,
        }
        p = Phase(3, Jet(nv, 6, coeffs, EXACT))
        res = bourgain_check(p)
        assert res["holds"]
        assert res["C"] == "3"  # 2 alpha


class TestGenericitySweep:
    def test_standard_base_perturbs_to_minimal_order(self):
        res = genericity_sweep(standard_phase(3), 4, F(1, 8), 25, seed=42)
        assert res["fraction"] >= 0.95

    def test_zero_magnitude_never(self):
        res = genericity_sweep(standard_phase(3), 4, F(0), 10, seed=42)
        assert res["fraction"] == 0.0

    def test_zero_trials_empty(self):
        res = genericity_sweep(standard_phase(3), 4, F(1, 8), 0, seed=42)
        assert res == {"trials": 0, "successes": 0, "fraction": None}

    def test_thread_count_invariant(self):
        a = genericity_sweep(standard_phase(3), 4, F(1, 8), 12, seed=3, threads=1)
        b = genericity_sweep(standard_phase(3), 4, F(1, 8), 12, seed=3, threads=4)
        assert a == b
