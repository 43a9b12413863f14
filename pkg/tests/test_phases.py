import random
from fractions import Fraction

import pytest

from curvedkakeya.jets import EXACT, Jet, jet_compose
from curvedkakeya.phases import (DegeneracyError, DomainError, Phase, curve_x0,
                                 gauss_map, hessian_along_curve, hormander_check,
                                 mixed_hessian, normalize_at, phase_from_json,
                                 phase_to_json, qterm_phase, standard_phase)

from conftest import random_phase

F = Fraction


def phase_with_terms(n, terms, order=6):
    nv = 2 * n - 1
    return Phase(n, Jet(nv, order, terms, EXACT))


def saddle_phase():
    # x.y + t(y1^2 - y2^2)
    return phase_with_terms(3, {
        (1, 0, 0, 1, 0): 1, (0, 1, 0, 0, 1): 1,
        (0, 0, 1, 2, 0): 1, (0, 0, 1, 0, 2): -1,
    })


def degenerate_phase():
    return phase_with_terms(3, {(1, 0, 0, 1, 0): 1})  # x1 y1 only


class TestHormander:
    def test_model_phase(self):
        rep = hormander_check(standard_phase(3))
        assert rep.h1_rank == 2
        assert rep.satisfies_h1 and rep.satisfies_h2 and rep.satisfies_h2_plus
        assert rep.h2_det == 4  # det(2 I)

    def test_saddle_h2_not_posdef(self):
        rep = hormander_check(saddle_phase())
        assert rep.satisfies_h2
        assert not rep.satisfies_h2_plus
        assert rep.h2_eigen_min < 0

    def test_degenerate_rank(self):
        rep = hormander_check(degenerate_phase())
        assert rep.h1_rank == 1
        assert not rep.satisfies_h1

    def test_point_outside_box(self):
        with pytest.raises(DomainError):
            hormander_check(standard_phase(3), (F(1), 0, 0, 0, 0))

    def test_sampled_certification(self):
        rep = hormander_check(standard_phase(3), samples=5, seed=1)
        assert rep.sampled_points_ok is True

    def test_float_backend_agrees(self):
        rep = hormander_check(qterm_phase().to_float())
        assert rep.h1_rank == 2 and rep.satisfies_h2_plus


class TestGaussMap:
    def test_model_phase_vertical(self):
        assert gauss_map(standard_phase(3)) == [0, 0, 1]

    def test_general_quadratic_at_zero(self):
        p = phase_with_terms(3, {
            (1, 0, 0, 1, 0): 1, (0, 1, 0, 0, 1): 1,
            (0, 0, 1, 2, 0): 2, (0, 0, 1, 1, 1): 3, (0, 0, 1, 0, 2): -1,
        })
        g = gauss_map(p)
        assert g[0] == 0 and g[1] == 0 and g[2] != 0

    def test_degenerate_raises(self):
        with pytest.raises(DegeneracyError):
            gauss_map(degenerate_phase())

    def test_orthogonality_random(self, rng):
        # the wedge is exactly orthogonal to each column, 100 random phases
        for _ in range(100):
            p = random_phase(rng)
            g = gauss_map(p)
            m = mixed_hessian(p, p.origin_point())
            for j in range(p.n - 1):
                assert sum(g[a] * m[a][j] for a in range(p.n)) == 0


class TestNormalize:
    def test_normal_form_fixed_point(self):
        p = standard_phase(3)
        assert normalize_at(p).jet == p.jet

    def test_idempotent(self, rng):
        for _ in range(10):
            p = random_phase(rng)
            p0 = normalize_at(p)
            assert normalize_at(p0).jet == p0.jet

    def test_no_pure_y_terms(self, rng):
        p = random_phase(rng)
        # shift to a noncentral point: pure-y monomials appear, then vanish
        point = (F(1, 64), F(-1, 32), F(1, 100), F(1, 64), F(0))
        p0 = normalize_at(p, point)
        for exps, _ in p0.jet.items():
            assert any(exps[i] != 0 for i in range(p.n))


class TestCurve:
    def test_translation_invariant_closed_form(self):
        # x.y + t h(y): X0(t) = -t grad h(y0)
        p = standard_phase(3, order=8)
        y0 = (F(1, 16), F(-1, 32))
        point = (F(0), F(0), F(0)) + y0
        x0 = curve_x0(p, point, 4)
        assert x0[0].coeffs == {(1,): -2 * y0[0]}
        assert x0[1].coeffs == {(1,): -2 * y0[1]}

    def test_center_curve_trivial(self):
        for p in (standard_phase(3), qterm_phase()):
            x0 = curve_x0(p, None, 4)
            assert all(x.is_zero() for x in x0)

    def test_defining_identity_random(self, rng):
        # substitute the curve back: residual is the zero jet
        for _ in range(25):
            p = random_phase(rng)
            order = p.order - 2
            x0 = curve_x0(p, None, order)
            p0 = normalize_at(p)
            t_jet = Jet.variable(0, 1, order, EXACT)
            zero = Jet.zero(1, order, EXACT)
            inner = [x.truncate(order) for x in x0] + [t_jet] + [zero] * (p.n - 1)
            from curvedkakeya.jets import jet_diff
            for yi in p0.y_vars():
                g = jet_diff(p0.jet, yi).truncate(order)
                res = jet_compose(g, inner)
                res = res - Jet.constant(res.constant_term(), 1, order, EXACT)
                assert res.is_zero()

    def test_order_bound(self):
        with pytest.raises(DomainError):
            curve_x0(standard_phase(3, order=4), None, 4)


class TestHessianAlongCurve:
    def test_scaled_identity(self):
        a = [[F(1), F(2)], [F(2), F(5)]]
        p = standard_phase(3, matrix=a, order=8)
        hc = hessian_along_curve(p, None, 4)
        for i in range(2):
            for j in range(2):
                assert hc.entries[i][j].coeffs == ({(1,): 2 * a[i][j]} if a[i][j] else {})
        # det(2tA) = 4 det(A) t^2
        assert hc.det_jet.coeffs == {(2,): 4 * (a[0][0] * a[1][1] - a[0][1] * a[1][0])}

    def test_power_of_dimension(self):
        p = standard_phase(4, order=8)
        hc = hessian_along_curve(p, None, 5)
        assert hc.det_jet.coeffs == {(3,): 8}  # 2^{n-1} det(I) t^{n-1}

    def test_qterm_entries(self):
        hc = hessian_along_curve(qterm_phase(), None, 4)
        assert hc.entries[0][0].coeffs == {(1,): 2, (2,): 2}
        assert hc.entries[0][1].coeffs == {(3,): 1}
        assert hc.entries[1][1].coeffs == {(1,): 2, (4,): 2}

    def test_symmetry_exact(self, rng):
        p = random_phase(rng)
        hc = hessian_along_curve(p, None, 4)
        for i in range(2):
            for j in range(2):
                assert hc.entries[i][j] == hc.entries[j][i]

    def test_entries_vanish_at_zero(self, rng):
        for _ in range(5):
            p = random_phase(rng)
            hc = hessian_along_curve(p, None, 4)
            assert all(e.constant_term() == 0 for row in hc.entries for e in row)

    def test_permutation_equivariance(self, rng):
        for _ in range(10):
            p = random_phase(rng)
            perm = [1, 0]
            q = p.permute_y(perm)
            hp = hessian_along_curve(p, None, 4)
            hq = hessian_along_curve(q, None, 4)
            for i in range(2):
                for j in range(2):
                    assert hq.entries[perm[i]][perm[j]] == hp.entries[i][j]

    def test_order_check(self):
        with pytest.raises(DomainError):
            hessian_along_curve(qterm_phase(order=5), None, 4)


class TestSerialization:
    def test_roundtrip_bit_exact(self, rng):
        p = random_phase(rng)
        q = phase_from_json(phase_to_json(p))
        assert q.jet == p.jet and q.center == p.center and q.eps0 == p.eps0

    def test_schema_fields(self):
        d = phase_to_json(qterm_phase())
        assert set(d) == {"n", "center", "order", "eps0", "terms"}
        assert d["eps0"] == "1/10"
        assert all(set(t) == {"exps", "coef"} for t in d["terms"])
