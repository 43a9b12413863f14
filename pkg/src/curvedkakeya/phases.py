"""Phase functions as jets: non-degeneracy checks, the Gauss map, the solution
curve through a base point, and the Hessian entries along that curve.

A phase lives on B^{n-1} x B^1 x B^{n-1} with variables ordered
(x_1..x_{n-1}, t, y_1..y_{n-1}); the jet is centered at ``center`` and the
neighborhood radius is ``eps0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg
from .jets import (EXACT, Jet, JetError, jet_add, jet_compose, jet_diff,
                   jet_mul, jet_shift, jet_to_float)
from .serialize import fraction_from_str, fraction_to_str

DEFAULT_EPS0 = Fraction(1, 10)


class DomainError(ValueError):
    """Analysis point outside the eps0 box, or jet order too low."""


class DegeneracyError(ValueError):
    """A non-degeneracy hypothesis fails where it is required."""


@dataclass(frozen=True)
class HormanderReport:
    h1_rank: int
    h2_det: object
    h2_eigen_min: float
    satisfies_h1: bool
    satisfies_h2: bool
    satisfies_h2_plus: bool
    sampled_points_ok: bool | None = None

    def to_dict(self) -> dict:
        det = self.h2_det
        return {
            "h1_rank": self.h1_rank,
            "h2_det": fraction_to_str(det) if isinstance(det, Fraction) else float(det),
            "h2_eigen_min": float(self.h2_eigen_min),
            "satisfies_h1": self.satisfies_h1,
            "satisfies_h2": self.satisfies_h2,
            "satisfies_h2_plus": self.satisfies_h2_plus,
            "sampled_points_ok": self.sampled_points_ok,
        }


@dataclass(frozen=True)
class HessianCurve:
    """Second y-derivatives along the solution curve, as t-jets.

    ``entries[i][j]`` vanishes at t = 0 (the reference Hessian at the base
    point is part of the normalization) and ``det_jet`` is the determinant of
    the entry matrix computed in jet arithmetic.
    """

    n: int
    entries: tuple[tuple[Jet, ...], ...]
    det_jet: Jet
    base_point: tuple


class Phase:
    """A phase function jet with its Hormander metadata."""

    def __init__(self, n: int, jet: Jet, center: Sequence | None = None,
                 eps0=DEFAULT_EPS0):
        if n < 3:
            raise ValueError("space dimension must be at least 3")
        if jet.num_vars != 2 * n - 1:
            raise ValueError(f"phase jet needs {2 * n - 1} variables, got {jet.num_vars}")
        self.n = n
        self.jet = jet
        if center is None:
            center = (Fraction(0),) * (2 * n - 1)
        if len(center) != 2 * n - 1:
            raise ValueError("center has wrong arity")
        if jet.backend == EXACT:
            center = tuple(Fraction(c) for c in center)
        else:
            center = tuple(float(c) for c in center)
        self.center = center
        self.eps0 = Fraction(eps0) if jet.backend == EXACT else float(eps0)

    # -- variable layout helpers -------------------------------------------

    @property
    def order(self) -> int:
        return self.jet.order

    @property
    def backend(self) -> str:
        return self.jet.backend

    def x_vars(self) -> list[int]:
        return list(range(self.n - 1))

    @property
    def t_var(self) -> int:
        return self.n - 1

    def y_vars(self) -> list[int]:
        return list(range(self.n, 2 * self.n - 1))

    def xt_vars(self) -> list[int]:
        return list(range(self.n))

    def to_float(self) -> "Phase":
        return Phase(self.n, jet_to_float(self.jet),
                     tuple(float(c) for c in self.center), float(self.eps0))

    def with_order(self, order: int) -> "Phase":
        return Phase(self.n, self.jet.with_order(order), self.center, self.eps0)

    def permute_y(self, perm: Sequence[int]) -> "Phase":
        """Relabel the y variables (and matching x variables) by a permutation
        of {0..n-2}; the t variable is fixed."""
        full = list(range(2 * self.n - 1))
        for i, p in enumerate(perm):
            full[i] = p                       # x block
            full[self.n + i] = self.n + p     # y block
        jet = self.jet.permute_vars(full)
        center = list(self.center)
        for i, p in enumerate(perm):
            center[p] = self.center[i]
            center[self.n + p] = self.center[self.n + i]
        return Phase(self.n, jet, tuple(center), self.eps0)

    # -- recentring ----------------------------------------------------------

    def _check_point(self, point: Sequence) -> tuple:
        if len(point) != 2 * self.n - 1:
            raise DomainError("analysis point has wrong arity")
        if self.backend == EXACT:
            point = tuple(Fraction(c) for c in point)
        else:
            point = tuple(float(c) for c in point)
        for p, c in zip(point, self.center):
            if abs(p - c) > self.eps0:
                raise DomainError(f"point outside the eps0 box (|{p} - {c}| > {self.eps0})")
        return point

    def shifted_jet(self, point: Sequence) -> Jet:
        """The phase jet re-centered at ``point`` (exact Taylor shift)."""
        point = self._check_point(point)
        offsets = [p - c for p, c in zip(point, self.center)]
        if all(o == 0 for o in offsets):
            return self.jet
        return jet_shift(self.jet, offsets)

    def origin_point(self) -> tuple:
        return self.center


def phase_from_json(data) -> Phase:
    if isinstance(data, str):
        data = json.loads(data)
    n = int(data["n"])
    order = int(data["order"])
    nv = 2 * n - 1
    coeffs = {}
    for term in data["terms"]:
        exps = tuple(int(e) for e in term["exps"])
        coeffs[exps] = fraction_from_str(term["coef"])
    jet = Jet(nv, order, coeffs, EXACT)
    center = tuple(fraction_from_str(c) for c in data.get("center", ["0"] * nv))
    eps0 = fraction_from_str(data.get("eps0", "1/10"))
    return Phase(n, jet, center, eps0)


def phase_to_json(p: Phase) -> dict:
    if p.backend != EXACT:
        raise ValueError("only exact phases serialize losslessly")
    return {
        "n": p.n,
        "center": [fraction_to_str(c) for c in p.center],
        "order": p.order,
        "eps0": fraction_to_str(p.eps0),
        "terms": [{"exps": list(exps), "coef": fraction_to_str(c)}
                  for exps, c in p.jet.items()],
    }


# -- standard constructions --------------------------------------------------


def standard_phase(n: int, matrix=None, order: int = 6) -> Phase:
    """x . y + t <y, A y> with A symmetric non-degenerate (identity default)."""
    nv = 2 * n - 1
    coeffs: dict[tuple, Fraction] = {}
    for i in range(n - 1):
        exps = [0] * nv
        exps[i] = 1
        exps[n + i] = 1
        coeffs[tuple(exps)] = Fraction(1)
    for i in range(n - 1):
        for j in range(n - 1):
            a = Fraction(matrix[i][j]) if matrix is not None else (Fraction(1) if i == j else Fraction(0))
            if a == 0:
                continue
            exps = [0] * nv
            exps[n - 1] = 1
            exps[n + i] += 1
            exps[n + j] += 1
            key = tuple(exps)
            coeffs[key] = coeffs.get(key, Fraction(0)) + a
    return Phase(n, Jet(nv, order, coeffs, EXACT))


def qterm_phase(order: int = 6) -> Phase:
    """The R^3 contact-order-4 workhorse:
    x.y + t(y1^2+y2^2) + t^2 y1^2 + t^3 y1 y2 + t^4 y2^2."""
    nv = 5
    c: dict[tuple, Fraction] = {}
    c[(1, 0, 0, 1, 0)] = Fraction(1)   # x1 y1
    c[(0, 1, 0, 0, 1)] = Fraction(1)   # x2 y2
    c[(0, 0, 1, 2, 0)] = Fraction(1)   # t y1^2
    c[(0, 0, 1, 0, 2)] = Fraction(1)   # t y2^2
    c[(0, 0, 2, 2, 0)] = Fraction(1)   # t^2 y1^2
    c[(0, 0, 3, 1, 1)] = Fraction(1)   # t^3 y1 y2
    c[(0, 0, 4, 0, 2)] = Fraction(1)   # t^4 y2^2
    return Phase(3, Jet(nv, order, c, EXACT))


def compressed_phase(order: int = 6) -> Phase:
    """Classical hyperbolic phase x.y + t y1 y2 + (t^2/2) y2^2 whose curve
    family admits anchors that press every curve into the surface x2 = t x1."""
    nv = 5
    c: dict[tuple, Fraction] = {}
    c[(1, 0, 0, 1, 0)] = Fraction(1)
    c[(0, 1, 0, 0, 1)] = Fraction(1)
    c[(0, 0, 1, 1, 1)] = Fraction(1)
    c[(0, 0, 2, 0, 2)] = Fraction(1, 2)
    return Phase(3, Jet(nv, order, c, EXACT))


# -- derivative extraction ---------------------------------------------------


def _second_partial_value(jet: Jet, a: int, b: int):
    """d^2 jet / dv_a dv_b at the jet's center."""
    exps = [0] * jet.num_vars
    exps[a] += 1
    exps[b] += 1
    c = jet.coefficient(tuple(exps))
    return c * 2 if a == b else c


def mixed_hessian(p: Phase, point) -> list[list]:
    """The n x (n-1) matrix of d_{x_a} d_{y_j} phi at the point (x = (x,t))."""
    jet = p.shifted_jet(point)
    return [[_second_partial_value(jet, a, y) for y in p.y_vars()]
            for a in p.xt_vars()]


def hormander_check(p: Phase, point=None, rank_tol: float = 1e-8,
                    det_tol: float = 0.0, samples: int = 0,
                    magnitude=Fraction(1, 100), seed: int = 0) -> HormanderReport:
    """Check the rank and curvature non-degeneracy conditions at a point.

    This is a finite certification: the conditions are evaluated at the
    analysis point (plus ``samples`` seeded perturbed points when requested),
    not over the whole eps0 box.
    """
    if point is None:
        point = p.origin_point()
    if p.order < 3:
        raise DomainError("jet order must be at least 3")
    report = _hormander_at(p, point, rank_tol, det_tol)
    sampled_ok = None
    if samples > 0:
        from .randutil import child_rng, dyadic_uniform
        sampled_ok = True
        shrink = Fraction(1, 2)
        for trial in range(samples):
            rng = child_rng(seed, "hormander", trial)
            if p.backend == EXACT:
                delta = [dyadic_uniform(rng, Fraction(magnitude) * shrink)
                         for _ in range(2 * p.n - 1)]
                q = [c + d for c, d in zip(point, delta)]
            else:
                q = [c + float(magnitude) * (2 * rng.random() - 1) * float(shrink)
                     for c in point]
            sub = _hormander_at(p, q, rank_tol, det_tol)
            if not (sub.satisfies_h1 and sub.satisfies_h2):
                sampled_ok = False
                break
    return HormanderReport(report.h1_rank, report.h2_det, report.h2_eigen_min,
                           report.satisfies_h1, report.satisfies_h2,
                           report.satisfies_h2_plus, sampled_ok)


def _hormander_at(p: Phase, point, rank_tol: float, det_tol: float) -> HormanderReport:
    jet = p.shifted_jet(point)
    mixed = [[_second_partial_value(jet, a, y) for y in p.y_vars()]
             for a in p.xt_vars()]
    if p.backend == EXACT:
        h1_rank = linalg.rank_exact(mixed)
    else:
        h1_rank, _ = linalg.rank_float(mixed, rank_tol)
    satisfies_h1 = h1_rank == p.n - 1

    if satisfies_h1:
        g0 = linalg.wedge_columns(mixed)
    else:
        g0 = None

    if g0 is None:
        zero = Fraction(0) if p.backend == EXACT else 0.0
        return HormanderReport(h1_rank, zero, 0.0, False, False, False)

    # s(y) = < grad_x phi (x0,t0; y), G0 >, Hessian in y at y = y0
    curv = [[None] * (p.n - 1) for _ in range(p.n - 1)]
    for a in p.xt_vars():
        da = jet_diff(jet, a).restrict_zero(p.xt_vars())
        for ii, yi in enumerate(p.y_vars()):
            for jj, yj in enumerate(p.y_vars()):
                v = _second_partial_value(da, yi, yj) * g0[a]
                curv[ii][jj] = v if curv[ii][jj] is None else curv[ii][jj] + v

    if p.backend == EXACT:
        h2_det = linalg.det_exact(curv)
        satisfies_h2 = h2_det != 0
        pos_def = satisfies_h2 and linalg.is_positive_definite_exact(curv)
        eig_min = float(np.linalg.eigvalsh(np.array(curv, dtype=float)).min())
    else:
        arr = np.array(curv, dtype=float)
        h2_det = float(np.linalg.det(arr))
        scale = float(max(np.abs(arr).max(), 1.0))
        tol = det_tol if det_tol > 0 else 1e-10 * scale ** (p.n - 1)
        satisfies_h2 = bool(abs(h2_det) > tol)
        eigs = np.linalg.eigvalsh((arr + arr.T) / 2)
        eig_min = float(eigs.min())
        pos_def = bool(satisfies_h2 and eig_min > 0)
    return HormanderReport(h1_rank, h2_det, eig_min, satisfies_h1,
                           satisfies_h2, bool(pos_def))


def gauss_map(p: Phase, point=None):
    """Wedge of the n-1 vectors d_{y_j} grad_x phi: the (unnormalized) normal
    direction; vanishes exactly when the rank condition fails."""
    if point is None:
        point = p.origin_point()
    mixed = mixed_hessian(p, point)
    g0 = linalg.wedge_columns(mixed)
    if all(v == 0 for v in g0):
        raise DegeneracyError("zero wedge: rank condition fails at the point")
    return g0


def normalize_at(p: Phase, point=None) -> Phase:
    """Re-center at ``point`` and subtract the pure-y restriction, so the
    returned phase vanishes identically at x = 0, t = 0."""
    if point is None:
        point = p.origin_point()
    jet = p.shifted_jet(point)
    xt = set(p.xt_vars())
    kept = {e: c for e, c in jet.coeffs.items() if any(e[i] != 0 for i in xt)}
    jet0 = Jet(jet.num_vars, jet.order, kept, jet.backend, _trusted=True)
    point = p._check_point(point)
    return Phase(p.n, jet0, point, p.eps0)


def curve_x0(p: Phase, point=None, order: int | None = None) -> list[Jet]:
    """The x-components of the solution curve through the point: t-jets X0
    with X0(0) = 0 and grad_y phi(X0(t)+x0, t+t0; y0) constant in t."""
    from .jets import jet_solve_implicit

    if point is None:
        point = p.origin_point()
    if order is None:
        order = p.order - 1
    if order > p.order - 1:
        raise DomainError("requested curve order exceeds jet order - 1")
    p0 = normalize_at(p, point)
    jet = p0.jet
    n = p.n
    # F_i(u, t) = d_{y_i} phi0 (u, t, 0); variables (u_1..u_{n-1}, t)
    F = []
    for yi in p0.y_vars():
        g = jet_diff(jet, yi).restrict_zero(p0.y_vars())
        g = g.project(p0.xt_vars())  # vars (x_1..x_{n-1}, t)
        g = g - Jet.constant(g.constant_term(), n, g.order, g.backend)
        F.append(g.truncate(order + 1))
    try:
        return jet_solve_implicit(F, order)
    except JetError as exc:
        raise DegeneracyError(f"singular mixed Hessian: {exc}") from exc


def hessian_along_curve(p: Phase, point=None, l_max: int = 4) -> HessianCurve:
    """Second y-derivatives of the normalized phase along the solution curve,
    as t-jets of order ``l_max``, together with their determinant jet."""
    if point is None:
        point = p.origin_point()
    if p.order < l_max + 2:
        raise DomainError(f"jet order {p.order} < l_max + 2 = {l_max + 2}")
    p0 = normalize_at(p, point)
    x0 = curve_x0(p, point, order=l_max)
    n = p.n
    t_jet = Jet.variable(0, 1, l_max, p.backend)
    zero = Jet.zero(1, l_max, p.backend)
    inner = [x.truncate(l_max) for x in x0] + [t_jet] + [zero] * (n - 1)
    entries: list[list[Jet]] = [[None] * (n - 1) for _ in range(n - 1)]
    for i, yi in enumerate(p0.y_vars()):
        di = jet_diff(p0.jet, yi)
        for j in range(i, n - 1):
            yj = p0.y_vars()[j]
            second = jet_diff(di, yj).truncate(l_max)
            along = jet_compose(second, inner)
            if along.constant_term() != 0:
                raise AssertionError("Hessian entry has nonzero value at t=0 "
                                     "after normalization")
            entries[i][j] = along
            entries[j][i] = along
    det = det_of_jet_matrix(entries)
    return HessianCurve(n, tuple(tuple(row) for row in entries), det,
                        tuple(p._check_point(point)))


def det_of_jet_matrix(entries: Sequence[Sequence[Jet]]) -> Jet:
    """Determinant of a square matrix of jets, by expansion with minor caching."""
    m = len(entries)
    sample = entries[0][0]

    cache: dict[tuple[int, tuple[int, ...]], Jet] = {}

    def minor(row: int, cols: tuple[int, ...]) -> Jet:
        if row == m:
            return Jet.constant(1, sample.num_vars, sample.order, sample.backend)
        key = (row, cols)
        if key in cache:
            return cache[key]
        acc = Jet.zero(sample.num_vars, sample.order, sample.backend)
        for pos, c in enumerate(cols):
            term = jet_mul(entries[row][c], minor(row + 1, cols[:pos] + cols[pos + 1:]))
            acc = jet_add(acc, term if pos % 2 == 0 else -term)
        cache[key] = acc
        return acc

    return minor(0, tuple(range(m)))


def hessian_t_jets(p: Phase, point=None, order: int | None = None) -> list[list[Jet]]:
    """t-jets of d^2_y phi(x0, t + t0; y0) - d^2_y phi(x0, t0; y0): the
    Hessian variation at frozen x.  Coincides with the along-curve entries
    whenever the solution curve is trivial."""
    if point is None:
        point = p.origin_point()
    if order is None:
        order = p.order
    jet = p.shifted_jet(point)
    n = p.n
    out: list[list[Jet]] = [[None] * (n - 1) for _ in range(n - 1)]
    for i, yi in enumerate(p.y_vars()):
        di = jet_diff(jet, yi)
        for j in range(i, n - 1):
            yj = p.y_vars()[j]
            second = jet_diff(di, yj).restrict_zero(p.x_vars() + p.y_vars())
            tj = second.project([p.t_var]).truncate(order)
            tj = tj - Jet.constant(tj.constant_term(), 1, order, tj.backend)
            out[i][j] = tj
            out[j][i] = tj
    return out
