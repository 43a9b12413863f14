"""Numerical certification of the determinant lower bounds behind the
polynomial Wolff axiom: the coefficient expansion det(U + D(t)) =
det(U) + (C, 1) . F(t), the derived derivative vector H, a sampled/optimized
certificate constant, and the rescaled floor scaling check.

Constants here are certified at the analysis point over a finite sample of
matrices U, not uniformly over the whole neighborhood; reports say so via
their sample counts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize

from . import counting
from .contact import ContactMatrix, build_contact_matrix, contact_order
from .counting import RowLabel
from .phases import HessianCurve, Phase, hessian_along_curve, hessian_t_jets
from .randutil import child_rng, uniform
from .serialize import fraction_to_str

GL_NODES = 64
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_NODES)


class CertificateError(ValueError):
    """A certificate cannot be produced (no finite contact order, or an
    empty sampling plan)."""


@dataclass(frozen=True)
class DetExpansion:
    """Coefficients of the multilinear expansion of det(U + E) over a
    symmetric perturbation E, collected per canonical product label; the
    full-determinant coefficient is identically 1."""

    n: int
    U: tuple[tuple, ...]
    det_u: object
    coeffs: dict  # RowLabel -> coefficient

    def coeff_vector(self, labels: Sequence[RowLabel]) -> list:
        out = []
        for label in labels:
            if label.kind == "det":
                out.append(1)
            else:
                out.append(self.coeffs.get(label, 0))
        return out


@dataclass(frozen=True)
class PwaCertificate:
    c_star: float
    num_samples: int
    worst_U: tuple[tuple, ...]
    quadrature_floor: float
    remainder_bound: float
    l: int
    a_n: int

    def to_dict(self) -> dict:
        return {
            "c_star": self.c_star,
            "num_samples": self.num_samples,
            "worst_U": [list(map(float, row)) for row in self.worst_U],
            "quadrature_floor": self.quadrature_floor,
            "remainder_bound": self.remainder_bound,
            "l": self.l,
            "A_n": self.a_n,
        }


def _minor_det(matrix, rows: tuple[int, ...], cols: tuple[int, ...]):
    k = len(rows)
    if k == 0:
        return 1
    if k == 1:
        return matrix[rows[0]][cols[0]]
    total = 0
    for perm in itertools.permutations(range(k)):
        sign = _perm_sign(perm)
        term = sign
        for r in range(k):
            term = term * matrix[rows[r]][cols[perm[r]]]
        total = total + term
    return total


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def det_expansion(hc_or_n, U) -> DetExpansion:
    """Expand det(U + E) over a symbolic symmetric E.

    Accepts a HessianCurve (for its dimension) or the dimension n directly.
    Every weight multiplying a degree-k product monomial (k <= n-2) is a
    signed complementary minor of U; the degree-(n-1) block is the full
    determinant with weight 1.
    """
    n = hc_or_n.n if isinstance(hc_or_n, HessianCurve) else int(hc_or_n)
    m = n - 1
    U = tuple(tuple(row) for row in U)
    if len(U) != m or any(len(row) != m for row in U):
        raise ValueError(f"U must be {m} x {m}")
    coeffs: dict[RowLabel, object] = {}
    indices = list(range(m))
    for k in range(1, m):
        for rows in itertools.combinations(indices, k):
            for cols in itertools.combinations(indices, k):
                comp_r = tuple(i for i in indices if i not in rows)
                comp_c = tuple(j for j in indices if j not in cols)
                cof = _minor_det(U, comp_r, comp_c)
                if cof == 0:
                    continue
                block_sign = (-1) ** (sum(rows) + sum(cols))
                for perm in itertools.permutations(range(k)):
                    mono = tuple(sorted(tuple(sorted((rows[r] + 1, cols[perm[r]] + 1)))
                                        for r in range(k)))
                    label = RowLabel("product", mono)
                    w = block_sign * _perm_sign(perm) * cof
                    coeffs[label] = coeffs.get(label, 0) + w
    coeffs = {lab: c for lab, c in coeffs.items() if c != 0}
    return DetExpansion(n, U, _minor_det(U, tuple(indices), tuple(indices)), coeffs)


def h_vector(cm: ContactMatrix, exp: DetExpansion) -> list:
    """(H_1 .. H_l) = (C_1, ..., C_{A-1}, 1) . matrix."""
    if exp.n != cm.n:
        raise ValueError("dimension mismatch between expansion and matrix")
    cvec = exp.coeff_vector(cm.labels)
    out = []
    for h in range(cm.l):
        out.append(sum(c * row[h] for c, row in zip(cvec, cm.rows) if c != 0))
    return out


# -- |polynomial| integration -------------------------------------------------


def integrate_abs_poly(coeffs: Sequence[float], a: float, b: float) -> float:
    """Exact (up to root isolation) integral of |p(t)| on [a, b]: split at the
    real roots and apply 64-node Gauss-Legendre per sign-constant piece."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0 or not np.any(c):
        return 0.0
    while c.size > 1 and c[-1] == 0.0:
        c = c[:-1]
    points = [a, b]
    if c.size > 1:
        roots = np.polynomial.polynomial.polyroots(c)
        scale = max(1.0, float(np.max(np.abs(c))))
        for r in roots:
            if abs(r.imag) < 1e-9 * scale and a < r.real < b:
                points.append(float(r.real))
    points = sorted(set(points))
    total = 0.0
    for lo, hi in zip(points[:-1], points[1:]):
        mid = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
        vals = np.polynomial.polynomial.polyval(mid, c)
        total += abs(0.5 * (hi - lo) * float(np.dot(_GL_W, vals)))
    return total


def _det_poly(entries: list[list[np.ndarray]]) -> np.ndarray:
    """Determinant of a matrix of coefficient vectors (ascending powers)."""
    m = len(entries)
    if m == 1:
        return entries[0][0]
    acc = None
    for j in range(m):
        minor = [[entries[r][c] for c in range(m) if c != j] for r in range(1, m)]
        term = np.convolve(entries[0][j], _det_poly(minor))
        term = term if j % 2 == 0 else -term
        if acc is None:
            acc = term
        else:
            width = max(len(acc), len(term))
            acc = np.pad(acc, (0, width - len(acc))) + np.pad(term, (0, width - len(term)))
    return acc


# -- the certificate ----------------------------------------------------------


def _objective_factory(cm: ContactMatrix):
    """Returns obj(U_flat) = max_h |H_h| / (1 + ||C||_1) on float data."""
    n = cm.n
    m = n - 1
    rows = np.array([[float(v) for v in row] for row in cm.rows])
    labels = cm.labels

    def objective(u_flat: np.ndarray) -> float:
        U = u_flat.reshape(m, m)
        exp = det_expansion(n, U.tolist())
        cvec = np.array([float(c) for c in exp.coeff_vector(labels)])
        H = cvec @ rows
        return float(np.max(np.abs(H)) / (1.0 + np.sum(np.abs(cvec[:-1]))))

    return objective


def pwa_objective_search(p: Phase, point=None, l: int | None = None,
                         num_random_u: int = 1000, optimizer_steps: int = 200,
                         seed: int = 0, box: float = 1000.0,
                         sweep_directions: int = 32) -> dict:
    """Drive max_h |H_h| / (1 + ||C||_1) down over U: random box samples, a
    projective log-grid sweep s * U0, and local simplex refinement.

    This is the mechanism probe shared by the certificate (where a positive
    floor is the pass condition) and the failure witness (where the objective
    collapses for phases without finite contact order).
    """
    if point is None:
        point = p.origin_point()
    n = p.n
    a_n = counting.a_n(n)
    if l is None:
        l = a_n
    if num_random_u <= 0 and optimizer_steps <= 0 and sweep_directions <= 0:
        raise CertificateError("empty sampling plan")
    hc = hessian_along_curve(p, point, l)
    cm = build_contact_matrix(hc, l)
    obj = _objective_factory(cm)
    m = n - 1

    best_val = math.inf
    best_u = np.zeros(m * m)
    evals = 0

    rng = child_rng(seed, "pwa", "random")
    for _ in range(max(num_random_u, 0)):
        u = np.array([uniform(rng, -box, box) for _ in range(m * m)])
        v = obj(u)
        evals += 1
        if v < best_val:
            best_val, best_u = v, u

    rng = child_rng(seed, "pwa", "sweep")
    scales = np.logspace(-3, 6, 91)
    directions = []
    for _ in range(max(sweep_directions, 0)):
        u0 = np.array([uniform(rng, -1.0, 1.0) for _ in range(m * m)])
        norm = np.max(np.abs(u0))
        if norm > 0:
            directions.append(u0 / norm)
    # structured diagonal sign patterns catch coefficient cancellations that
    # random directions almost surely miss (e.g. trace-cancelling diagonals)
    if m <= 4:
        for pattern in itertools.product((-1.0, 0.0, 1.0), repeat=m):
            if not any(pattern):
                continue
            directions.append(np.diag(pattern).ravel())
    for u0 in directions:
        for s in scales:
            v = obj(s * u0)
            evals += 1
            if v < best_val:
                best_val, best_u = v, s * u0

    if optimizer_steps > 0:
        res = optimize.minimize(obj, best_u, method="Nelder-Mead",
                                options={"maxfev": optimizer_steps,
                                         "xatol": 1e-12, "fatol": 1e-14,
                                         "adaptive": True})
        evals += res.nfev
        if res.fun < best_val:
            best_val, best_u = float(res.fun), res.x
    return {"c_min": best_val, "worst_u": best_u.reshape(m, m),
            "num_samples": evals, "matrix": cm, "hessian_curve": hc}


def certify_pwa(p: Phase, point=None, l: int | None = None,
                num_random_u: int = 1000, optimizer_steps: int = 200,
                seed: int = 0, eps0: float | None = None) -> PwaCertificate:
    """Sampled lower-constant certificate for the tube-counting bound.

    Requires a finite contact order at the point; without full row rank the
    mechanism provably fails and no certificate exists.
    """
    if point is None:
        point = p.origin_point()
    n = p.n
    a_n = counting.a_n(n)
    if l is None:
        l = a_n
    report = contact_order(p, point, l)
    if report.contact_order is None:
        raise CertificateError(
            f"no contact order <= {l} at the point (rank {report.rank_at_lmax} "
            f"< {report.a_n}); the determinant bound has no positive floor")
    search = pwa_objective_search(p, point, l, num_random_u, optimizer_steps, seed)
    cm: ContactMatrix = search["matrix"]
    hc: HessianCurve = search["hessian_curve"]
    if eps0 is None:
        eps0 = float(p.eps0)

    # quadrature floor of int |W| / (1 + ||C||_1) over the same kind of samples
    rows = np.array([[float(v) for v in row] for row in cm.rows])
    labels = cm.labels
    m = n - 1

    def quad_value(U) -> float:
        exp = det_expansion(n, U)
        cvec = np.array([float(c) for c in exp.coeff_vector(labels)])
        H = cvec @ rows
        poly = np.zeros(cm.l + 1)
        poly[0] = float(exp.det_u)
        for h in range(1, cm.l + 1):
            poly[h] = H[h - 1] / math.factorial(h)
        return integrate_abs_poly(poly, -eps0, eps0) / (1.0 + np.sum(np.abs(cvec[:-1])))

    rng = child_rng(seed, "pwa", "quad")
    floor = quad_value(search["worst_u"].tolist())
    for _ in range(min(max(num_random_u, 0), 200)):
        U = [[uniform(rng, -1000.0, 1000.0) for _ in range(m)] for _ in range(m)]
        floor = min(floor, quad_value(U))

    remainder = _truncation_remainder(hc, search["worst_u"].tolist(), cm.l, eps0)
    return PwaCertificate(
        c_star=float(search["c_min"]),
        num_samples=int(search["num_samples"]),
        worst_U=tuple(tuple(float(v) for v in row) for row in search["worst_u"]),
        quadrature_floor=float(floor),
        remainder_bound=float(remainder),
        l=cm.l,
        a_n=a_n,
    )


def _truncation_remainder(hc: HessianCurve, U, l: int, eps0: float) -> float:
    """Integral bound on the tail of det(U + D(t)) beyond degree l: the
    entries are exact polynomials, so sum |c_m| 2 eps0^{m+1}/(m+1) over m > l."""
    m = hc.n - 1
    order = hc.entries[0][0].order
    entries = []
    for i in range(m):
        row = []
        for j in range(m):
            vec = np.zeros(order + 1)
            for exps, c in hc.entries[i][j].items():
                vec[exps[0]] = float(c)
            vec[0] += float(U[i][j])
            row.append(vec)
        entries.append(row)
    full = _det_poly(entries)
    bound = 0.0
    for deg in range(l + 1, len(full)):
        bound += abs(float(full[deg])) * 2.0 * eps0 ** (deg + 1) / (deg + 1)
    return bound


# -- rescaled floors ----------------------------------------------------------


def _scaled_hessian_polys(p: Phase, lam: float, order: int) -> list[list[np.ndarray]]:
    """Coefficient vectors of lam * Hyy(t / lam): c_m -> c_m lam^{1-m}."""
    jets = hessian_t_jets(p, p.origin_point(), order)
    m = p.n - 1
    out = []
    for i in range(m):
        row = []
        for j in range(m):
            vec = np.zeros(order + 1)
            for exps, c in jets[i][j].items():
                deg = exps[0]
                vec[deg] = float(c) * lam ** (1 - deg)
            row.append(vec)
        out.append(row)
    return out


def rescaled_floor(p: Phase, lambda_list: Sequence[float], l: int | None = None,
                   num_random_m: int = 120, optimizer_steps: int = 120,
                   seed: int = 0, box: float = 8.0) -> dict:
    """Per-lambda minimum over sampled M of the integral of
    |det(M + lam * Hyy(t/lam))| on [-eps0, eps0], with the fitted log-log
    slope (expected at least n - 1 - l).

    Samples cover both a fixed box and a lambda-scaled box, since the
    adversarial M grows linearly with the scaling parameter.
    """
    if any(lam < 1 for lam in lambda_list):
        raise ValueError("scaling parameters must be >= 1")
    if _has_pure_y_terms(p):
        raise ValueError("phase is not in normal form at the origin "
                         "(nonzero pure-y second derivatives)")
    n = p.n
    if l is None:
        l = counting.a_n(n)
    m = n - 1
    eps0 = float(p.eps0)
    order = min(p.order, max(l + 2, 6))
    rows_out = []
    carried: list[np.ndarray] = []
    for lam_index, lam in enumerate(sorted(float(x) for x in lambda_list)):
        polys = _scaled_hessian_polys(p, lam, order)

        def floor_objective(m_flat: np.ndarray) -> float:
            entries = [[polys[i][j].copy() for j in range(m)] for i in range(m)]
            for i in range(m):
                for j in range(m):
                    entries[i][j][0] += m_flat[i * m + j]
            return integrate_abs_poly(_det_poly(entries), -eps0, eps0)

        def low_coefficients(m_flat: np.ndarray) -> np.ndarray:
            entries = [[polys[i][j].copy() for j in range(m)] for i in range(m)]
            for i in range(m):
                for j in range(m):
                    entries[i][j][0] += m_flat[i * m + j]
            full = _det_poly(entries)
            cut = min(l, len(full))
            return np.array([full[h] * eps0 ** h for h in range(cut)])

        rng = child_rng(seed, "rescaled", lam_index)
        candidates = list(carried)
        for _ in range(num_random_m):
            raw = np.array([uniform(rng, -box, box) for _ in range(m * m)])
            candidates.append(raw)
            candidates.append(raw * lam)
        scored = sorted(candidates, key=floor_objective)
        # stage 1: drive the low t-coefficients of the determinant to zero
        # (the adversarial matrix lives on that cancellation variety, at the
        # lambda scale; diagonal sign patterns make reliable starts)
        starts = scored[:3] + [np.zeros(m * m)]
        if m <= 3:
            for pattern in itertools.product((-1.0, 0.0, 1.0), repeat=m):
                if not any(pattern):
                    continue
                for s in (0.5 * lam, lam, 2.0 * lam, 4.0 * lam):
                    starts.append(s * np.diag(pattern).ravel())
        stage1 = []
        for start in starts:
            res = optimize.least_squares(low_coefficients, start, method="lm",
                                         max_nfev=400)
            stage1.append(res.x)
        candidates = stage1 + scored[:3]
        best_m = min(candidates, key=floor_objective)
        best = floor_objective(best_m)
        # stage 2: local refinement of the integral itself
        if optimizer_steps > 0:
            res = optimize.minimize(floor_objective, best_m, method="Nelder-Mead",
                                    options={"maxfev": optimizer_steps,
                                             "xatol": 1e-10, "fatol": 1e-14,
                                             "adaptive": True})
            if res.fun < best:
                best, best_m = float(res.fun), res.x
        rows_out.append((lam, best))
        # adversarial matrices scale about linearly with lambda: carry the
        # minimizer forward, both as-is and rescaled
        nxt = lambda_list_next_ratio(lambda_list, lam_index)
        carried = [best_m, best_m * nxt]

    xs = np.log([lam for lam, _ in rows_out])
    ys = np.log([max(v, 1e-300) for _, v in rows_out])
    slope = float(np.polyfit(xs, ys, 1)[0]) if len(rows_out) > 1 else None
    return {"floors": rows_out, "slope": slope, "expected_slope": n - 1 - l}


def lambda_list_next_ratio(lambda_list: Sequence[float], index: int) -> float:
    ordered = sorted(float(x) for x in lambda_list)
    if index + 1 >= len(ordered):
        return 1.0
    return ordered[index + 1] / ordered[index]


def _has_pure_y_terms(p: Phase) -> bool:
    jet = p.jet
    for exps, _ in jet.items():
        if all(exps[i] == 0 for i in p.xt_vars()) and sum(exps) > 0:
            return True
    return False


# -- the two-branch coefficient ----------------------------------------------


def _exact_sqrt(x: Fraction) -> Fraction | None:
    x = Fraction(x)
    if x < 0:
        return None
    rn = math.isqrt(x.numerator)
    rd = math.isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    return None


def lemma52_coefficient(n: int, n_prime: int, l: int, r, lam) -> dict:
    """Both branches of min{ (lam/r)^{l-(n-1)} r^{-(n-n')/2},
    (r^{-1/2} + r/lam)^{n-n'} } with exact rationals where the square roots
    are exact, floats otherwise."""
    r = Fraction(r)
    lam = Fraction(lam)
    if not 1 <= r <= lam:
        raise ValueError("need 1 <= r <= lambda")
    m_lo = (n + 1 + 1) // 2  # ceil((n+1)/2)
    if not m_lo <= n_prime <= n - 1:
        raise ValueError(f"need {m_lo} <= n' <= {n - 1}")
    lam_np = lam / r
    d = n - n_prime

    sqrt_r = _exact_sqrt(r)
    if sqrt_r is not None:
        r_inv_sqrt: object = 1 / sqrt_r
    else:
        r_inv_sqrt = 1.0 / math.sqrt(float(r))

    # branch 1: lam_np^{l-(n-1)} * r^{-d/2}
    e1 = l - (n - 1)
    base1 = lam_np ** e1
    if d % 2 == 0:
        branch1: object = base1 * r ** (-(d // 2))
    elif sqrt_r is not None:
        branch1 = base1 * (1 / sqrt_r) ** d
    else:
        branch1 = float(base1) * float(r) ** (-d / 2)

    r_over_lambda = r / lam
    inner = (r_inv_sqrt + r_over_lambda
             if isinstance(r_inv_sqrt, Fraction)
             else r_inv_sqrt + float(r_over_lambda))
    branch2 = inner ** d

    both_exact = isinstance(branch1, Fraction) and isinstance(branch2, Fraction)
    if both_exact:
        minimum: object = min(branch1, branch2)
    else:
        minimum = min(float(branch1), float(branch2))
    return {
        "branch_pwa": branch1,
        "branch_neighborhood": branch2,
        "minimum": minimum,
        "r_inv_sqrt": r_inv_sqrt,
        "r_over_lambda": r_over_lambda,
    }


def lemma52_to_json(result: dict) -> dict:
    out = {}
    for key, v in result.items():
        out[key] = fraction_to_str(v) if isinstance(v, Fraction) else float(v)
    return out
