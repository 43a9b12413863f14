"""The contact matrix: t-derivative tuples of canonical Hessian-entry products
along the solution curve, its rank, and the contact order of a phase."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from . import counting, linalg
from .counting import RowLabel
from .jets import EXACT, Jet, jet_diff, jet_mul
from .phases import (DomainError, HessianCurve, Phase, gauss_map,
                     hessian_along_curve)
from .serialize import fraction_to_str


@dataclass(frozen=True)
class ContactMatrix:
    """Rows are (label, derivative tuple): entry h (1-based) is the h-th
    t-derivative at 0, i.e. h! times the t^h coefficient of the labeled
    product jet.  Exactly one det row, ordered last."""

    n: int
    l: int
    labels: tuple[RowLabel, ...]
    rows: tuple[tuple, ...]
    backend: str

    @property
    def num_rows(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class ContactReport:
    contact_order: int | None
    rank_at_lmax: int
    sigma_min: float | None
    l_max: int
    n: int
    a_n: int

    def to_dict(self) -> dict:
        return {
            "contact_order": self.contact_order,
            "rank": self.rank_at_lmax,
            "A_n": self.a_n,
            "sigma_min": self.sigma_min,
            "l_max": self.l_max,
        }


def _derivative_tuple(jet: Jet, l: int) -> tuple:
    """(f^(1)(0), ..., f^(l)(0)) for a univariate t-jet."""
    return tuple(jet.coefficient((h,)) * math.factorial(h) for h in range(1, l + 1))


def product_jet(hc: HessianCurve, label: RowLabel) -> Jet:
    if label.kind == "det":
        return hc.det_jet
    jet = None
    for (i, j) in label.factors:
        entry = hc.entries[i - 1][j - 1]
        jet = entry if jet is None else jet_mul(jet, entry)
    return jet


def build_contact_matrix(hc: HessianCurve, l: int) -> ContactMatrix:
    """One row per canonical product label plus the determinant row.

    The row count is asserted against the enumerated count (the closed-form
    count diverges from it for n >= 5 and is not used here).
    """
    n = hc.n
    a_n = counting.a_n(n)
    if l < a_n:
        raise ValueError(f"column count l={l} below the row count A(n)={a_n}")
    order = hc.entries[0][0].order
    if order < l:
        raise DomainError(f"Hessian jets have order {order} < l = {l}")
    labels = tuple(counting.all_row_labels(n))
    rows = []
    for label in labels:
        jet = product_jet(hc, label)
        row = _derivative_tuple(jet, l)
        for h in range(1, label.degree if label.kind == "product" else n - 1):
            if h <= l and row[h - 1] != 0:
                raise AssertionError(f"row {label} has nonzero derivative below "
                                     f"its degree: h={h}")
        rows.append(row)
    if len(rows) != a_n:
        raise AssertionError(f"contact matrix has {len(rows)} rows, expected {a_n}")
    backend = hc.det_jet.backend
    return ContactMatrix(n, l, labels, tuple(rows), backend)


def rank(cm: ContactMatrix, tol: float = 1e-8) -> tuple[int, float | None]:
    """Row rank: fraction-free elimination on the exact backend, singular
    values above ``tol * sigma_max`` on the float backend."""
    if not cm.rows:
        return 0, None
    if cm.backend == EXACT:
        return linalg.rank_exact(cm.rows), None
    r, smin = linalg.rank_float(cm.rows, tol)
    return r, smin


def contact_order(p: Phase, point=None, l_max: int | None = None,
                  tol: float = 1e-8) -> ContactReport:
    """Smallest l with full row rank, scanned over l = A(n)..l_max."""
    if point is None:
        point = p.origin_point()
    n = p.n
    a_n = counting.a_n(n)
    if l_max is None:
        l_max = a_n
    if l_max < a_n:
        raise ValueError(f"l_max={l_max} is below the minimal admissible order {a_n}")
    if p.order < l_max + 2:
        raise DomainError(f"jet order {p.order} < l_max + 2 = {l_max + 2}")
    hc = hessian_along_curve(p, point, l_max)
    cm = build_contact_matrix(hc, l_max)
    found = None
    sigma_min = None
    prev_rank = 0
    rank_at_lmax = 0
    for l in range(a_n, l_max + 1):
        sub = ContactMatrix(cm.n, l, cm.labels,
                            tuple(row[:l] for row in cm.rows), cm.backend)
        r, smin = rank(sub, tol)
        if r < prev_rank:
            raise AssertionError("rank decreased while adding columns")
        prev_rank = r
        rank_at_lmax = r
        if r == a_n and found is None:
            found = l
            sigma_min = smin
            break
    if found is None:
        sigma_min = smin if cm.backend != EXACT else None
    return ContactReport(found, rank_at_lmax, sigma_min, l_max, n, a_n)


def bourgain_check(p: Phase, point=None, tol: float = 1e-9) -> dict:
    """Proportionality of the second and first normal derivatives of the
    y-Hessian: exact residual on the exact backend, relative residual with
    a least-squares scalar otherwise."""
    if point is None:
        point = p.origin_point()
    g0 = gauss_map(p, point)
    jet = p.shifted_jet(point)
    n = p.n

    def directional(j: Jet) -> Jet:
        acc = None
        for a in range(n):
            term = jet_diff(j, a).scale(g0[a])
            acc = term if acc is None else acc + term
        return acc

    first = directional(jet)
    second = directional(first)

    def hessian_values(j: Jet) -> list[list]:
        vals = []
        for yi in p.y_vars():
            row = []
            di = jet_diff(j, yi)
            for yj in p.y_vars():
                dij = jet_diff(di, yj)
                row.append(dij.constant_term())
            vals.append(row)
        return vals

    a1 = hessian_values(first)
    a2 = hessian_values(second)
    flat1 = [v for row in a1 for v in row]
    flat2 = [v for row in a2 for v in row]
    norm1 = sum(v * v for v in flat1)
    norm2 = sum(v * v for v in flat2)
    if norm1 == 0 and norm2 == 0:
        return {"holds": True, "C": None, "residual": 0.0, "vacuous": True}
    if norm1 == 0:
        # nothing to be proportional to; condition fails unless second vanishes
        return {"holds": False, "C": None,
                "residual": float(math.sqrt(float(norm2))), "vacuous": False}
    c = sum(u * v for u, v in zip(flat1, flat2)) / norm1
    res_sq = sum((v - c * u) ** 2 for u, v in zip(flat1, flat2))
    scale = max(norm1, norm2)
    rel = math.sqrt(float(res_sq) / float(scale))
    if p.backend == EXACT:
        holds = res_sq == 0
    else:
        holds = rel <= tol
    c_out = fraction_to_str(c) if isinstance(c, Fraction) else float(c)
    return {"holds": holds, "C": c_out, "residual": rel, "vacuous": False}


def perturbed_phase(base: Phase, degree: int, magnitude, seed: int,
                    trial: int) -> Phase:
    """Base phase plus a seeded random Hessian-jet perturbation: terms
    c_{h,i,j} t^h y_i y_j for 1 <= h <= degree, i <= j, with dyadic-rational
    coefficients uniform in [-magnitude, magnitude]."""
    from .randutil import child_rng, dyadic_uniform

    rng = child_rng(seed, "genericity", trial)
    n = base.n
    nv = 2 * n - 1
    mag = Fraction(magnitude)
    coeffs: dict[tuple, Fraction] = {}
    for h in range(1, degree + 1):
        for i in range(n - 1):
            for j in range(i, n - 1):
                c = dyadic_uniform(rng, mag)
                if c == 0:
                    continue
                exps = [0] * nv
                exps[n - 1] = h
                exps[n + i] += 1
                exps[n + j] += 1
                coeffs[tuple(exps)] = c
    pert = Jet(nv, base.order, coeffs, base.backend)
    return Phase(n, base.jet + pert, base.center, base.eps0)


def genericity_sweep(base: Phase, perturbation_degree: int, magnitude,
                     trials: int, seed: int, threads: int = 1) -> dict:
    """Fraction of seeded random perturbations achieving the minimal contact
    order.  Trials use independent child seeds, so the outcome does not
    depend on evaluation order or thread count."""
    n = base.n
    a_n = counting.a_n(n)
    if base.order < a_n + 2:
        raise DomainError(f"base jet order {base.order} < A(n)+2 = {a_n + 2}")
    if trials == 0:
        return {"trials": 0, "successes": 0, "fraction": None}

    def one(trial: int) -> bool:
        p = perturbed_phase(base, perturbation_degree, magnitude, seed, trial)
        report = contact_order(p, base.origin_point(), a_n)
        return report.contact_order == a_n

    results = _map_indexed(one, trials, threads)
    successes = sum(1 for r in results if r)
    return {"trials": trials, "successes": successes,
            "fraction": successes / trials}


def _map_indexed(fn, count: int, threads: int) -> list:
    """Run fn(0..count-1), optionally on a thread pool; results in index order."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))
