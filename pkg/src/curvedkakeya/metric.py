"""The R^3 metric-jet nonvanishing condition for minimal contact order of the
distance phase, and its genericity sweep.

The condition is evaluated verbatim on the supplied third-order jet at the
origin; the caller owns the gauge choice (no normal-coordinate reduction is
attempted here).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .randutil import child_rng, dyadic_uniform
from .serialize import fraction_from_str, fraction_to_str

Exps = tuple[int, int, int]


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricJet3:
    """Third-order jet at the origin of a symmetric 3x3 metric.

    ``coefficients`` maps (i, j, exps) with i <= j (1-based) and |exps| <= 3
    to rational (or float) Taylor coefficients.
    """

    coefficients: tuple  # sorted tuple of ((i, j, exps), value)

    @staticmethod
    def from_entries(entries: dict) -> "MetricJet3":
        clean = {}
        for (i, j, exps), value in entries.items():
            if not (1 <= i <= 3 and 1 <= j <= 3):
                raise MetricError(f"bad index pair ({i},{j})")
            if i > j:
                i, j = j, i
            exps = tuple(int(e) for e in exps)
            if len(exps) != 3 or any(e < 0 for e in exps) or sum(exps) > 3:
                raise MetricError(f"bad derivative multi-index {exps}")
            if value != 0:
                key = (i, j, exps)
                clean[key] = clean.get(key, Fraction(0)) + value
        jet = MetricJet3(tuple(sorted(clean.items())))
        g0 = jet.leading_matrix()
        if not linalg.is_positive_definite_exact(g0):
            raise MetricError("metric is not positive-definite at the origin")
        return jet

    def coefficient(self, i: int, j: int, exps: Exps):
        if i > j:
            i, j = j, i
        for key, value in self.coefficients:
            if key == (i, j, tuple(exps)):
                return value
        return Fraction(0)

    def leading_matrix(self) -> list[list[Fraction]]:
        z = (0, 0, 0)
        return [[self.coefficient(i, j, z) for j in range(1, 4)] for i in range(1, 4)]

    def derivative(self, i: int, j: int, exps: Exps):
        """Value of the partial derivative d^exps g_ij at the origin."""
        c = self.coefficient(i, j, exps)
        mult = 1
        for e in exps:
            mult *= math.factorial(e)
        return c * mult

    def with_g33_perturbation(self, delta: dict) -> "MetricJet3":
        entries = {key: value for key, value in self.coefficients}
        for exps, d in delta.items():
            key = (3, 3, tuple(exps))
            entries[key] = entries.get(key, Fraction(0)) + d
        return MetricJet3.from_entries(entries)


def flat_metric() -> MetricJet3:
    one = Fraction(1)
    z = (0, 0, 0)
    return MetricJet3.from_entries({(1, 1, z): one, (2, 2, z): one, (3, 3, z): one})


def metric_from_json(data) -> MetricJet3:
    if isinstance(data, str):
        data = json.loads(data)
    entries = {}
    for item in data["entries"]:
        key = (int(item["i"]), int(item["j"]), tuple(int(e) for e in item["exps"]))
        entries[key] = entries.get(key, Fraction(0)) + fraction_from_str(item["coef"])
    return MetricJet3.from_entries(entries)


def metric_to_json(m: MetricJet3) -> dict:
    return {"entries": [{"i": i, "j": j, "exps": list(exps),
                         "coef": fraction_to_str(v)}
                        for (i, j, exps), v in m.coefficients]}


def contact4_condition(m: MetricJet3, tol: float = 1e-12) -> tuple:
    """(g33_11 - g33_22) g33_123 - (g33_113 - g33_223) g33_12 at the origin,
    and whether it is nonzero (exact, or above tol on float data)."""
    d = m.derivative
    value = ((d(3, 3, (2, 0, 0)) - d(3, 3, (0, 2, 0))) * d(3, 3, (1, 1, 1))
             - (d(3, 3, (2, 0, 1)) - d(3, 3, (0, 2, 1))) * d(3, 3, (1, 1, 0)))
    if isinstance(value, Fraction):
        return value, value != 0
    return value, abs(value) > tol


def _exps_of_total(total: int) -> list[Exps]:
    out = []
    for a in range(total + 1):
        for b in range(total + 1 - a):
            out.append((a, b, total - a - b))
    return out


def metric_genericity_sweep(base: MetricJet3, magnitude, trials: int,
                            seed: int) -> dict:
    """Perturb every coefficient of g33 with 1 <= |exps| <= 3 by seeded dyadic
    rationals in [-magnitude, magnitude]; fraction of trials where the
    nonvanishing condition holds."""
    if trials == 0:
        return {"trials": 0, "successes": 0, "fraction": None}
    mag = Fraction(magnitude)
    exps_list = [e for total in (1, 2, 3) for e in _exps_of_total(total)]
    successes = 0
    for trial in range(trials):
        rng = child_rng(seed, "metric", trial)
        delta = {exps: dyadic_uniform(rng, mag) for exps in exps_list}
        perturbed = base.with_g33_perturbation(delta)
        _, nonzero = contact4_condition(perturbed)
        if nonzero:
            successes += 1
    return {"trials": trials, "successes": successes,
            "fraction": successes / trials}
