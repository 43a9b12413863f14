"""Exact-rational evaluation of every exponent and constant formula.

No floating arithmetic anywhere in this module; decimal renderings are
display-only and live in the serializer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import counting
from .serialize import fraction_to_str


class ExponentDomainError(ValueError):
    """Parameters outside the validity regime of a formula."""


def _require_odd(n: int, what: str) -> None:
    if n < 3 or n % 2 == 0:
        raise ExponentDomainError(f"{what} requires odd n >= 3, got n={n}")


def zeta_nl(n: int, l: int) -> Fraction:
    """Oscillatory-estimate gain 4 / ((3n-3)^2 l + (3n-3)^2 (2-n) + 2(3n-3))."""
    _require_odd(n, "zeta_nl")
    den = (3 * n - 3) ** 2 * l + (3 * n - 3) ** 2 * (2 - n) + 2 * (3 * n - 3)
    if den <= 0:
        raise ExponentDomainError(f"invalid regime: denominator {den} <= 0")
    return Fraction(4, den)


def p_osc(n: int, l: int) -> Fraction:
    """Oscillatory-integral exponent 2(3n+1)/(3n-3) - zeta(n, l)."""
    _require_odd(n, "p_osc")
    return Fraction(2 * (3 * n + 1), 3 * n - 3) - zeta_nl(n, l)


def p_ghi(n: int) -> Fraction:
    """Positive-definite baseline exponent: 2(3n+1)/(3n-3) for odd n,
    2(3n+2)/(3n-2) for even n."""
    if n < 3:
        raise ExponentDomainError("n must be at least 3")
    if n % 2 == 1:
        return Fraction(2 * (3 * n + 1), 3 * n - 3)
    return Fraction(2 * (3 * n + 2), 3 * n - 2)


def kakeya_dim(n: int, l: int) -> Fraction:
    """Hausdorff-dimension lower bound (n+1)/2 + (n-1)/(2(l+2-n)(n-1)+2)."""
    _require_odd(n, "kakeya_dim")
    den = 2 * (l + 2 - n) * (n - 1) + 2
    if den <= 0:
        raise ExponentDomainError(f"invalid regime: denominator {den} <= 0")
    return Fraction(n + 1, 2) + Fraction(n - 1, den)


def kakeya_dim_posdef(n: int, l: int) -> Fraction:
    """Positive-definite route: (n+1)/2 + (n-1)/(4(l+2-n)(n-1)+2); strictly
    below :func:`kakeya_dim`."""
    _require_odd(n, "kakeya_dim_posdef")
    den = 4 * (l + 2 - n) * (n - 1) + 2
    if den <= 0:
        raise ExponentDomainError(f"invalid regime: denominator {den} <= 0")
    return Fraction(n + 1, 2) + Fraction(n - 1, den)


def d_n(n: int) -> Fraction:
    """The dimension gain at the minimal admissible contact order."""
    return kakeya_dim(n, minimal_contact_order(n)) - Fraction(n + 1, 2)


def zeta_n(n: int) -> Fraction:
    """The oscillatory gain at the minimal admissible contact order."""
    return zeta_nl(n, minimal_contact_order(n))


def minimal_contact_order(n: int) -> int:
    return counting.a_n(n)


def maximal_p(n: int, l: int) -> tuple[Fraction, Fraction]:
    """Maximal-function exponent ((l+2-n)(n-1)(n+1)+2n)/((l+2-n)(n-1)^2+2(n-1))
    and its dual p/(p-1)."""
    _require_odd(n, "maximal_p")
    num = (l + 2 - n) * (n - 1) * (n + 1) + 2 * n
    den = (l + 2 - n) * (n - 1) ** 2 + 2 * (n - 1)
    if den <= 0:
        raise ExponentDomainError(f"invalid regime: denominator {den} <= 0")
    p = Fraction(num, den)
    if p <= 1:
        raise ExponentDomainError("exponent at most 1 has no dual")
    return p, p / (p - 1)


def broad_p(n: int, k: int, l: int) -> Fraction:
    """k-broad exponent ((l+2-n)(n-1)k + n)/((l+2-n)(n-1)(k-1) + n-1)."""
    _require_odd(n, "broad_p")
    if not 2 <= k <= n:
        raise ExponentDomainError(f"need 2 <= k <= n, got k={k}")
    num = (l + 2 - n) * (n - 1) * k + n
    den = (l + 2 - n) * (n - 1) * (k - 1) + n - 1
    if den <= 0:
        raise ExponentDomainError(f"invalid regime: denominator {den} <= 0")
    return Fraction(num, den)


def gamma_osc(n: int, l: int) -> Fraction:
    """Interpolation weight ((3n-3)(l-n+2)+2)/(4(l-n+2)(n-1)+2); must land
    in [0, 1]."""
    _require_odd(n, "gamma_osc")
    den = 4 * (l - n + 2) * (n - 1) + 2
    if den <= 0:
        raise ExponentDomainError(f"invalid regime: denominator {den} <= 0")
    g = Fraction((3 * n - 3) * (l - n + 2) + 2, den)
    if not 0 <= g <= 1:
        raise ExponentDomainError(f"gamma_osc({n},{l}) = {g} outside [0,1]")
    return g


def gamma_kakeya(n: int, m: int, l: int) -> Fraction:
    """Lower constraint (n-m)(l+2-n)/((n-1)(l+2-n)+1) on the interpolation
    weight in the maximal-function route; must land in [0, 1]."""
    _require_odd(n, "gamma_kakeya")
    den = (n - 1) * (l + 2 - n) + 1
    if den <= 0:
        raise ExponentDomainError(f"invalid regime: denominator {den} <= 0")
    g = Fraction((n - m) * (l + 2 - n), den)
    if not 0 <= g <= 1:
        raise ExponentDomainError(f"gamma_kakeya({n},{m},{l}) = {g} outside [0,1]")
    return g


def default_k(n: int) -> int:
    return (n + 1 + 1) // 2  # ceil((n+1)/2)


def default_m(n: int) -> int:
    _require_odd(n, "default_m")
    return (n + 1) // 2


def broad_range_lower(n: int, k: int) -> Fraction:
    """Helper range endpoint 2(2n-k+2)/(2n-k)."""
    return Fraction(2 * (2 * n - k + 2), 2 * n - k)


def broad_range_upper(k: int) -> Fraction:
    """Helper range endpoint 2(k-1)/(k-2)."""
    if k <= 2:
        raise ExponentDomainError("upper range endpoint needs k > 2")
    return Fraction(2 * (k - 1), k - 2)


@dataclass(frozen=True)
class ExponentReport:
    n: int
    l: int
    k: int
    m: int
    values: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"n": self.n, "l": self.l, "k": self.k, "m": self.m,
               "values": {key: fraction_to_str(v) for key, v in sorted(self.values.items())},
               "decimal": {key: _decimal(v) for key, v in sorted(self.values.items())}}
        return out


def _decimal(x: Fraction) -> str:
    # 12 significant digits, exact-rational rounding (display only)
    if x == 0:
        return "0.00000000000"
    sign = "-" if x < 0 else ""
    x = abs(x)
    exp = 0
    while x >= 10:
        x /= 10
        exp += 1
    while x < 1:
        x *= 10
        exp -= 1
    scaled = x * 10 ** 11
    digits = scaled.numerator // scaled.denominator
    if (scaled - digits) * 2 >= 1:
        digits += 1
    s = str(digits)
    if len(s) > 12:  # rounding overflowed to the next power of ten
        s = s[:12]
        exp += 1
    mantissa = s[0] + "." + s[1:]
    if exp == 0:
        return sign + mantissa
    return f"{sign}{mantissa}e{exp:+03d}"


def exponent_report(n: int, l: int | None = None, k: int | None = None,
                    m: int | None = None) -> ExponentReport:
    """Evaluate every formula at (n, l, k, m); defaults are l = A(n),
    k = ceil((n+1)/2), m = (n+1)/2."""
    _require_odd(n, "exponent_report")
    a_n = minimal_contact_order(n)
    if l is None:
        l = a_n
    if k is None:
        k = default_k(n)
    if m is None:
        m = default_m(n)
    mp, mp_dual = maximal_p(n, l)
    values = {
        "A_n": Fraction(a_n),
        "zeta_nl": zeta_nl(n, l),
        "zeta_n": zeta_n(n),
        "p_osc": p_osc(n, l),
        "p_ghi_odd": Fraction(2 * (3 * n + 1), 3 * n - 3),
        "p_ghi_even": Fraction(2 * (3 * n + 2), 3 * n - 2),
        "d_n": d_n(n),
        "kakeya_dim": kakeya_dim(n, l),
        "kakeya_dim_posdef": kakeya_dim_posdef(n, l),
        "maximal_p": mp,
        "maximal_p_dual": mp_dual,
        "broad_p": broad_p(n, k, l),
        "gamma_osc": gamma_osc(n, l),
        "gamma_kakeya": gamma_kakeya(n, m, l),
        "broad_range_lower": broad_range_lower(n, k),
    }
    if k > 2:  # at k = 2 the upper range endpoint is unbounded
        values["broad_range_upper"] = broad_range_upper(k)
    return ExponentReport(n, l, k, m, values)
