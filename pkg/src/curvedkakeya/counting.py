"""Counting formulas for the rows of the contact matrix, with brute-force oracles.

The row set consists of all distinct monomials ``prod_a D[i_a][j_a]`` (degree
k <= n-2) of a symmetric (n-1)x(n-1) matrix subject to an orientation
constraint (some choice of (i,j)-vs-(j,i) per factor makes all rows distinct
and all columns distinct), plus the full determinant row.

Two counts are provided for everything:

* closed-form expressions built from involution numbers, and
* independent enumeration over canonical monomials.

The two agree for n <= 4 but *diverge from n = 5 on*: the closed form counts
terms per minor class and double-counts monomials that occur in several minor
classes (the first being products of two disjoint off-diagonal entries, e.g.
``D12*D34``, which is a term of both the ({1,3},{2,4}) and the ({1,4},{2,3})
minor).  The per-class counts themselves also break down for larger blocks
(``sym_det_terms`` at k = 6, ``mixed_minor_terms`` at (5,4)) where two
non-inverse permutations can share a monomial.  The enumeration is the
arbiter; ``a_n`` below is the operative row count used everywhere else in
this package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

BRUTEFORCE_MAX_N = 8


@dataclass(frozen=True, order=True)
class RowLabel:
    """Canonical label of a contact-matrix row.

    ``factors`` is the sorted tuple of entry positions (i <= j, 1-based) for a
    product row and empty for the determinant row.
    """

    kind: str  # "product" | "det"
    factors: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in ("product", "det"):
            raise ValueError(f"bad row label kind {self.kind!r}")
        if self.kind == "det" and self.factors:
            raise ValueError("det label carries no factors")
        if self.kind == "product":
            canon = tuple(sorted(tuple(sorted(f)) for f in self.factors))
            if canon != self.factors:
                object.__setattr__(self, "factors", canon)

    @property
    def degree(self) -> int:
        return len(self.factors)

    def __str__(self) -> str:
        if self.kind == "det":
            return "det"
        return "*".join(f"h{i}{j}" for i, j in self.factors)


def involutions(k: int) -> int:
    """Number of self-inverse permutations in S(k)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return _involutions(k)


@lru_cache(maxsize=None)
def _involutions(k: int) -> int:
    if k <= 1:
        return 1
    return _involutions(k - 1) + (k - 1) * _involutions(k - 2)


def involutions_bruteforce(k: int) -> int:
    if k > 9:
        raise ValueError("enumeration guard: k <= 9")
    return sum(1 for p in itertools.permutations(range(k))
               if all(p[p[i]] == i for i in range(k)))


def sym_det_terms(k: int) -> int:
    """Closed form (k! + I(k))/2 for the distinct terms of a k x k symmetric
    determinant.  Exact for k <= 5; overcounts from k = 6 (see module doc)."""
    if k < 1:
        raise ValueError("k must be positive")
    return (math.factorial(k) + involutions(k)) // 2


def _canonical_monomial(rows, cols, perm) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(tuple(sorted((rows[r], cols[perm[r]]))) for r in range(len(rows))))


def sym_det_terms_bruteforce(k: int) -> int:
    """Distinct monomials of the k x k symmetric determinant by expansion."""
    if k > 8:
        raise ValueError("enumeration guard: k <= 8")
    idx = list(range(k))
    return len({_canonical_monomial(idx, idx, p) for p in itertools.permutations(idx)})


def mixed_minor_terms(k: int, i: int) -> int:
    """Closed form k! - (k-i)! (i! - I(i))/2 for the distinct terms of a
    k-minor whose symmetric overlap block has size exactly i.

    Breaks down first at (k, i) = (5, 4); the enumeration below arbitrates.
    """
    if not 0 <= i <= k - 1:
        raise ValueError("need 0 <= i <= k-1")
    return math.factorial(k) - math.factorial(k - i) * (math.factorial(i) - involutions(i)) // 2


def mixed_minor_terms_bruteforce(k: int, i: int) -> int:
    if not 0 <= i <= k - 1:
        raise ValueError("need 0 <= i <= k-1")
    if k > 7:
        raise ValueError("enumeration guard: k <= 7")
    rows = list(range(k))
    cols = list(range(i)) + list(range(k, 2 * k - i))
    return len({_canonical_monomial(rows, cols, p)
                for p in itertools.permutations(range(k))})


def minor_class_count(n: int, k: int, i: int) -> int:
    """Number of transpose-classes of k-minors of a symmetric (n-1)x(n-1)
    matrix whose symmetric overlap has size exactly i.  The /2 must divide
    exactly (transpose pairing); a remainder is reported, never rounded."""
    if not (0 <= i <= k - 1 <= n - 3):
        raise ValueError("need 0 <= i <= k-1 <= n-3")
    num = (math.comb(n - 1, i) * math.comb(n - 1 - i, k - i)
           * math.comb(n - 1 - k, k - i))
    if num % 2 != 0:
        raise ArithmeticError(
            f"transpose pairing failed for (n,k,i)=({n},{k},{i}): {num} is odd")
    return num // 2


def a_n_closed(n: int) -> int:
    """Closed-form row count; agrees with the enumeration only for n <= 4."""
    if n < 3:
        raise ValueError("n must be at least 3")
    total = 1
    for k in range(1, n - 1):
        total += math.comb(n - 1, k) * sym_det_terms(k)
        for i in range(0, k):
            total += minor_class_count(n, k, i) * mixed_minor_terms(k, i)
    return total


def _orientation_feasible(factors: tuple[tuple[int, int], ...]) -> bool:
    """Does some per-factor orientation give pairwise distinct rows and
    pairwise distinct columns?  Searches the <= 2^k orientation choices with
    an early multiplicity prune."""
    k = len(factors)
    mult: dict[int, int] = {}
    for i, j in factors:
        mult[i] = mult.get(i, 0) + 1
        mult[j] = mult.get(j, 0) + 1  # a diagonal factor consumes both slots
    if any(v > 2 for v in mult.values()):
        return False
    choices = [[(i, j)] if i == j else [(i, j), (j, i)] for i, j in factors]
    for assign in itertools.product(*choices):
        rows = {a for a, _ in assign}
        if len(rows) != k:
            continue
        cols = {b for _, b in assign}
        if len(cols) == k:
            return True
    return False


def row_labels(n: int, k: int) -> set[RowLabel]:
    """All canonical product labels of degree k for dimension n."""
    if not 1 <= k <= n - 2:
        raise ValueError("need 1 <= k <= n-2")
    m = n - 1
    positions = [(i, j) for i in range(1, m + 1) for j in range(i, m + 1)]
    out: set[RowLabel] = set()
    for ms in itertools.combinations_with_replacement(positions, k):
        if _orientation_feasible(ms):
            out.add(RowLabel("product", ms))
    return out


def a_n_bruteforce(n: int) -> int:
    """Row count by exhaustive monomial enumeration (the arbiter)."""
    if not 3 <= n <= BRUTEFORCE_MAX_N:
        raise ValueError(f"enumeration guard: 3 <= n <= {BRUTEFORCE_MAX_N}")
    return 1 + sum(len(row_labels(n, k)) for k in range(1, n - 1))


@lru_cache(maxsize=None)
def a_n(n: int) -> int:
    """Operative minimal contact order: the true row count when enumerable,
    the closed form beyond the enumeration guard."""
    if n <= BRUTEFORCE_MAX_N:
        return a_n_bruteforce(n)
    return a_n_closed(n)


def all_row_labels(n: int) -> list[RowLabel]:
    """Deterministic row ordering: products by (degree, factors), then det."""
    labels: list[RowLabel] = []
    for k in range(1, n - 1):
        labels.extend(sorted(row_labels(n, k)))
    labels.append(RowLabel("det"))
    return labels
