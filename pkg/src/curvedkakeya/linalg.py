"""Exact rational linear algebra (fraction-free) plus float-backend helpers."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np


def _clear_denominators(rows):
    """Scale each row by the lcm of its denominators; rank is unchanged."""
    out = []
    for row in rows:
        fr = [Fraction(x) for x in row]
        lcm = 1
        for x in fr:
            d = x.denominator
            g = _gcd(lcm, d)
            lcm = lcm // g * d
        out.append([int(x * lcm) for x in fr])
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def rank_exact(matrix: Sequence[Sequence]) -> int:
    """Rank by fraction-free (Bareiss) elimination over the integers."""
    rows = _clear_denominators(matrix)
    if not rows:
        return 0
    n_rows, n_cols = len(rows), len(rows[0])
    rank = 0
    prev = 1
    r = 0
    for c in range(n_cols):
        pivot = None
        for i in range(r, n_rows):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(r + 1, n_rows):
            if all(x == 0 for x in rows[i]):
                continue
            for j in range(c + 1, n_cols):
                rows[i][j] = (rows[r][c] * rows[i][j] - rows[i][c] * rows[r][j]) // prev
            rows[i][c] = 0
        prev = rows[r][c]
        r += 1
        rank += 1
        if r == n_rows:
            break
    return rank


def det_exact(matrix: Sequence[Sequence]) -> Fraction:
    """Determinant by Bareiss elimination, exact over the rationals."""
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    rows = [[Fraction(x) for x in row] for row in matrix]
    if any(len(row) != n for row in rows):
        raise ValueError("determinant of a non-square matrix")
    sign = 1
    prev = Fraction(1)
    for c in range(n - 1):
        pivot = None
        for i in range(c, n):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            sign = -sign
        for i in range(c + 1, n):
            for j in range(c + 1, n):
                rows[i][j] = (rows[c][c] * rows[i][j] - rows[i][c] * rows[c][j]) / prev
            rows[i][c] = Fraction(0)
        prev = rows[c][c]
    return sign * rows[n - 1][n - 1]


def solve_exact(matrix: Sequence[Sequence], rhs: Sequence) -> list[Fraction]:
    """Solve a small square rational system by Gaussian elimination."""
    n = len(matrix)
    rows = [[Fraction(x) for x in row] + [Fraction(rhs[i])] for i, row in enumerate(matrix)]
    for c in range(n):
        pivot = next((i for i in range(c, n) if rows[i][c] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular system")
        rows[c], rows[pivot] = rows[pivot], rows[c]
        pv = rows[c][c]
        rows[c] = [x / pv for x in rows[c]]
        for i in range(n):
            if i != c and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
    return [rows[i][n] for i in range(n)]


def rank_float(matrix, tol: float = 1e-8) -> tuple[int, float | None]:
    """Numeric rank: singular values above ``tol * sigma_max``.

    Returns ``(rank, sigma_min)`` where ``sigma_min`` is the smallest singular
    value (None for an all-zero matrix).
    """
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        return 0, None
    s = np.linalg.svd(m, compute_uv=False)
    smax = s[0] if len(s) else 0.0
    if smax == 0.0:
        return 0, None
    r = int(np.sum(s > tol * smax))
    return r, float(s[-1])


def wedge_columns(matrix: Sequence[Sequence]):
    """Generalized cross product of the n-1 columns of an n x (n-1) matrix.

    Component i is ``det([columns, e_i])``, so the result is orthogonal to
    every column (exactly, on rational input).
    """
    n = len(matrix)
    cols = len(matrix[0]) if n else 0
    if cols != n - 1:
        raise ValueError("wedge needs an n x (n-1) matrix")
    out = []
    for i in range(n):
        aug = [list(matrix[r]) + [1 if r == i else 0] for r in range(n)]
        out.append(det_exact(aug) if not isinstance(matrix[0][0], float)
                   else float(np.linalg.det(np.array(aug, dtype=float))))
    return out


def is_positive_definite_exact(matrix: Sequence[Sequence]) -> bool:
    """Sylvester criterion on exact rational input."""
    n = len(matrix)
    for k in range(1, n + 1):
        minor = [row[:k] for row in matrix[:k]]
        if det_exact(minor) <= 0:
            return False
    return True
