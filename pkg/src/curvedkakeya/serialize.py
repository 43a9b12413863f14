"""Canonical serialization: rationals as "p/q" strings, deterministic JSON/CSV."""

from __future__ import annotations

import json
from fractions import Fraction


def fraction_to_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def fraction_from_str(s) -> Fraction:
    if isinstance(s, Fraction):
        return s
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, float):
        raise ValueError(f"refusing inexact float {s!r} where a rational is required")
    return Fraction(s.strip())


def format_float(x: float) -> str:
    """Floats render to 12 significant digits everywhere."""
    return format(float(x), ".12g")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(", ", ": "), allow_nan=False) + "\n"


def csv_lines(header: list[str], rows: list[list[object]]) -> str:
    """CSV with mandatory header, ',' separator and '.' decimal point."""
    def cell(v) -> str:
        if isinstance(v, float):
            return format_float(v)
        if isinstance(v, Fraction):
            return fraction_to_str(v)
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"
