"""Truncated multivariate power series (jets) with exact-rational and float backends.

A jet is a polynomial truncated by *total* degree.  All phase functions,
curves, and Hessian entries in this package are carried as jets; inputs are
assumed to arrive already Taylor-expanded, so a jet of sufficient order is an
exact representation.

Jets are immutable values and every operation here is pure, so they are safe
to share across threads.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

EXACT = "exact"
FLOAT = "float"

MultiIndex = tuple[int, ...]


class JetError(ValueError):
    """Raised on malformed jet operations (arity, backend, or order misuse)."""


def _check_same_space(a: "Jet", b: "Jet") -> None:
    if a.num_vars != b.num_vars:
        raise JetError(f"variable-count mismatch: {a.num_vars} vs {b.num_vars}")
    if a.backend != b.backend:
        raise JetError(f"backend mismatch: {a.backend} vs {b.backend}")


def _coerce(value, backend: str):
    if backend == EXACT:
        if isinstance(value, float):
            raise JetError("float coefficient on exact backend")
        return value if isinstance(value, Fraction) else Fraction(value)
    return float(value)


class Jet:
    """Sparse truncated power series in ``num_vars`` variables.

    ``coeffs`` maps exponent tuples to coefficients; zero coefficients are
    never stored, and iteration is in sorted multi-index order so that all
    derived output is bit-reproducible.
    """

    __slots__ = ("num_vars", "order", "backend", "coeffs")

    def __init__(self, num_vars: int, order: int, coeffs: Mapping[MultiIndex, object],
                 backend: str = EXACT, _trusted: bool = False):
        if num_vars < 1:
            raise JetError("num_vars must be positive")
        if order < 0:
            raise JetError("order must be non-negative")
        if backend not in (EXACT, FLOAT):
            raise JetError(f"unknown backend {backend!r}")
        self.num_vars = num_vars
        self.order = order
        self.backend = backend
        if _trusted:
            self.coeffs = dict(coeffs)
            return
        clean: dict[MultiIndex, object] = {}
        for exps, c in coeffs.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != num_vars:
                raise JetError(f"multi-index {exps} has wrong length")
            if any(e < 0 for e in exps):
                raise JetError(f"negative exponent in {exps}")
            if sum(exps) > order:
                continue
            c = _coerce(c, backend)
            if c != 0:
                clean[exps] = clean.get(exps, _coerce(0, backend)) + c
                if clean[exps] == 0:
                    del clean[exps]
        self.coeffs = clean

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(num_vars: int, order: int, backend: str = EXACT) -> "Jet":
        return Jet(num_vars, order, {}, backend, _trusted=True)

    @staticmethod
    def constant(value, num_vars: int, order: int, backend: str = EXACT) -> "Jet":
        value = _coerce(value, backend)
        if value == 0:
            return Jet.zero(num_vars, order, backend)
        return Jet(num_vars, order, {(0,) * num_vars: value}, backend, _trusted=True)

    @staticmethod
    def variable(index: int, num_vars: int, order: int, backend: str = EXACT) -> "Jet":
        if not 0 <= index < num_vars:
            raise JetError(f"variable index {index} out of range")
        if order < 1:
            return Jet.zero(num_vars, order, backend)
        exps = tuple(1 if i == index else 0 for i in range(num_vars))
        return Jet(num_vars, order, {exps: _coerce(1, backend)}, backend, _trusted=True)

    # -- basic protocol ----------------------------------------------------

    def items(self) -> list[tuple[MultiIndex, object]]:
        """Coefficients in sorted multi-index order."""
        return sorted(self.coeffs.items())

    def coefficient(self, exps: MultiIndex):
        return self.coeffs.get(tuple(exps), _coerce(0, self.backend))

    def constant_term(self):
        return self.coefficient((0,) * self.num_vars)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other) -> bool:
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.num_vars == other.num_vars and self.order == other.order
                and self.backend == other.backend and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.num_vars, self.order, self.backend, tuple(self.items())))

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"Jet({self.num_vars} vars, order {self.order}, 0)"
        terms = []
        for exps, c in self.items()[:6]:
            mono = "*".join(f"v{i}^{e}" for i, e in enumerate(exps) if e) or "1"
            terms.append(f"{c}*{mono}")
        tail = " + ..." if len(self.coeffs) > 6 else ""
        return f"Jet({self.num_vars} vars, order {self.order}, {' + '.join(terms)}{tail})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "Jet") -> "Jet":
        return jet_add(self, other)

    def __sub__(self, other: "Jet") -> "Jet":
        return jet_add(self, other.__neg__())

    def __neg__(self) -> "Jet":
        return Jet(self.num_vars, self.order, {e: -c for e, c in self.coeffs.items()},
                   self.backend, _trusted=True)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, scalar) -> "Jet":
        scalar = _coerce(scalar, self.backend)
        if scalar == 0:
            return Jet.zero(self.num_vars, self.order, self.backend)
        return Jet(self.num_vars, self.order,
                   {e: c * scalar for e, c in self.coeffs.items()},
                   self.backend, _trusted=True)

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return Jet(self.num_vars, order, self.coeffs, self.backend, _trusted=True)
        kept = {e: c for e, c in self.coeffs.items() if sum(e) <= order}
        return Jet(self.num_vars, order, kept, self.backend, _trusted=True)

    def with_order(self, order: int) -> "Jet":
        """Reinterpret at a new truncation order.

        Raising the order is only valid when the jet is an exact polynomial
        (which is the contract for all inputs in this package).
        """
        return self.truncate(order)

    # -- structural helpers --------------------------------------------------

    def permute_vars(self, perm: Sequence[int]) -> "Jet":
        """Relabel variables: new variable ``perm[i]`` receives old variable ``i``."""
        if sorted(perm) != list(range(self.num_vars)):
            raise JetError("not a permutation of the variable set")
        out: dict[MultiIndex, object] = {}
        for exps, c in self.coeffs.items():
            new = [0] * self.num_vars
            for i, e in enumerate(exps):
                new[perm[i]] = e
            out[tuple(new)] = c
        return Jet(self.num_vars, self.order, out, self.backend, _trusted=True)

    def restrict_zero(self, vars_to_zero: Iterable[int]) -> "Jet":
        """Set the given variables to 0 (drop monomials that touch them)."""
        zset = set(vars_to_zero)
        kept = {e: c for e, c in self.coeffs.items() if all(e[i] == 0 for i in zset)}
        return Jet(self.num_vars, self.order, kept, self.backend, _trusted=True)

    def project(self, keep_vars: Sequence[int]) -> "Jet":
        """Re-express in the listed variables; all others must be absent."""
        keep = list(keep_vars)
        others = set(range(self.num_vars)) - set(keep)
        out: dict[MultiIndex, object] = {}
        for exps, c in self.coeffs.items():
            if any(exps[i] != 0 for i in others):
                raise JetError("projection would drop live variables")
            out[tuple(exps[i] for i in keep)] = c
        return Jet(len(keep), self.order, out, self.backend, _trusted=True)

    def evaluate(self, point: Sequence[object]):
        """Evaluate the underlying polynomial at a numeric point."""
        if len(point) != self.num_vars:
            raise JetError("evaluation point has wrong arity")
        total = _coerce(0, self.backend)
        for exps, c in self.items():
            term = c
            for x, e in zip(point, exps):
                if e:
                    term = term * (x ** e)
            total = total + term
        return total


# -- module-level operations (the stable API surface) -----------------------

def jet_add(a: Jet, b: Jet) -> Jet:
    _check_same_space(a, b)
    order = min(a.order, b.order)
    out = {e: c for e, c in a.coeffs.items() if sum(e) <= order}
    zero = _coerce(0, a.backend)
    for e, c in b.coeffs.items():
        if sum(e) > order:
            continue
        s = out.get(e, zero) + c
        if s == 0:
            out.pop(e, None)
        else:
            out[e] = s
    return Jet(a.num_vars, order, out, a.backend, _trusted=True)


def jet_mul(a: Jet, b: Jet) -> Jet:
    _check_same_space(a, b)
    order = min(a.order, b.order)
    out: dict[MultiIndex, object] = {}
    bit = [(e, sum(e), c) for e, c in b.coeffs.items()]
    for ea, ca in a.coeffs.items():
        da = sum(ea)
        if da > order:
            continue
        for eb, db, cb in bit:
            if da + db > order:
                continue
            key = tuple(x + y for x, y in zip(ea, eb))
            prod = ca * cb
            if key in out:
                out[key] += prod
                if out[key] == 0:
                    del out[key]
            elif prod != 0:
                out[key] = prod
    return Jet(a.num_vars, order, out, a.backend, _trusted=True)


def jet_diff(a: Jet, var: int) -> Jet:
    """Formal partial derivative; the result order drops by one."""
    if not 0 <= var < a.num_vars:
        raise JetError(f"variable index {var} out of range")
    order = max(a.order - 1, 0)
    out: dict[MultiIndex, object] = {}
    for exps, c in a.coeffs.items():
        e = exps[var]
        if e == 0:
            continue
        new = exps[:var] + (e - 1,) + exps[var + 1:]
        if sum(new) <= order:
            out[new] = c * e
    return Jet(a.num_vars, order, out, a.backend, _trusted=True)


def jet_compose(outer: Jet, inner: Sequence[Jet]) -> Jet:
    """Substitute ``inner[i]`` for variable ``i`` of ``outer``.

    Every inner jet must have zero constant term (re-center the outer jet
    first via :func:`jet_shift` if it does not).
    """
    if len(inner) != outer.num_vars:
        raise JetError(f"arity mismatch: outer has {outer.num_vars} vars, "
                       f"{len(inner)} inner jets given")
    if not inner:
        raise JetError("empty composition")
    nv = inner[0].num_vars
    order = min([outer.order] + [g.order for g in inner])
    for g in inner:
        if g.num_vars != nv or g.backend != outer.backend:
            raise JetError("inner jets must share variable space and backend")
        if g.constant_term() != 0:
            raise JetError("inner jet has nonzero constant term; re-center first")
    backend = outer.backend
    one = Jet.constant(1, nv, order, backend)
    # cache powers of each inner jet
    powers: list[list[Jet]] = [[one] for _ in inner]
    acc = Jet.zero(nv, order, backend)
    for exps, c in outer.items():
        if sum(exps) > order:
            continue
        term = Jet.constant(c, nv, order, backend)
        for i, e in enumerate(exps):
            if e == 0:
                continue
            cache = powers[i]
            while len(cache) <= e:
                cache.append(jet_mul(cache[-1], inner[i]))
            term = jet_mul(term, cache[e])
            if term.is_zero():
                break
        acc = jet_add(acc, term)
    return acc


def jet_shift(a: Jet, offsets: Sequence[object]) -> Jet:
    """Taylor-shift: return the jet of ``a(v + offsets)`` about the new center.

    Exact for polynomial jets (all inputs here are polynomials).
    """
    if len(offsets) != a.num_vars:
        raise JetError("offset arity mismatch")
    offsets = [_coerce(o, a.backend) for o in offsets]
    out = a
    for i, off in enumerate(offsets):
        if off == 0:
            continue
        shifted: dict[MultiIndex, object] = {}
        # binomial expansion in variable i: v^e -> sum_j C(e,j) off^{e-j} v^j
        for exps, c in out.coeffs.items():
            e = exps[i]
            coef = c
            binom = 1
            power = _coerce(1, a.backend)
            # j descending so off powers build up incrementally
            for j in range(e, -1, -1):
                new = exps[:i] + (j,) + exps[i + 1:]
                val = coef * binom * power
                if val != 0:
                    shifted[new] = shifted.get(new, _coerce(0, a.backend)) + val
                    if shifted[new] == 0:
                        del shifted[new]
                binom = binom * j // (e - j + 1) if j > 0 else binom
                power = power * off
        out = Jet(a.num_vars, a.order, shifted, a.backend, _trusted=True)
    return out


def jet_to_float(a: Jet) -> Jet:
    """Coefficientwise nearest-double conversion of an exact jet."""
    if a.backend == FLOAT:
        return a
    out = {e: float(c) for e, c in a.coeffs.items()}
    out = {e: c for e, c in out.items() if c != 0.0}
    return Jet(a.num_vars, a.order, out, FLOAT, _trusted=True)


def _homogeneous_parts(a: Jet, degree: int) -> dict[MultiIndex, object]:
    return {e: c for e, c in a.coeffs.items() if sum(e) == degree}


def jet_solve_implicit(F: Sequence[Jet], order: int,
                       cond_bound: float = 1e12) -> list[Jet]:
    """Solve ``F(u(s), s) = 0`` for ``u(s)`` with ``u(0) = 0``, degree by degree.

    ``F`` is a vector of ``m`` jets in ``m + q`` variables, the first ``m``
    being the unknowns.  Requires ``F(0,0) = 0`` and an invertible Jacobian
    ``dF/du`` at the origin.  Returns ``m`` jets in the ``q`` trailing
    variables, exact on the exact backend.
    """
    from . import linalg

    m = len(F)
    if m == 0:
        raise JetError("empty system")
    nv = F[0].num_vars
    q = nv - m
    if q < 1:
        raise JetError("system needs at least one parameter variable")
    backend = F[0].backend
    for f in F:
        if f.num_vars != nv or f.backend != backend:
            raise JetError("system components must share variable space and backend")
        if f.constant_term() != 0:
            raise JetError("F(0,0) != 0")

    # Jacobian dF/du at 0: coefficient of the linear u_j monomial in F_i.
    jac = [[F[i].coefficient(tuple(1 if k == j else 0 for k in range(nv)))
            for j in range(m)] for i in range(m)]
    if backend == EXACT:
        if linalg.det_exact(jac) == 0:
            raise JetError("singular Jacobian at the origin")
        solve = lambda rhs: linalg.solve_exact(jac, rhs)
    else:
        import numpy as np
        jm = np.array(jac, dtype=float)
        if np.linalg.cond(jm) > cond_bound:
            raise JetError("ill-conditioned Jacobian at the origin")
        solve = lambda rhs: list(np.linalg.solve(jm, np.array(rhs, dtype=float)))

    u = [Jet.zero(q, order, backend) for _ in range(m)]
    s_vars = [Jet.variable(j, q, order, backend) for j in range(q)]
    for degree in range(1, order + 1):
        inner = u + s_vars
        residual = [jet_compose(f.truncate(order), [g.truncate(degree) for g in inner])
                    for f in F]
        # homogeneous degree-`degree` part of the residual drives the correction
        parts = [_homogeneous_parts(r, degree) for r in residual]
        exps_seen = sorted(set().union(*[set(p) for p in parts]))
        if not exps_seen:
            continue
        corrections: list[dict[MultiIndex, object]] = [dict() for _ in range(m)]
        zero = _coerce(0, backend)
        for exps in exps_seen:
            rhs = [-(parts[i].get(exps, zero)) for i in range(m)]
            sol = solve(rhs)
            for i in range(m):
                if sol[i] != 0:
                    corrections[i][exps] = sol[i]
        u = [jet_add(u[i], Jet(q, order, corrections[i], backend, _trusted=True))
             for i in range(m)]
    return u
