"""Exact multivariate polynomial arithmetic over the rationals.

Everything in the synthesis pipeline is built on the :class:`Polynomial`
type defined here: a sparse term map from monomials to ``Fraction``
coefficients.  All arithmetic is exact; no floating point enters the core.

Terms are kept canonical under a graded lexicographic order.  The global
variable order puts user-declared program variables first (in declaration
order) and generated symbols after them, alphabetically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Iterable, Mapping

#: Recognized symbol kinds.  "counter" is the loop-counter symbol n.
KINDS = ("program", "initial", "root", "matrix", "coeff", "param", "counter")


@dataclass(frozen=True)
class Var:
    """A named indeterminate with a kind and optional declaration position."""

    name: str
    kind: str = "program"
    pos: int = -1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")

    @property
    def sort_key(self) -> tuple:
        # Program variables first, in declaration order; generated symbols
        # after them, alphabetically.
        if self.kind == "program" and self.pos >= 0:
            return (0, self.pos, self.name)
        return (1, 0, self.name)

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True)
class Monomial:
    """A power product of variables; exponents are strictly positive."""

    powers: tuple[tuple[Var, int], ...]

    @staticmethod
    def make(powers: Mapping[Var, int]) -> "Monomial":
        items = [(v, e) for v, e in powers.items() if e != 0]
        for v, e in items:
            if e < 0:
                raise ValueError(f"negative exponent for {v.name}")
        items.sort(key=lambda p: p[0].sort_key)
        return Monomial(tuple(items))

    @staticmethod
    def one() -> "Monomial":
        return _MONOMIAL_ONE

    @staticmethod
    def of(v: Var, exp: int = 1) -> "Monomial":
        return Monomial.make({v: exp})

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.powers)

    def degree_of(self, v: Var) -> int:
        for u, e in self.powers:
            if u == v:
                return e
        return 0

    def degree_in(self, vars: Iterable[Var]) -> int:
        vs = set(vars)
        return sum(e for u, e in self.powers if u in vs)

    def variables(self) -> set[Var]:
        return {v for v, _ in self.powers}

    def mul(self, other: "Monomial") -> "Monomial":
        acc = dict(self.powers)
        for v, e in other.powers:
            acc[v] = acc.get(v, 0) + e
        return Monomial.make(acc)

    def pow(self, k: int) -> "Monomial":
        if k < 0:
            raise ValueError("negative monomial power")
        if k == 0:
            return Monomial.one()
        return Monomial.make({v: e * k for v, e in self.powers})

    def divide(self, other: "Monomial") -> "Monomial | None":
        """Return self/other if the division is exact, else None."""
        acc = dict(self.powers)
        for v, e in other.powers:
            r = acc.get(v, 0) - e
            if r < 0:
                return None
            acc[v] = r
        return Monomial.make(acc)

    def without(self, v: Var) -> "Monomial":
        return Monomial(tuple((u, e) for u, e in self.powers if u != v))


def _mono_cmp(a: Monomial, b: Monomial) -> int:
    """Graded lexicographic comparison; earlier variables are more significant."""
    if a.degree != b.degree:
        return -1 if a.degree < b.degree else 1
    da, db = dict(a.powers), dict(b.powers)
    for v in sorted(da.keys() | db.keys(), key=lambda u: u.sort_key):
        ea, eb = da.get(v, 0), db.get(v, 0)
        if ea != eb:
            return 1 if ea > eb else -1
    return 0


MONO_KEY = cmp_to_key(_mono_cmp)
_MONOMIAL_ONE = Monomial(())

Rat = Fraction | int


class Polynomial:
    """A sparse multivariate polynomial with exact rational coefficients.

    Instances are treated as immutable; all operations return new objects.
    The zero polynomial is the empty term map.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Rat] | None = None):
        t: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c != 0:
                    t[m] = c
        object.__setattr__(self, "terms", t)
        object.__setattr__(self, "_hash", None)

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "Polynomial":
        return _ZERO

    @staticmethod
    def const(c: Rat) -> "Polynomial":
        return Polynomial({Monomial.one(): Fraction(c)})

    @staticmethod
    def var(v: Var) -> "Polynomial":
        return Polynomial({Monomial.of(v): Fraction(1)})

    @staticmethod
    def coerce(x: "Polynomial | Rat") -> "Polynomial":
        if isinstance(x, Polynomial):
            return x
        return Polynomial.const(x)

    # -- queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m.degree == 0 for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get(Monomial.one(), Fraction(0))

    @property
    def degree(self) -> int:
        return max((m.degree for m in self.terms), default=0)

    def degree_in(self, v: Var) -> int:
        return max((m.degree_of(v) for m in self.terms), default=0)

    def variables(self) -> set[Var]:
        out: set[Var] = set()
        for m in self.terms:
            out |= m.variables()
        return out

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in descending graded lexicographic order."""
        return sorted(self.terms.items(), key=lambda t: MONO_KEY(t[0]), reverse=True)

    def leading(self) -> tuple[Monomial, Fraction]:
        if self.is_zero():
            raise ValueError("zero polynomial has no leading term")
        m = max(self.terms, key=MONO_KEY)
        return m, self.terms[m]

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        other = Polynomial.coerce(other)
        acc = dict(self.terms)
        for m, c in other.terms.items():
            acc[m] = acc.get(m, Fraction(0)) + c
        return Polynomial(acc)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-Polynomial.coerce(other))

    def __rsub__(self, other):
        return Polynomial.coerce(other) - self

    def __mul__(self, other):
        other = Polynomial.coerce(other)
        acc: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1.mul(m2)
                acc[m] = acc.get(m, Fraction(0)) + c1 * c2
        return Polynomial(acc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative polynomial power")
        out = Polynomial.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def scale(self, c: Rat) -> "Polynomial":
        c = Fraction(c)
        return Polynomial({m: c * k for m, k in self.terms.items()})

    # -- structural operations ----------------------------------------

    def substitute(self, bindings: Mapping[Var, "Polynomial | Rat"]) -> "Polynomial":
        """Simultaneous substitution; unbound variables pass through."""
        if not bindings:
            return self
        subs = {v: Polynomial.coerce(p) for v, p in bindings.items()}
        cache: dict[tuple[Var, int], Polynomial] = {}

        def power(v: Var, e: int) -> Polynomial:
            key = (v, e)
            if key not in cache:
                cache[key] = subs[v] ** e
            return cache[key]

        acc = Polynomial.zero()
        for m, c in self.terms.items():
            term = Polynomial.const(c)
            for v, e in m.powers:
                if v in subs:
                    term = term * power(v, e)
                else:
                    term = term * Polynomial({Monomial.of(v, e): Fraction(1)})
            acc = acc + term
        return acc

    def evaluate(self, assignment: Mapping[Var, Rat]) -> Fraction:
        """Evaluate fully; raises KeyError if a variable is unassigned."""
        total = Fraction(0)
        for m, c in self.terms.items():
            val = c
            for v, e in m.powers:
                val *= Fraction(assignment[v]) ** e
            total += val
        return total

    def coeffs_in(self, v: Var) -> list[tuple[int, "Polynomial"]]:
        """Regroup as sum_k coeff_k * v^k; sorted by degree, zeros omitted."""
        groups: dict[int, dict[Monomial, Fraction]] = {}
        for m, c in self.terms.items():
            k = m.degree_of(v)
            groups.setdefault(k, {})[m.without(v)] = c
        out = []
        for k in sorted(groups):
            p = Polynomial(groups[k])
            if not p.is_zero():
                out.append((k, p))
        return out

    def divexact(self, d: "Polynomial") -> "Polynomial":
        """Exact division; raises ValueError if d does not divide self."""
        if d.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        q = Polynomial.zero()
        r = self
        dm, dc = d.leading()
        while not r.is_zero():
            rm, rc = r.leading()
            tm = rm.divide(dm)
            if tm is None:
                raise ValueError("inexact polynomial division")
            t = Polynomial({tm: rc / dc})
            q = q + t
            r = r - t * d
        return q

    # -- comparison / hashing -----------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(frozenset(self.terms.items())))
        return self._hash

    # -- rendering ----------------------------------------------------

    def __str__(self):
        if self.is_zero():
            return "0"
        parts: list[str] = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            factors = []
            for v, e in sorted(m.powers, key=lambda p: p[0].sort_key):
                factors.append(v.name if e == 1 else f"{v.name}^{e}")
            mono = "*".join(factors)
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            if i == 0:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if c > 0 else f"- {body}")
        return " ".join(parts)

    def __repr__(self):
        return f"Polynomial({self})"


_ZERO = Polynomial()


def sign_normalize(p: Polynomial) -> Polynomial:
    """Flip the sign so the leading coefficient is positive.

    Used to canonicalize polynomials inside (in)equations against zero,
    where p = 0 and -p = 0 mean the same thing.
    """
    if p.is_zero():
        return p
    _, c = p.leading()
    return -p if c < 0 else p


def poly_arith(p: Polynomial, q: Polynomial, op: str) -> Polynomial:
    """Convenience dispatcher for add/sub/mul (mostly for tests)."""
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown operation {op!r}")


class SymbolTable:
    """Tracks declared symbols of a synthesis session.

    Guarantees that generated names never collide with user-declared names
    or with each other.
    """

    def __init__(self):
        self._vars: dict[str, Var] = {}

    def declare(self, var: Var) -> Var:
        existing = self._vars.get(var.name)
        if existing is not None:
            if existing != var:
                raise ValueError(f"symbol {var.name!r} already declared with a different role")
            return existing
        self._vars[var.name] = var
        return var

    def fresh(self, base: str, kind: str) -> Var:
        name = base
        while name in self._vars:
            name = "_" + name
        return self.declare(Var(name, kind))

    def __contains__(self, name: str) -> bool:
        return name in self._vars

    def get(self, name: str) -> Var | None:
        return self._vars.get(name)

    def all(self) -> list[Var]:
        return sorted(self._vars.values(), key=lambda v: v.sort_key)
