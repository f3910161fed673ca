"""Polynomial constraint problems: atoms, clauses, clause sets.

A constraint problem is a set of clauses, each a disjunction of polynomial
(in)equalities against zero.  A single variable assignment must satisfy all
clauses at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .poly import Polynomial, Var, sign_normalize

RELATIONS = ("=", "!=", "<", "<=", ">", ">=")
_FLIP = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


@dataclass(frozen=True)
class Atom:
    """A single constraint `lhs rel 0` with canonical lhs."""

    lhs: Polynomial
    rel: str

    @staticmethod
    def make(lhs: Polynomial, rel: str) -> "Atom":
        if rel not in RELATIONS:
            raise ValueError(f"unknown relation {rel!r}")
        norm = sign_normalize(lhs)
        if norm is not lhs and norm != lhs:
            rel = _FLIP[rel]
        return Atom(norm, rel)

    def holds(self, assignment: Mapping[Var, Fraction]) -> bool:
        v = self.lhs.evaluate(assignment)
        if self.rel == "=":
            return v == 0
        if self.rel == "!=":
            return v != 0
        if self.rel == "<":
            return v < 0
        if self.rel == "<=":
            return v <= 0
        if self.rel == ">":
            return v > 0
        return v >= 0

    def __str__(self):
        return f"{self.lhs} {self.rel} 0"


@dataclass(frozen=True)
class Clause:
    """A nonempty disjunction of atoms; `soft` marks optimization targets."""

    atoms: tuple[Atom, ...]
    soft: bool = False

    @staticmethod
    def unit(lhs: Polynomial, rel: str = "=", soft: bool = False) -> "Clause":
        return Clause((Atom.make(lhs, rel),), soft)

    @staticmethod
    def any(parts: Iterable[tuple[Polynomial, str]], soft: bool = False) -> "Clause":
        atoms = tuple(Atom.make(p, r) for p, r in parts)
        if not atoms:
            raise ValueError("clause needs at least one disjunct")
        return Clause(atoms, soft)

    @property
    def is_unit_equality(self) -> bool:
        return len(self.atoms) == 1 and self.atoms[0].rel == "="

    def holds(self, assignment: Mapping[Var, Fraction]) -> bool:
        return any(a.holds(assignment) for a in self.atoms)

    def variables(self) -> set[Var]:
        out: set[Var] = set()
        for a in self.atoms:
            out |= a.lhs.variables()
        return out

    def __str__(self):
        return " or ".join(str(a) for a in self.atoms)


class Pcp:
    """An ordered, deduplicated clause set with its symbol table.

    Clause order is insertion order, which makes downstream solver scripts
    deterministic.
    """

    def __init__(self, clauses: Iterable[Clause] = ()):
        self.clauses: list[Clause] = []
        self._seen: set[Clause] = set()
        for c in clauses:
            self.add(c)

    def add(self, clause: Clause) -> None:
        if clause not in self._seen:
            self._seen.add(clause)
            self.clauses.append(clause)

    def extend(self, clauses: Iterable[Clause]) -> None:
        for c in clauses:
            self.add(c)

    def variables(self) -> list[Var]:
        out: set[Var] = set()
        for c in self.clauses:
            out |= c.variables()
        return sorted(out, key=lambda v: v.sort_key)

    def check_model(self, assignment: Mapping[Var, Fraction]) -> Clause | None:
        """Return the first violated clause, or None if the model satisfies all."""
        for c in self.clauses:
            if not c.holds(assignment):
                return c
        return None

    def to_json(self) -> str:
        payload = {
            "symbols": [{"name": v.name, "kind": v.kind} for v in self.variables()],
            "clauses": [
                {
                    "soft": c.soft,
                    "atoms": [{"lhs": str(a.lhs), "rel": a.rel} for a in c.atoms],
                }
                for c in self.clauses
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    def __str__(self):
        return "\n".join(str(c) for c in self.clauses)


def decompose_poly(p: Polynomial, vars: Sequence[Var]) -> list[Polynomial]:
    """All coefficients of p with respect to the monomials in `vars`.

    p = 0 holds for every valuation of `vars` exactly when all returned
    polynomials are zero (a nonzero polynomial has finitely many roots).
    """
    if not vars:
        return [p]
    *rest, last = vars
    out: list[Polynomial] = []
    for _, coeff in p.coeffs_in(last):
        out.extend(decompose_poly(coeff, rest))
    if not out:
        out.append(Polynomial.zero())
    return out


def decompose(clauses: Iterable[Clause], vars: Sequence[Var]) -> list[Clause]:
    """Eliminate `vars` from every unit equality by coefficient collection.

    Unit equalities p = 0 are replaced by one equality per coefficient of
    the monomials in `vars`; any other clause passes through unchanged.
    """
    out: list[Clause] = []
    for c in clauses:
        if vars and c.is_unit_equality:
            for q in decompose_poly(c.atoms[0].lhs, vars):
                out.append(Clause.unit(q, "=", soft=c.soft))
        else:
            out.append(c)
    return out
