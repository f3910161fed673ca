"""Constraint generation: from a recurrence template and invariants to the
polynomial constraint problem whose solutions are exactly the loops
satisfying those invariants.

Four clause families are produced:

- root clauses: the symbolic eigenvalues (with chosen multiplicities) are
  exactly the roots of the characteristic polynomial, all nonzero and
  pairwise distinct;
- coefficient clauses: the closed-form coefficient columns are consistent
  with one application of the update matrix;
- initial-value clauses: the closed form agrees with the unrolled system at
  n = 0, ..., s-1;
- relation clauses: substituting the closed forms into each invariant gives
  an exponential polynomial that must vanish for all n; grouping by powers
  of n and instantiating n = 0, ..., l-1 (l = number of distinct
  exponential bases) turns that into finitely many polynomial equalities.

For parameterized templates all clauses are decomposed over the parameter
symbols so the resulting problem is parameter-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .constraints import Clause, Pcp, decompose, decompose_poly
from .matrix import SymMatrix, char_poly, mat_apply
from .poly import Monomial, MONO_KEY, Polynomial, Var
from .template import RecurrenceTemplate


class DegenerateInvariantError(ValueError):
    """The invariant forces a constant contradiction; no loop can satisfy it."""


@dataclass(frozen=True)
class CFiniteConstraint:
    """A constraint sum_i w_i^n * u_i = 0 (for all n), with the w_i kept as
    syntactically distinct monomials in the root symbols."""

    terms: tuple[tuple[Monomial, Polynomial], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("empty constraint")
        ws = [w for w, _ in self.terms]
        if len(set(ws)) != len(ws):
            raise ValueError("exponential bases must be syntactically distinct")

    @property
    def length(self) -> int:
        return len(self.terms)

    def instantiate(self, n: int) -> Polynomial:
        """The polynomial equality obtained by fixing the iteration index."""
        acc = Polynomial.zero()
        for w, u in self.terms:
            acc = acc + Polynomial({w.pow(n): Fraction(1)}) * u
        return acc


class ExpPoly:
    """An exponential polynomial in the iteration index n:

        sum over (w, k) of  coeff * w^n * n^k

    with w a monomial in the root symbols and coeff an ordinary polynomial.
    Only the arithmetic needed for invariant substitution is provided.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[Monomial, int], Polynomial] | None = None):
        t: dict[tuple[Monomial, int], Polynomial] = {}
        if terms:
            for key, p in terms.items():
                if not p.is_zero():
                    t[key] = p
        self.terms = t

    @staticmethod
    def const(p: Polynomial) -> "ExpPoly":
        return ExpPoly({(Monomial.one(), 0): p})

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        acc = dict(self.terms)
        for key, p in other.terms.items():
            acc[key] = acc.get(key, Polynomial.zero()) + p
        return ExpPoly(acc)

    def __mul__(self, other: "ExpPoly") -> "ExpPoly":
        acc: dict[tuple[Monomial, int], Polynomial] = {}
        for (w1, k1), p1 in self.terms.items():
            for (w2, k2), p2 in other.terms.items():
                key = (w1.mul(w2), k1 + k2)
                acc[key] = acc.get(key, Polynomial.zero()) + p1 * p2
        return ExpPoly(acc)

    def pow(self, k: int) -> "ExpPoly":
        out = ExpPoly.const(Polynomial.const(1))
        for _ in range(k):
            out = out * self
        return out

    def scale(self, c: Fraction) -> "ExpPoly":
        return ExpPoly({key: p.scale(c) for key, p in self.terms.items()})

    def by_npower(self) -> dict[int, dict[Monomial, Polynomial]]:
        """Regroup as { n-power: { exponential base: coefficient } }."""
        out: dict[int, dict[Monomial, Polynomial]] = {}
        for (w, k), p in self.terms.items():
            out.setdefault(k, {})[w] = out.get(k, {}).get(w, Polynomial.zero()) + p
        return out


def closed_forms(tpl: RecurrenceTemplate) -> list[ExpPoly]:
    """Per-variable closed form as an exponential polynomial."""
    forms = []
    for i in range(tpl.size):
        terms: dict[tuple[Monomial, int], Polynomial] = {}
        for (w, j), col in tpl.coeff_columns.items():
            terms[(Monomial.of(w), j - 1)] = col[i]
        forms.append(ExpPoly(terms))
    return forms


def gen_roots(tpl: RecurrenceTemplate) -> list[Clause]:
    z = tpl.symtab.fresh("z", "root")
    chi = char_poly(tpl.b, z)
    product = Polynomial.const(1)
    for w, m in tpl.rootspec:
        product = product * (Polynomial.var(z) - Polynomial.var(w)) ** m
    difference = chi - product
    out = [Clause.unit(coeff) for _, coeff in difference.coeffs_in(z)]
    roots = [w for w, _ in tpl.rootspec]
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            out.append(Clause.unit(Polynomial.var(roots[i]) - Polynomial.var(roots[j]), "!="))
    for w in roots:
        out.append(Clause.unit(Polynomial.var(w), "!="))
    return out


def gen_coeff(tpl: RecurrenceTemplate) -> list[Clause]:
    out: list[Clause] = []
    for w, m in tpl.rootspec:
        wpoly = Polynomial.var(w)
        for j in range(1, m + 1):
            shifted = [Polynomial.zero()] * tpl.size
            for k in range(j, m + 1):
                coef = math.comb(k - 1, j - 1)
                col = tpl.coeff_columns[(w, k)]
                shifted = [acc + col[i] * wpoly * coef for i, acc in enumerate(shifted)]
            applied = mat_apply(tpl.b, tpl.coeff_columns[(w, j)])
            for lhs, rhs in zip(shifted, applied):
                out.append(Clause.unit(lhs - rhs))
    return out


def gen_init(tpl: RecurrenceTemplate) -> list[Clause]:
    out: list[Clause] = []
    for n in range(tpl.size):
        # closed form evaluated at the concrete index n
        x_n = [Polynomial.zero()] * tpl.size
        for (w, j), col in tpl.coeff_columns.items():
            factor = Polynomial({Monomial.of(w, n): Fraction(1)}) if n > 0 else Polynomial.const(1)
            weight = Fraction(n) ** (j - 1) if n > 0 or j == 1 else Fraction(0)
            if weight == 0:
                continue
            x_n = [acc + col[i] * factor * weight for i, acc in enumerate(x_n)]
        unrolled = mat_apply(tpl.b.pow(n), tpl.init_exprs)
        for lhs, rhs in zip(x_n, unrolled):
            out.append(Clause.unit(lhs - rhs))
    return out


def substitute_invariant(tpl: RecurrenceTemplate, invariant: Polynomial) -> ExpPoly:
    """Substitute closed forms (and parameters for themselves) into p."""
    forms = closed_forms(tpl)
    by_var = {v: forms[i] for i, v in enumerate(tpl.vars)}
    for p in tpl.params:
        by_var[p] = ExpPoly.const(Polynomial.var(p))
    unknown = invariant.variables() - set(by_var)
    if unknown:
        names = ", ".join(sorted(v.name for v in unknown))
        raise ValueError(f"invariant mentions unknown variable(s): {names}")

    total = ExpPoly()
    cache: dict[tuple[Var, int], ExpPoly] = {}
    for mono, coeff in invariant.terms.items():
        term = ExpPoly.const(Polynomial.const(coeff))
        for v, e in mono.powers:
            key = (v, e)
            if key not in cache:
                cache[key] = by_var[v].pow(e)
            term = term * cache[key]
        total = total + term
    return total


def gen_alg(
    tpl: RecurrenceTemplate, invariants: Sequence[Polynomial]
) -> tuple[list[Clause], list[CFiniteConstraint]]:
    clauses: list[Clause] = []
    cfcs: list[CFiniteConstraint] = []
    for p in invariants:
        grouped = substitute_invariant(tpl, p).by_npower()
        for npow in sorted(grouped):
            group = {w: u for w, u in grouped[npow].items() if not u.is_zero()}
            if not group:
                continue
            ws = sorted(group, key=MONO_KEY)
            ell = len(ws)
            for j in range(ell):
                acc = Polynomial.zero()
                for w in ws:
                    acc = acc + Polynomial({w.pow(j): Fraction(1)}) * group[w]
                clauses.append(Clause.unit(acc))
            cfcs.extend(_structured_constraints(tpl, [(w, group[w]) for w in ws]))
    return clauses, cfcs


def _structured_constraints(
    tpl: RecurrenceTemplate, terms: list[tuple[Monomial, Polynomial]]
) -> list[CFiniteConstraint]:
    """Split one exponential sum into parameter-free structured constraints.

    Without parameters the sum itself is the constraint.  With parameters
    each u is a polynomial in the parameter symbols; the sum must vanish
    for every parameter valuation, so each parameter-monomial slice must
    vanish independently.
    """
    if not tpl.params:
        return [CFiniteConstraint(tuple(terms))]
    params = list(tpl.params)
    out: list[CFiniteConstraint] = []
    slices: dict[Monomial, list[tuple[Monomial, Polynomial]]] = {}
    for w, u in terms:
        groups: dict[Monomial, dict[Monomial, Fraction]] = {}
        for mono, coeff in u.terms.items():
            pm = Monomial.make({v: mono.degree_of(v) for v in params})
            rest = mono
            for v in params:
                rest = rest.without(v)
            groups.setdefault(pm, {})[rest] = groups.get(pm, {}).get(rest, Fraction(0)) + coeff
        for pm, restterms in groups.items():
            upart = Polynomial(restterms)
            if not upart.is_zero():
                slices.setdefault(pm, []).append((w, upart))
    for pm in sorted(slices, key=MONO_KEY):
        out.append(CFiniteConstraint(tuple(slices[pm])))
    return out


@dataclass
class PcpBundle:
    """Everything the solver layer needs for one search cell."""

    template: RecurrenceTemplate
    pcp: Pcp  # full problem, relation instantiations included
    hard: Pcp  # without the relation instantiations (structured solving)
    alg_clauses: list[Clause]
    cfcs: list[CFiniteConstraint]

    def add_side_clauses(self, clauses: Iterable[Clause]) -> None:
        """Add clauses (e.g. nontriviality, model blocking) to both views."""
        clauses = list(clauses)
        self.pcp.extend(clauses)
        self.hard.extend(clauses)


def build_pcp(tpl: RecurrenceTemplate, invariants: Sequence[Polynomial]) -> PcpBundle:
    """Union of the four clause families, in a fixed deterministic order.

    For parameterized templates every clause is decomposed over the
    parameter symbols; the result is guaranteed parameter-free.
    """
    base = gen_roots(tpl) + gen_coeff(tpl) + gen_init(tpl)
    alg, cfcs = gen_alg(tpl, invariants)
    if tpl.params:
        params = list(tpl.params)
        base = decompose(base, params)
        alg = decompose(alg, params)
        for c in base + alg:
            leftover = c.variables() & set(params)
            if leftover:
                raise AssertionError(f"parameter symbols survived decomposition: {leftover}")
    _reject_degenerate(alg)
    return PcpBundle(
        template=tpl,
        pcp=Pcp(base + alg),
        hard=Pcp(base),
        alg_clauses=alg,
        cfcs=cfcs,
    )


def _reject_degenerate(clauses: Iterable[Clause]) -> None:
    for c in clauses:
        if c.is_unit_equality:
            lhs = c.atoms[0].lhs
            if lhs.is_constant() and not lhs.is_zero():
                raise DegenerateInvariantError(
                    f"invariant reduces to the contradiction {lhs} = 0; no loop can satisfy it"
                )
