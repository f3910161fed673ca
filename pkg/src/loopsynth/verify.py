"""Exact invariant checking for concrete affine systems.

The check is a decision procedure, not a bounded heuristic: substituting a
linear system into a polynomial yields a C-finite sequence whose order is
bounded by the syntactic closure rules, and such a sequence is identically
zero exactly when its first `order` values are zero.  Unrolling up to the
bound therefore proves or refutes the invariant.

Entries of the system may be linear forms over parameter symbols; in that
case the unrolled values are polynomials and the invariant must reduce to
the identically-zero polynomial at every step, which proves it for all
parameter instantiations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .poly import Polynomial, Rat, Var

Value = Polynomial | Fraction


@dataclass(frozen=True)
class ConcreteSystem:
    """A concrete simultaneous-update system X_{n+1} = U X_n, X_0 = V."""

    vars: tuple[Var, ...]
    update: tuple[tuple[Value, ...], ...]
    init: tuple[Value, ...]

    def __post_init__(self):
        s = len(self.vars)
        if len(self.update) != s or any(len(row) != s for row in self.update):
            raise ValueError("update matrix shape does not match the variable count")
        if len(self.init) != s:
            raise ValueError("initial vector length does not match the variable count")

    @property
    def size(self) -> int:
        return len(self.vars)

    def step(self, state: Sequence[Value]) -> tuple[Value, ...]:
        out = []
        for row in self.update:
            acc: Value = Fraction(0)
            for coef, val in zip(row, state):
                acc = acc + coef * val
            out.append(acc)
        return tuple(out)


@dataclass(frozen=True)
class Verdict:
    holds: bool
    bound_used: int
    witness: tuple[int, Value] | None = None  # (iteration, nonzero value)

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise ValueError("a failing verdict needs a witness")


def order_bound(p: Polynomial, s: int, sequence_vars: Sequence[Var] | None = None) -> int:
    """Upper bound on the order of the sequence p(X_n).

    Each variable driven by the size-s system is a sequence of order at
    most s; products multiply orders, sums add them.  Symbols that are not
    sequence variables (parameters, initial values) are constants of order
    one.
    """
    seq = set(sequence_vars) if sequence_vars is not None else {v for v in p.variables()}
    total = 0
    for mono in p.terms:
        total += s ** mono.degree_in(seq)
    return max(total, 1)


def check_invariant(sys: ConcreteSystem, p: Polynomial) -> Verdict:
    """Decide whether p = 0 holds at every iteration of the system.

    Variables of p that are program variables take the unrolled values;
    any other symbol (a parameter) passes through symbolically.
    """
    bound = order_bound(p, sys.size, sys.vars)
    state = sys.init
    for n in range(bound):
        bindings: dict[Var, Polynomial | Rat] = {
            v: state[i] for i, v in enumerate(sys.vars) if v in p.variables()
        }
        value = p.substitute(bindings)
        if not value.is_zero():
            witness: Value = value.constant_value() if value.is_constant() else value
            return Verdict(holds=False, bound_used=bound, witness=(n, witness))
        state = sys.step(state)
    return Verdict(holds=True, bound_used=bound)


def check_equiv_modulo(
    sys1: ConcreteSystem,
    sys2: ConcreteSystem,
    p: Polynomial,
    bijection: Mapping[Var, Var],
) -> bool:
    """True iff p = 0 is an invariant of sys1 and of sys2 after renaming
    p's variables through the bijection (sys1 vars -> sys2 vars)."""
    if len(set(bijection.values())) != len(bijection):
        raise ValueError("variable map is not injective")
    missing = {v for v in p.variables() if v in set(sys1.vars)} - set(bijection)
    if missing:
        names = ", ".join(sorted(v.name for v in missing))
        raise ValueError(f"variable map does not cover: {names}")
    renamed = p.substitute({v: Polynomial.var(w) for v, w in bijection.items()})
    return check_invariant(sys1, p).holds and check_invariant(sys2, renamed).holds
