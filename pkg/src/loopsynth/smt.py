"""External SMT solving over nonlinear real arithmetic.

The solver is any executable speaking SMT-LIB 2 on stdin/stdout (the
default is a bundled Node.js wrapper around the z3 WebAssembly build).
Every satisfiable answer with a rational model is re-checked exactly in
Python before it is trusted; irrational model values are surfaced as
:class:`AlgebraicTag` so callers can refuse them explicitly.

`solve_structured` implements a staged search for constraints of the shape
sum_i w_i^n u_i = 0 for all n:  first a pass forcing every coefficient u_i
to zero (the common easy case), then a relaxed solve whose model suggests
how the exponential bases w_i coincide, then—if the suggestion was wrong—an
enumeration of all coincidence patterns.  Within one pattern the constraint
is equivalent to per-block sums being zero (the powers of pairwise-distinct
values form an invertible Vandermonde system), which is expressible without
the iteration index.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .constraints import Clause, Pcp
from .pcpgen import CFiniteConstraint
from .poly import MONO_KEY, Monomial, Polynomial, Var

SOLVER_ENV = "LOOPSYNTH_SOLVER"


class SolverError(RuntimeError):
    """The external solver failed, produced garbage, or lied."""


class SolverTimeout(SolverError):
    """The budget ran out before the solver answered."""


@dataclass(frozen=True)
class AlgebraicTag:
    """An irrational algebraic model value, kept as an opaque description."""

    description: str
    index: int = 0

    def __str__(self):
        return f"<algebraic #{self.index}: {self.description}>"


ModelValue = Fraction | AlgebraicTag


@dataclass(frozen=True)
class SolverConfig:
    command: tuple[str, ...]
    timeout: float = 60.0

    @staticmethod
    def default(timeout: float = 60.0) -> "SolverConfig":
        return SolverConfig(command=tuple(default_solver_command()), timeout=timeout)


def default_solver_command() -> list[str]:
    """Solver command: $LOOPSYNTH_SOLVER if set, else the bundled wrapper."""
    env = os.environ.get(SOLVER_ENV)
    if env:
        return shlex.split(env)
    script = resources.files("loopsynth").joinpath("data/z3smt2.mjs")
    return ["node", str(script)]


@dataclass
class SolveResult:
    status: str  # sat | unsat | unknown
    model: dict[Var, ModelValue] = field(default_factory=dict)
    core: tuple[str, ...] = ()

    @property
    def rational(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.model.values())

    def rational_model(self) -> dict[Var, Fraction]:
        if not self.rational:
            bad = [str(v) for v in self.model.values() if isinstance(v, AlgebraicTag)]
            raise SolverError(f"model contains irrational values: {', '.join(bad)}")
        return dict(self.model)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# SMT-LIB emission


def _smt_rational(c: Fraction) -> str:
    if c < 0:
        return f"(- {_smt_rational(-c)})"
    if c.denominator == 1:
        return str(c.numerator)
    return f"(/ {c.numerator} {c.denominator})"


def _smt_poly(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for mono, coeff in p.sorted_terms():
        factors = []
        for v, e in mono.powers:
            factors.extend([v.name] * e)
        if not factors:
            parts.append(_smt_rational(coeff))
        elif coeff == 1 and len(factors) == 1:
            parts.append(factors[0])
        else:
            items = ([] if coeff == 1 else [_smt_rational(coeff)]) + factors
            parts.append(items[0] if len(items) == 1 else "(* " + " ".join(items) + ")")
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def _smt_atom(lhs: Polynomial, rel: str) -> str:
    body = f"(= {_smt_poly(lhs)} 0)"
    if rel == "=":
        return body
    if rel == "!=":
        return f"(not {body})"
    return f"({rel} {_smt_poly(lhs)} 0)"


def _smt_clause(c: Clause) -> str:
    rendered = [_smt_atom(a.lhs, a.rel) for a in c.atoms]
    return rendered[0] if len(rendered) == 1 else "(or " + " ".join(rendered) + ")"


def emit_smtlib(
    clauses: Sequence[Clause],
    variables: Iterable[Var] | None = None,
    *,
    get_model: bool = True,
    named: bool = False,
) -> str:
    """Deterministic SMT-LIB 2 script for the clause set.

    Soft clauses become `assert-soft`; when any are present the logic
    declaration is omitted so the optimizing engine is engaged.  With
    `named`, hard asserts are labeled c0, c1, ... and an unsat core is
    requested.
    """
    if variables is None:
        vs: set[Var] = set()
        for c in clauses:
            vs |= c.variables()
        variables = vs
    declared = sorted(set(variables), key=lambda v: v.sort_key)
    has_soft = any(c.soft for c in clauses)

    lines = []
    if named:
        lines.append("(set-option :produce-unsat-cores true)")
    if not has_soft:
        lines.append("(set-logic QF_NRA)")
    for v in declared:
        lines.append(f"(declare-const {v.name} Real)")
    hard_idx = 0
    for c in clauses:
        body = _smt_clause(c)
        if c.soft:
            lines.append(f"(assert-soft {body})")
        elif named:
            lines.append(f"(assert (! {body} :named c{hard_idx}))")
            hard_idx += 1
        else:
            lines.append(f"(assert {body})")
    lines.append("(check-sat)")
    if get_model:
        lines.append("(get-model)")
    if named:
        lines.append("(get-unsat-core)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# output parsing


def _sexpr_tokens(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_sexprs(tokens: list[str]) -> list:
    out = []
    stack: list[list] = []
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise SolverError("unbalanced solver output")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            (stack[-1] if stack else out).append(tok)
    if stack:
        raise SolverError("unbalanced solver output")
    return out


def _atom_to_value(node) -> ModelValue:
    if isinstance(node, str):
        try:
            return Fraction(node)
        except ValueError:
            return AlgebraicTag(node)
    if not node:
        return AlgebraicTag("()")
    head = node[0]
    if head == "-" and len(node) == 2:
        v = _atom_to_value(node[1])
        if isinstance(v, Fraction):
            return -v
        return AlgebraicTag(f"(- {v.description})", v.index)
    if head == "/" and len(node) == 3:
        a, b = _atom_to_value(node[1]), _atom_to_value(node[2])
        if isinstance(a, Fraction) and isinstance(b, Fraction) and b != 0:
            return a / b
        return AlgebraicTag(_unparse(node))
    if head == "root-obj" and len(node) == 3:
        try:
            index = int(node[2])
        except (TypeError, ValueError):
            index = 0
        return AlgebraicTag(_unparse(node[1]), index)
    return AlgebraicTag(_unparse(node))


def _unparse(node) -> str:
    if isinstance(node, str):
        return node
    return "(" + " ".join(_unparse(x) for x in node) + ")"


def parse_solver_output(text: str, variables: Iterable[Var]) -> SolveResult:
    by_name = {v.name: v for v in variables}
    status = None
    for line in text.splitlines():
        line = line.strip()
        if line in ("sat", "unsat", "unknown"):
            status = line
            break
        if line.startswith("(error"):
            raise SolverError(f"solver error: {line}")
    if status is None:
        raise SolverError(f"no sat/unsat/unknown in solver output:\n{text[:2000]}")

    rest = text.split(status, 1)[1]
    model: dict[Var, ModelValue] = {}
    core: list[str] = []
    for node in _parse_sexprs(_sexpr_tokens(rest)):
        if not isinstance(node, list):
            continue
        if node and node[0] == "error":
            continue  # e.g. get-model after unsat
        items = node if any(isinstance(x, list) and x and x[0] == "define-fun" for x in node) else [node]
        for item in items:
            if isinstance(item, list) and len(item) >= 5 and item[0] == "define-fun":
                name = item[1]
                if name in by_name:
                    model[by_name[name]] = _atom_to_value(item[4])
        if all(isinstance(x, str) and x.startswith("c") for x in node) and node:
            core = list(node)
    if status == "sat":
        for v in by_name.values():
            model.setdefault(v, Fraction(0))
    return SolveResult(status=status, model=model if status == "sat" else {}, core=tuple(core))


# ---------------------------------------------------------------------------
# running the solver


def run_solver(script: str, cfg: SolverConfig, timeout: float | None = None) -> str:
    budget = cfg.timeout if timeout is None else timeout
    if budget <= 0:
        raise SolverTimeout("no time budget left")
    try:
        proc = subprocess.run(
            list(cfg.command),
            input=script,
            capture_output=True,
            text=True,
            timeout=budget,
        )
    except FileNotFoundError as e:
        raise SolverError(f"cannot run solver {cfg.command[0]!r}: {e}") from None
    except subprocess.TimeoutExpired:
        raise SolverTimeout(f"solver exceeded {budget:.1f}s") from None
    if proc.returncode not in (0, 1):  # some solvers exit 1 on unsat
        raise SolverError(
            f"solver exited with status {proc.returncode}: {proc.stderr.strip()[:2000]}"
        )
    return proc.stdout


def solve(
    clauses: Sequence[Clause],
    cfg: SolverConfig,
    variables: Iterable[Var] | None = None,
    timeout: float | None = None,
    named: bool = False,
) -> SolveResult:
    if variables is None:
        vs: set[Var] = set()
        for c in clauses:
            vs |= c.variables()
        variables = sorted(vs, key=lambda v: v.sort_key)
    else:
        variables = list(variables)
    script = emit_smtlib(clauses, variables, named=named)
    output = run_solver(script, cfg, timeout)
    result = parse_solver_output(output, variables)
    if result.status == "sat" and result.rational:
        violated = _first_violated(clauses, result.rational_model())
        if violated is not None:
            raise SolverError(f"solver model fails exact re-check on: {violated}")
    return result


def _first_violated(clauses: Iterable[Clause], model: Mapping[Var, Fraction]) -> Clause | None:
    for c in clauses:
        if c.soft:
            continue
        if not c.holds(model):
            return c
    return None


# ---------------------------------------------------------------------------
# structured solving for exponential-sum constraints


def set_partitions(n: int) -> list[tuple[tuple[int, ...], ...]]:
    """All set partitions of {0,...,n-1}, by decreasing block count and
    lexicographically within one block count.  Blocks are sorted tuples,
    ordered by their least element."""
    parts: list[tuple[tuple[int, ...], ...]] = []

    def rec(i: int, blocks: list[list[int]]):
        if i == n:
            parts.append(tuple(tuple(b) for b in blocks))
            return
        for b in blocks:
            b.append(i)
            rec(i + 1, blocks)
            b.pop()
        blocks.append([i])
        rec(i + 1, blocks)
        blocks.pop()

    rec(0, [])
    parts.sort(key=lambda p: (-len(p), p))
    return parts


def vandermonde_zero_check(ws: Sequence[Fraction], us: Sequence[Fraction]) -> bool:
    """For pairwise-distinct bases, decide whether sum_i ws[i]^n us[i]
    vanishes at n = 0, ..., len-1 — which forces it to vanish for all n,
    because the Vandermonde system in the us is invertible.  Confirms that
    implication (all us must then be zero) and returns the premise."""
    ell = len(ws)
    if len(set(ws)) != ell or len(us) != ell:
        raise ValueError("need equally many pairwise-distinct bases and coefficients")
    for n in range(ell):
        if sum(w**n * u for w, u in zip(ws, us)) != 0:
            return False
    assert all(u == 0 for u in us), "distinct-base exponential sum vanished with nonzero coefficients"
    return True


@dataclass
class StructuredResult:
    status: str  # sat | unsat | unknown
    model: dict[Var, ModelValue] = field(default_factory=dict)
    partition: tuple[tuple[int, ...], ...] | None = None  # base-coincidence blocks

    @property
    def rational(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.model.values())


_MAX_ENUMERATED_BASES = 8


def solve_structured(
    hard: Pcp,
    cfcs: Sequence[CFiniteConstraint],
    full: Pcp,
    cfg: SolverConfig,
    timeout: float | None = None,
) -> StructuredResult:
    """Solve `hard` together with the for-all-n exponential-sum constraints.

    `full` is the same problem with the constraints instantiated at
    n = 0, ..., l-1; it is a necessary relaxation (unsat there is unsat
    everywhere) and its models suggest which bases coincide.
    """
    deadline = time.monotonic() + (cfg.timeout if timeout is None else timeout)

    def remaining() -> float:
        left = deadline - time.monotonic()
        if left <= 0:
            raise SolverTimeout("structured search ran out of time")
        return left

    variables = sorted(
        set(hard.variables()) | _cfc_variables(cfcs), key=lambda v: v.sort_key
    )
    if not cfcs:
        res = solve(list(hard), cfg, variables, remaining())
        return StructuredResult(res.status, res.model, None)

    ws = sorted({w for cfc in cfcs for w, _ in cfc.terms}, key=MONO_KEY)
    w_polys = [Polynomial({w: Fraction(1)}) for w in ws]
    us = [u for cfc in cfcs for _, u in cfc.terms]

    # stage 1: every coefficient zero (satisfies the constraints trivially)
    allzero = [Clause.unit(u) for u in us]
    res = solve(list(hard) + allzero, cfg, variables, remaining())
    if res.status == "sat":
        return StructuredResult("sat", dict(res.model), _singletons(len(ws)))

    # stage 2: relaxed solve; a valid model ends the search, an invalid one
    # still reveals a candidate coincidence pattern for the bases
    hint: tuple[tuple[int, ...], ...] | None = None
    res = solve(list(full), cfg, timeout=remaining())
    if res.status != "sat":
        return StructuredResult(res.status)
    if res.rational:
        model = res.rational_model()
        if _sums_vanish(model, cfcs):
            hint = _partition_from_values([p.evaluate(model) for p in w_polys])
            return StructuredResult("sat", dict(res.model), hint)
        hint = _partition_from_values([p.evaluate(model) for p in w_polys])

    # stage 3: enumerate base-coincidence patterns, suggested one first
    if len(ws) > _MAX_ENUMERATED_BASES:
        candidates = [hint] if hint is not None else []
    else:
        candidates = set_partitions(len(ws))
        if hint is not None and hint in candidates:
            candidates = [hint] + [p for p in candidates if p != hint]
    undecided = len(ws) > _MAX_ENUMERATED_BASES
    for blocks in candidates:
        res = solve(list(hard) + _block_clauses(blocks, w_polys, cfcs, ws),
                    cfg, variables, remaining())
        if res.status == "unknown":
            undecided = True
            continue
        if res.status == "sat":
            if res.rational:
                _check_structured(res.rational_model(), cfcs)
            return StructuredResult("sat", dict(res.model), blocks)
    return StructuredResult("unknown" if undecided else "unsat")


def _sums_vanish(model: Mapping[Var, Fraction], cfcs: Sequence[CFiniteConstraint]) -> bool:
    """Exact test that each exponential sum vanishes for all n under the
    model: coefficients of coinciding base values must cancel per value."""
    for cfc in cfcs:
        sums: dict[Fraction, Fraction] = {}
        for w, u in cfc.terms:
            wv = Polynomial({w: Fraction(1)}).evaluate(model)
            sums[wv] = sums.get(wv, Fraction(0)) + u.evaluate(model)
        if any(v != 0 for v in sums.values()):
            return False
    return True


def _singletons(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple((i,) for i in range(n))


def _partition_from_values(values: Sequence[Fraction]) -> tuple[tuple[int, ...], ...]:
    groups: dict[Fraction, list[int]] = {}
    for i, v in enumerate(values):
        groups.setdefault(v, []).append(i)
    blocks = sorted((tuple(g) for g in groups.values()), key=lambda b: b[0])
    return tuple(blocks)


def _block_clauses(
    blocks: Sequence[Sequence[int]],
    w_polys: Sequence[Polynomial],
    cfcs: Sequence[CFiniteConstraint],
    ws: Sequence[Monomial],
) -> list[Clause]:
    """Constraints pinning one base-coincidence pattern: bases equal within
    a block, block representatives pairwise distinct, and for each
    constraint the coefficients of each block summing to zero."""
    index = {w: i for i, w in enumerate(ws)}
    out: list[Clause] = []
    for block in blocks:
        rep = block[0]
        for other in block[1:]:
            out.append(Clause.unit(w_polys[rep] - w_polys[other]))
    reps = [b[0] for b in blocks]
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            out.append(Clause.unit(w_polys[reps[i]] - w_polys[reps[j]], "!="))
    for cfc in cfcs:
        for block in blocks:
            members = set(block)
            total = Polynomial.zero()
            touched = False
            for w, u in cfc.terms:
                if index[w] in members:
                    total = total + u
                    touched = True
            if touched:
                out.append(Clause.unit(total))
    return out


def _check_structured(model: Mapping[Var, Fraction], cfcs: Sequence[CFiniteConstraint]) -> None:
    """Exact confirmation that each exponential sum vanishes for all n."""
    if not _sums_vanish(model, cfcs):
        raise SolverError("solver model fails exact exponential-sum re-check")
    for cfc in cfcs:
        for n in range(cfc.length):
            if cfc.instantiate(n).evaluate(model) != 0:
                raise SolverError("solver model fails exact instantiation re-check")


def _cfc_variables(cfcs: Sequence[CFiniteConstraint]) -> set[Var]:
    out: set[Var] = set()
    for cfc in cfcs:
        for w, u in cfc.terms:
            out |= w.variables()
            out |= u.variables()
    return out
