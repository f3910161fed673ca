"""Loop synthesis: search over matrix shapes, eigenvalue multiplicity
partitions and variable orders; solve each cell's constraint problem; and
turn solver models into concrete, exactly verified loops.

Search order is cheapest-first: the unit-upper-triangular tier (diagonal
fixed to one, strictly-lower part zero) before general upper-triangular
before full matrices; within a tier the identity variable order first; and
within one order every multiplicity partition, largest part first.  Every
emitted loop is re-verified by exact unrolling before it leaves this
module, so a wrong solver answer can never surface as output.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .constraints import Clause, Pcp
from .pcpgen import DegenerateInvariantError, PcpBundle, build_pcp
from .poly import Polynomial, SymbolTable, Var
from .smt import (
    AlgebraicTag,
    ModelValue,
    SolverConfig,
    SolverTimeout,
    emit_smtlib,
    solve_structured,
)
from .template import (
    ParamSpec,
    RecurrenceTemplate,
    ShapeTier,
    build_template,
    int_partitions,
)
from .verify import ConcreteSystem, check_invariant


@dataclass
class SynthRequest:
    """One synthesis problem, ready to run."""

    invariants: list[Polynomial]
    vars: list[Var]  # declared program variables, in declaration order
    params: list[tuple[Var, Var]] = field(default_factory=list)  # (param, variable)
    pinned: dict[str, Fraction] = field(default_factory=dict)
    tiers: list[ShapeTier] | None = None  # None = all, cheapest first
    partitions: list[tuple[int, ...]] | None = None  # None = all
    size: int | None = None  # pad with auxiliary variables up to this
    aux_one: bool = False  # add an auxiliary variable pinned to 1
    timeout: float = 60.0
    count: int = 1


@dataclass(frozen=True)
class Loop:
    """A concrete affine loop: X <- U X starting from X = V.

    Initial values are rationals, or linear forms over the parameter
    symbols in the parameterized case.
    """

    vars: tuple[Var, ...]
    update: tuple[tuple[Fraction, ...], ...]
    init: tuple[Fraction | Polynomial, ...]
    params: tuple[Var, ...] = ()
    aux: tuple[str, ...] = ()  # auxiliary variable names not in the invariant
    tier: str = ""
    partition: tuple[int, ...] = ()
    millis: int = 0
    verified: bool = False

    @property
    def permutation(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars)

    def system(self) -> ConcreteSystem:
        return ConcreteSystem(vars=self.vars, update=self.update, init=self.init)

    def render(self) -> str:
        """Loop text in the corpus notation, folding an auxiliary
        constant-one variable into additive constants when possible."""
        vars, update, init = list(self.vars), [list(r) for r in self.update], list(self.init)
        consts = [Fraction(0)] * len(vars)
        for name in self.aux:
            idx = next(i for i, v in enumerate(vars) if v.name == name)
            unit_row = all(
                c == (1 if j == idx else 0) for j, c in enumerate(update[idx])
            )
            if unit_row and init[idx] == Fraction(1):
                for i, row in enumerate(update):
                    consts[i] += row[idx]
                    del row[idx]
                del update[idx], vars[idx], init[idx], consts[idx]

        names = [v.name for v in vars]
        inits = ", ".join(_render_value(v) for v in init)
        lines = [f"{', '.join(names)} = {inits}", "while true"]
        if _is_upper(update):
            for i, row in enumerate(update):
                lines.append("  " + f"{names[i]} = " + _render_affine(names, row, consts[i]))
        else:
            rhs = ", ".join(_render_affine(names, row, c) for row, c in zip(update, consts))
            lines.append("  " + f"{', '.join(names)} = {rhs}")
        lines.append("end")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "vars": [v.name for v in self.vars],
            "update": [[str(c) for c in row] for row in self.update],
            "init": [_render_value(v) for v in self.init],
            "params": [p.name for p in self.params],
            "aux": list(self.aux),
            "tier": self.tier,
            "partition": list(self.partition),
            "permutation": list(self.permutation),
            "millis": self.millis,
            "verified": self.verified,
            "loop": self.render(),
        }


def _render_value(v: Fraction | Polynomial) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return str(v)


def _is_upper(update: Sequence[Sequence[Fraction]]) -> bool:
    return all(c == 0 for i, row in enumerate(update) for c in row[:i])


def _render_affine(names: Sequence[str], row: Sequence[Fraction], const: Fraction) -> str:
    parts: list[tuple[Fraction, str | None]] = [
        (c, names[j]) for j, c in enumerate(row) if c != 0
    ]
    if const != 0:
        parts.append((const, None))
    if not parts:
        return "0"
    out = ""
    for k, (c, name) in enumerate(parts):
        mag = abs(c)
        if name is None:
            body = _render_value(mag)
        elif mag == 1:
            body = name
        else:
            body = f"{_render_value(mag)}*{name}"
        if k == 0:
            out = body if c > 0 else f"-{body}"
        else:
            out += f" + {body}" if c > 0 else f" - {body}"
    return out


@dataclass
class SynthResult:
    status: str  # found | notfound | timeout
    loops: list[Loop] = field(default_factory=list)
    millis: int = 0
    note: str = ""


# ---------------------------------------------------------------------------
# search


def synthesize(request: SynthRequest, cfg: SolverConfig | None = None) -> SynthResult:
    cfg = cfg or SolverConfig.default(request.timeout)
    start = time.monotonic()
    deadline = start + request.timeout

    vars, pinned, aux = _effective_vars(request)
    s = len(vars)
    tiers = request.tiers or [ShapeTier.UNIT_UPPER, ShapeTier.UPPER, ShapeTier.FULL]
    partitions = [
        p for p in int_partitions(s)
        if request.partitions is None or p in request.partitions
    ]
    if not partitions:
        raise ValueError(f"no admissible multiplicity partition of {s}")

    found: list[Loop] = []
    saw_unknown = False
    for tier, perm, part in _cells(vars, tiers, partitions):
        if time.monotonic() >= deadline:
            return _finish(found, start, timeout=True)
        bundle = _cell_problem(request, perm, tier, part, pinned)
        if bundle is None:
            continue
        while len(found) < request.count:
            try:
                res = solve_structured(
                    bundle.hard, bundle.cfcs, bundle.pcp, cfg,
                    timeout=deadline - time.monotonic(),
                )
            except SolverTimeout:
                return _finish(found, start, timeout=True)
            if res.status == "unknown":
                saw_unknown = True
                break
            if res.status != "sat":
                break
            loop = _extract_loop(bundle.template, res.model, aux, start)
            if loop is None:
                break  # irrational matrix or initial values: refuse the model
            verdict = [check_invariant(loop.system(), p) for p in request.invariants]
            if not all(v.holds for v in verdict):
                if res.rational:
                    raise AssertionError(
                        "exactly-checked model produced a loop failing verification"
                    )
                break
            found.append(loop)
            if len(found) >= request.count:
                break
            block = _blocking_clause(bundle.template, res.model)
            if block is None:
                break
            bundle.add_side_clauses([block])
        if len(found) >= request.count:
            break
    result = _finish(found, start, timeout=False)
    if result.status == "notfound" and saw_unknown:
        result.note = "some search cells were undecided by the solver"
    return result


def _finish(found: list[Loop], start: float, timeout: bool) -> SynthResult:
    millis = int((time.monotonic() - start) * 1000)
    if found:
        return SynthResult("found", found, millis)
    return SynthResult("timeout" if timeout else "notfound", [], millis)


def _effective_vars(request: SynthRequest) -> tuple[list[Var], dict[str, Fraction], tuple[str, ...]]:
    vars = list(request.vars)
    pinned = dict(request.pinned)
    taken = {v.name for v in vars} | {p.name for p, _ in request.params}
    aux: list[str] = []

    def fresh(base: str) -> str:
        name = base
        while name in taken:
            name = "_" + name
        taken.add(name)
        return name

    if request.aux_one:
        name = fresh("one")
        vars.append(Var(name, "program", len(vars)))
        pinned[name] = Fraction(1)
        aux.append(name)
    target = request.size if request.size is not None else len(vars)
    if target < len(vars):
        raise ValueError(f"size {target} is below the variable count {len(vars)}")
    for k in range(target - len(vars)):
        name = fresh(f"t{k + 1}")
        vars.append(Var(name, "program", len(vars)))
        aux.append(name)
    return vars, pinned, tuple(aux)


def _cells(
    vars: Sequence[Var],
    tiers: Sequence[ShapeTier],
    partitions: Sequence[tuple[int, ...]],
):
    for tier in tiers:
        if tier is ShapeTier.FULL:
            # a full matrix template is symmetric under variable reordering
            perms: Iterable[tuple[Var, ...]] = [tuple(vars)]
        else:
            perms = itertools.permutations(vars)
        for perm in perms:
            for part in partitions:
                yield tier, perm, part


def _cell_problem(
    request: SynthRequest,
    perm: tuple[Var, ...],
    tier: ShapeTier,
    partition: tuple[int, ...],
    pinned: Mapping[str, Fraction],
) -> PcpBundle | None:
    paramspec = None
    if request.params:
        paramspec = ParamSpec(
            tuple((p, perm.index(v)) for p, v in request.params)
        )
    tpl = build_template(perm, tier, partition, pinned, paramspec, SymbolTable())
    try:
        bundle = build_pcp(tpl, request.invariants)
    except DegenerateInvariantError:
        return None
    nt = _nontriviality_clause(tpl)
    if nt is None:
        return None
    bundle.add_side_clauses([nt])
    return bundle


def _nontriviality_clause(tpl: RecurrenceTemplate) -> Clause | None:
    """Some entry of B*A - A must be nonzero, i.e. the synthesized loop
    changes at least one variable on some input."""
    diff = tpl.b * tpl.a_matrix - tpl.a_matrix
    parts = [
        (e, "!=")
        for row in diff.entries
        for e in row
        if not e.is_zero()
    ]
    if not parts:
        return None
    return Clause.any(parts)


def _blocking_clause(tpl: RecurrenceTemplate, model: Mapping[Var, ModelValue]) -> Clause | None:
    syms = sorted(
        tpl.b.variables() | tpl.a_matrix.variables(), key=lambda v: v.sort_key
    )
    parts = []
    for v in syms:
        value = model.get(v, Fraction(0))
        if not isinstance(value, Fraction):
            return None
        parts.append((Polynomial.var(v) - Polynomial.const(value), "!="))
    if not parts:
        return None
    return Clause.any(parts)


def _extract_loop(
    tpl: RecurrenceTemplate,
    model: Mapping[Var, ModelValue],
    aux: tuple[str, ...],
    start: float,
) -> Loop | None:
    rational = {v: c for v, c in model.items() if isinstance(c, Fraction)}

    def rat(p: Polynomial) -> Fraction | None:
        try:
            return p.evaluate(rational)
        except KeyError:
            return None

    s = tpl.size
    update_rows = []
    for i in range(s):
        row = []
        for j in range(s):
            c = rat(tpl.b.at(i, j))
            if c is None:
                return None
            row.append(c)
        update_rows.append(tuple(row))

    init_vals: list[Fraction | Polynomial] = []
    for expr in tpl.init_exprs:
        # keep parameters symbolic, substitute solved initial-value symbols
        bindings = {
            v: rational[v] for v in expr.variables() if v not in tpl.params
            if v in rational
        }
        if set(expr.variables()) - set(tpl.params) - set(bindings):
            return None
        value = expr.substitute(bindings)
        init_vals.append(value.constant_value() if value.is_constant() else value)

    update = tuple(update_rows)
    init = tuple(init_vals)
    if not _changes_something(update, init, s):
        return None
    return Loop(
        vars=tpl.vars,
        update=update,
        init=init,
        params=tpl.params,
        aux=tuple(a for a in aux if any(v.name == a for v in tpl.vars)),
        tier=tpl.tier.value,
        partition=tpl.partition,
        millis=int((time.monotonic() - start) * 1000),
        verified=True,
    )


def _changes_something(
    update: tuple[tuple[Fraction, ...], ...],
    init: tuple[Fraction | Polynomial, ...],
    s: int,
) -> bool:
    """Exact nontriviality re-check: U V != V (as functions of parameters)."""
    for i in range(s):
        acc: Fraction | Polynomial = Fraction(0)
        for j in range(s):
            acc = acc + update[i][j] * init[j]
        delta = Polynomial.coerce(acc) - Polynomial.coerce(init[i])
        if not delta.is_zero():
            return True
    return False


def first_cell_script(request: SynthRequest) -> str:
    """SMT-LIB script of the first search cell's full constraint problem
    (for inspection; the search itself drives the solver incrementally)."""
    vars, pinned, _aux = _effective_vars(request)
    tiers = request.tiers or [ShapeTier.UNIT_UPPER, ShapeTier.UPPER, ShapeTier.FULL]
    partitions = [
        p for p in int_partitions(len(vars))
        if request.partitions is None or p in request.partitions
    ]
    for tier, perm, part in _cells(vars, tiers, partitions):
        bundle = _cell_problem(request, perm, tier, part, pinned)
        if bundle is not None:
            return emit_smtlib(list(bundle.pcp), bundle.pcp.variables())
    raise ValueError("no admissible search cell")
