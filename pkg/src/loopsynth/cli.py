"""Command-line interface.

Exit codes: 0 success (loop found / invariant holds), 1 negative answer
(nothing found / invariant fails), 2 input error, 3 solver failure,
4 timeout.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import click

from .parser import LoopFile, ParseError, SpecFile, parse_invariant, parse_loop, parse_spec
from .poly import Var
from .smt import SolverConfig, SolverError, SolverTimeout, default_solver_command
from .synth import SynthRequest, SynthResult, first_cell_script, synthesize
from .template import ShapeTier
from .verify import check_equiv_modulo, check_invariant

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_TIMEOUT = 4


@click.group()
def main():
    """Synthesize and verify affine loops with polynomial equality invariants."""


def _solver_option(f):
    return click.option(
        "--solver",
        default=None,
        help="Solver command line (default: $LOOPSYNTH_SOLVER or the bundled one).",
    )(f)


def _make_config(solver: str | None, timeout: float) -> SolverConfig:
    if solver:
        import shlex

        return SolverConfig(command=tuple(shlex.split(solver)), timeout=timeout)
    return SolverConfig(command=tuple(default_solver_command()), timeout=timeout)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise click.ClickException(str(e)) from None


def _parse_partition(text: str) -> tuple[int, ...]:
    try:
        parts = tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise click.UsageError(f"bad partition {text!r}; expected e.g. '2,1'")
    if not parts:
        raise click.UsageError("empty partition")
    return parts


def _build_request(
    spec: SpecFile,
    tier: str | None,
    partition: str | None,
    size: int | None,
    aux_one: bool,
    timeout: float | None,
    count: int,
) -> SynthRequest:
    symbols = spec.symbols()
    vars = [symbols[name] for name in spec.var_names]
    params = [(symbols[p], symbols[v]) for p, v in spec.params]
    tier_text = tier or spec.tier
    tiers = None if tier_text == "auto" else [ShapeTier.parse(tier_text)]
    return SynthRequest(
        invariants=spec.invariants(),
        vars=vars,
        params=params,
        pinned=dict(spec.init_pins),
        tiers=tiers,
        partitions=[_parse_partition(partition)] if partition else None,
        size=size if size is not None else spec.size,
        aux_one=aux_one or spec.aux_one,
        timeout=timeout if timeout is not None else (spec.timeout or 60.0),
        count=count,
    )


@main.command()
@click.argument("specfile", type=click.Path(exists=True, dir_okay=False))
@_solver_option
@click.option("--timeout", type=float, default=None, help="Total budget in seconds (default 60).")
@click.option("--tier", type=click.Choice(["un", "up", "fu", "auto"]), default=None)
@click.option("--partition", default=None, help="Fix the multiplicity partition, e.g. '2,1'.")
@click.option("--size", type=int, default=None, help="System size (pad with auxiliary variables).")
@click.option("--aux-one", is_flag=True, help="Add an auxiliary variable with initial value 1.")
@click.option("--count", type=int, default=1, help="Emit up to N distinct loops.")
@click.option("--emit-smt2", type=click.Path(dir_okay=False), default=None,
              help="Write the first search cell's SMT-LIB script to this file.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def synth(specfile, solver, timeout, tier, partition, size, aux_one, count, emit_smt2, as_json):
    """Synthesize loops satisfying the invariants in SPECFILE."""
    try:
        spec = parse_spec(_read(specfile))
        request = _build_request(spec, tier, partition, size, aux_one, timeout, count)
    except (ParseError, ValueError) as e:
        raise SystemExit(_fail(EXIT_INPUT, str(e), as_json))
    if emit_smt2:
        Path(emit_smt2).write_text(first_cell_script(request))
    cfg = _make_config(solver, request.timeout)
    try:
        result = synthesize(request, cfg)
    except SolverTimeout:
        raise SystemExit(_fail(EXIT_TIMEOUT, "solver budget exhausted", as_json))
    except SolverError as e:
        raise SystemExit(_fail(EXIT_SOLVER, str(e), as_json))
    _emit_synth_result(result, as_json)
    if result.status == "found":
        raise SystemExit(EXIT_OK)
    raise SystemExit(EXIT_TIMEOUT if result.status == "timeout" else EXIT_NEGATIVE)


def _emit_synth_result(result: SynthResult, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps({
            "status": result.status,
            "millis": result.millis,
            "note": result.note,
            "loops": [lp.to_json() for lp in result.loops],
        }, indent=2))
        return
    if result.status == "found":
        for i, lp in enumerate(result.loops):
            header = f"# tier={lp.tier} partition={','.join(map(str, lp.partition))} " \
                     f"order={','.join(lp.permutation)} millis={lp.millis} verified=yes"
            if i:
                click.echo()
            click.echo(header)
            click.echo(lp.render(), nl=False)
    else:
        click.echo(f"{result.status} after {result.millis} ms"
                   + (f" ({result.note})" if result.note else ""))


def _fail(code: int, message: str, as_json: bool) -> int:
    if as_json:
        click.echo(json.dumps({"status": "error", "code": code, "message": message}))
    else:
        click.echo(f"error: {message}", err=True)
    return code


@main.command()
@click.argument("loopfile", type=click.Path(exists=True, dir_okay=False))
@click.option("--invariant", required=True, help="Conjunction of polynomial equations.")
@click.option("--json", "as_json", is_flag=True)
def verify(loopfile, invariant, as_json):
    """Decide exactly whether the loop in LOOPFILE maintains the invariant."""
    try:
        loop = parse_loop(_read(loopfile))
        polys = parse_invariant(invariant, loop.symbols())
    except (ParseError, ValueError) as e:
        raise SystemExit(_fail(EXIT_INPUT, str(e), as_json))
    verdicts = [check_invariant(loop.system, p) for p in polys]
    holds = all(v.holds for v in verdicts)
    if as_json:
        click.echo(json.dumps({
            "holds": holds,
            "bounds": [v.bound_used for v in verdicts],
            "witness": next(
                ({"iteration": v.witness[0], "value": str(v.witness[1])}
                 for v in verdicts if not v.holds), None),
        }, indent=2))
    elif holds:
        click.echo(f"holds (proved by unrolling to the order bound)")
    else:
        bad = next(v for v in verdicts if not v.holds)
        click.echo(f"fails at iteration {bad.witness[0]} (value {bad.witness[1]})")
    raise SystemExit(EXIT_OK if holds else EXIT_NEGATIVE)


@main.command()
@click.argument("loop1", type=click.Path(exists=True, dir_okay=False))
@click.argument("loop2", type=click.Path(exists=True, dir_okay=False))
@click.option("--invariant", required=True,
              help="Invariant over the first loop's variables.")
@click.option("--map", "mapping", default="",
              help="Variable renaming 'a=x,b=y' from the first loop to the second.")
def equiv(loop1, loop2, invariant, mapping):
    """Check that both loops maintain the invariant (modulo renaming)."""
    try:
        lf1 = parse_loop(_read(loop1))
        lf2 = parse_loop(_read(loop2))
        polys = parse_invariant(invariant, lf1.symbols())
        bijection = _parse_mapping(mapping, lf1, lf2)
    except (ParseError, ValueError) as e:
        raise SystemExit(_fail(EXIT_INPUT, str(e), False))
    ok = all(check_equiv_modulo(lf1.system, lf2.system, p, bijection) for p in polys)
    click.echo("equivalent" if ok else "not equivalent")
    raise SystemExit(EXIT_OK if ok else EXIT_NEGATIVE)


def _parse_mapping(text: str, lf1: LoopFile, lf2: LoopFile) -> dict[Var, Var]:
    sym1 = {v.name: v for v in lf1.system.vars}
    sym2 = {v.name: v for v in lf2.system.vars}
    out: dict[Var, Var] = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        a, sep, b = item.partition("=")
        if not sep or a.strip() not in sym1 or b.strip() not in sym2:
            raise ParseError(f"bad mapping entry {item!r}")
        out[sym1[a.strip()]] = sym2[b.strip()]
    for name in sym1.keys() & sym2.keys():
        out.setdefault(sym1[name], sym2[name])
    return out


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@_solver_option
@click.option("--timeout", type=float, default=60.0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Write results as CSV (default: stdout).")
@click.option("--include-reconstructed", is_flag=True,
              help="Also run instances marked as reconstructed transcriptions.")
def bench(directory, solver, timeout, jobs, csv_path, include_reconstructed):
    """Run synthesis over every .spec file in DIRECTORY and tabulate."""
    specs = sorted(Path(directory).glob("*.spec"))
    if not specs:
        raise SystemExit(_fail(EXIT_INPUT, f"no .spec files in {directory}", False))

    def run_one(path: Path) -> dict:
        row = {"instance": path.stem, "status": "", "tier": "", "partition": "",
               "permutation": "", "millis": "", "verified": ""}
        try:
            spec = parse_spec(path.read_text())
            if spec.reconstructed and not include_reconstructed:
                row["status"] = "skipped"
                return row
            request = _build_request(spec, None, None, None, False, timeout, 1)
            cfg = _make_config(solver, request.timeout)
            result = synthesize(request, cfg)
            row["status"] = result.status
            row["millis"] = str(result.millis)
            if result.loops:
                lp = result.loops[0]
                row["tier"] = lp.tier
                row["partition"] = " ".join(map(str, lp.partition))
                row["permutation"] = " ".join(lp.permutation)
                row["millis"] = str(lp.millis)
                row["verified"] = "yes" if lp.verified else "no"
        except ParseError as e:
            row["status"] = f"parse-error"
        except SolverTimeout:
            row["status"] = "timeout"
        except SolverError:
            row["status"] = "solver-error"
        return row

    with ThreadPoolExecutor(max_workers=max(jobs, 1)) as pool:
        rows = list(pool.map(run_one, specs))

    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=["instance", "status", "tier", "partition",
                         "permutation", "millis", "verified"])
    writer.writeheader()
    writer.writerows(rows)
    if csv_path:
        Path(csv_path).write_text(buf.getvalue())
        click.echo(f"wrote {csv_path}")
    else:
        click.echo(buf.getvalue(), nl=False)
    bad = [r for r in rows if r["status"] not in ("found", "skipped")]
    raise SystemExit(EXIT_OK if not bad else EXIT_NEGATIVE)
