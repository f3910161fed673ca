from fractions import Fraction

import pytest

from loopsynth.parser import parse_invariant, parse_loop
from loopsynth.poly import Polynomial, Var
from loopsynth.smt import SolverConfig
from loopsynth.synth import (
    Loop,
    SynthRequest,
    _effective_vars,
    first_cell_script,
    synthesize,
)
from loopsynth.template import ShapeTier
from loopsynth.verify import check_invariant


def make_vars(*names):
    return [Var(n, "program", i) for i, n in enumerate(names)]


def request_for(text, names, **kw):
    vars = make_vars(*names)
    syms = {v.name: v for v in vars}
    return SynthRequest(invariants=parse_invariant(text, syms), vars=vars, **kw)


def cfg():
    return SolverConfig.default(timeout=60.0)


class TestEndToEnd:
    def test_doubling_invariant(self):
        req = request_for(
            "x == 2y", ["x", "y"],
            size=3, tiers=[ShapeTier.UNIT_UPPER], partitions=[(3,)], timeout=60.0,
        )
        res = synthesize(req, cfg())
        assert res.status == "found"
        (loop,) = res.loops
        assert loop.verified and loop.tier == "un"
        assert check_invariant(loop.system(), req.invariants[0]).holds
        # the loop must actually move
        sys = loop.system()
        assert sys.step(sys.init) != sys.init

    def test_square_invariant_render_round_trip(self):
        req = request_for(
            "a == b^2", ["a", "b"],
            size=3, tiers=[ShapeTier.UNIT_UPPER], partitions=[(3,)], timeout=60.0,
        )
        res = synthesize(req, cfg())
        assert res.status == "found"
        (loop,) = res.loops
        text = loop.render()
        assert text.splitlines()[1] == "while true" and text.rstrip().endswith("end")
        reparsed = parse_loop(text)
        syms = reparsed.symbols()
        a, b = Polynomial.var(syms["a"]), Polynomial.var(syms["b"])
        assert check_invariant(reparsed.system, a - b * b).holds

    def test_multiple_distinct_loops(self):
        req = request_for(
            "x == 2y", ["x", "y"],
            size=3, tiers=[ShapeTier.UNIT_UPPER], partitions=[(3,)],
            timeout=90.0, count=2,
        )
        res = synthesize(req, SolverConfig.default(90.0))
        assert res.status == "found" and len(res.loops) == 2
        l1, l2 = res.loops
        assert (l1.update, l1.init) != (l2.update, l2.init)
        for loop in res.loops:
            assert loop.verified
            assert check_invariant(loop.system(), req.invariants[0]).holds

    def test_trivial_invariant_still_yields_moving_loop(self):
        req = request_for(
            "x == x", ["x"], tiers=[ShapeTier.UPPER], timeout=30.0,
        )
        res = synthesize(req, cfg())
        assert res.status == "found"
        sys = res.loops[0].system()
        assert sys.step(sys.init) != sys.init

    def test_contradiction_is_notfound(self):
        req = request_for("x == x + 1", ["x"], timeout=30.0)
        res = synthesize(req, cfg())
        assert res.status == "notfound" and not res.loops

    def test_budget_exhaustion_reports_timeout(self):
        req = request_for("x == 2y", ["x", "y"], size=3, timeout=0.0)
        res = synthesize(req, cfg())
        assert res.status == "timeout"


class TestRequestExpansion:
    def test_aux_one_and_padding(self):
        req = request_for("x == 2y", ["x", "y"], size=4, aux_one=True)
        vars, pinned, aux = _effective_vars(req)
        assert [v.name for v in vars] == ["x", "y", "one", "t1"]
        assert pinned == {"one": Fraction(1)}
        assert aux == ("one", "t1")

    def test_aux_names_avoid_collisions(self):
        req = request_for("one == 2t1", ["one", "t1"], size=3, aux_one=True)
        vars, pinned, aux = _effective_vars(req)
        assert [v.name for v in vars] == ["one", "t1", "_one"]
        assert pinned == {"_one": Fraction(1)}

    def test_size_below_variable_count_rejected(self):
        req = request_for("x == 2y", ["x", "y"], size=1)
        with pytest.raises(ValueError):
            synthesize(req, cfg())


class TestRendering:
    def sample_loop(self):
        vars = tuple(make_vars("a", "b", "one"))
        return Loop(
            vars=vars,
            update=(
                (Fraction(1), Fraction(2), Fraction(1)),
                (Fraction(0), Fraction(1), Fraction(1)),
                (Fraction(0), Fraction(0), Fraction(1)),
            ),
            init=(Fraction(0), Fraction(0), Fraction(1)),
            aux=("one",),
            tier="un",
            partition=(3,),
            verified=True,
        )

    def test_constant_one_folds_into_affine_constants(self):
        text = self.sample_loop().render()
        assert "one" not in text
        assert "a = a + 2*b + 1" in text and "b = b + 1" in text

    def test_render_parse_trajectory_oracle(self):
        loop = self.sample_loop()
        orig = loop.system()
        reparsed = parse_loop(loop.render()).system
        state_a, state_b = orig.init, reparsed.init
        for _ in range(10):
            assert state_a[:2] == state_b[:2]
            state_a, state_b = orig.step(state_a), reparsed.step(state_b)

    def test_json_payload(self):
        payload = self.sample_loop().to_json()
        assert payload["vars"] == ["a", "b", "one"]
        assert payload["tier"] == "un" and payload["verified"] is True
        assert payload["loop"].startswith("a, b = 0, 0")


class TestScriptExport:
    def test_first_cell_script_is_smtlib(self):
        req = request_for("x == 2y", ["x", "y"])
        script = first_cell_script(req)
        assert script.startswith("(set-logic QF_NRA)")
        assert "(check-sat)" in script and "(declare-const" in script
