import random
from fractions import Fraction

import pytest

from loopsynth.constraints import Clause, Pcp
from loopsynth.pcpgen import CFiniteConstraint
from loopsynth.poly import Monomial, Polynomial, Var
from loopsynth.smt import (
    AlgebraicTag,
    SolverConfig,
    SolverError,
    SolverTimeout,
    emit_smtlib,
    parse_solver_output,
    set_partitions,
    solve,
    solve_structured,
    vandermonde_zero_check,
)

X = Var("x", "program", 0)
Y = Var("y", "program", 1)


def cfg():
    return SolverConfig.default(timeout=30.0)


class TestEmission:
    def test_deterministic_and_complete(self):
        clauses = [
            Clause.unit(Polynomial.var(X) - Fraction(1, 2)),
            Clause.unit(Polynomial.var(Y), "!="),
        ]
        script = emit_smtlib(clauses)
        assert script == emit_smtlib(clauses)
        assert "(set-logic QF_NRA)" in script
        assert "(declare-const x Real)" in script and "(declare-const y Real)" in script
        assert "(/ 1 2)" in script
        assert script.index("declare-const x") < script.index("declare-const y")
        assert "(check-sat)" in script and "(get-model)" in script

    def test_negative_and_product_rendering(self):
        p = 3 * Polynomial.var(X) * Polynomial.var(Y) ** 2 - 2
        script = emit_smtlib([Clause.unit(p)])
        assert "(* 3 x y y)" in script and "(- 2)" in script

    def test_disjunction(self):
        c = Clause.any([(Polynomial.var(X), "="), (Polynomial.var(Y) - 1, "=")])
        assert "(or " in emit_smtlib([c])

    def test_named_asserts(self):
        script = emit_smtlib([Clause.unit(Polynomial.var(X))], named=True)
        assert ":named c0" in script and "(get-unsat-core)" in script
        assert "produce-unsat-cores" in script


class TestOutputParsing:
    def test_sat_model(self):
        out = (
            "sat\n(model\n"
            "  (define-fun x () Real (- (/ 1 2)))\n"
            "  (define-fun y () Real 3)\n)"
        )
        res = parse_solver_output(out, [X, Y])
        assert res.status == "sat"
        assert res.model == {X: Fraction(-1, 2), Y: Fraction(3)}

    def test_missing_symbols_default_to_zero(self):
        res = parse_solver_output("sat\n(model)\n", [X, Y])
        assert res.model == {X: Fraction(0), Y: Fraction(0)}

    def test_irrational_values_are_tagged(self):
        out = "sat\n((define-fun x () Real (root-obj (+ (^ x 2) (- 2)) 2)))"
        res = parse_solver_output(out, [X])
        value = res.model[X]
        assert isinstance(value, AlgebraicTag) and value.index == 2
        assert not res.rational
        with pytest.raises(SolverError):
            res.rational_model()

    def test_unsat_with_core(self):
        res = parse_solver_output("unsat\n(c0 c2)\n", [X])
        assert res.status == "unsat" and res.core == ("c0", "c2")

    def test_error_raises(self):
        with pytest.raises(SolverError):
            parse_solver_output('(error "bad input")', [X])
        with pytest.raises(SolverError):
            parse_solver_output("gibberish", [X])


class TestSolverRoundTrip:
    def test_trivial_sat(self):
        res = solve([Clause.unit(Polynomial.var(X) - 2)], cfg())
        assert res.status == "sat" and res.model[X] == 2

    def test_trivial_unsat(self):
        res = solve(
            [Clause.unit(Polynomial.var(X)), Clause.unit(Polynomial.var(X), "!=")],
            cfg(),
        )
        assert res.status == "unsat"

    def test_lying_solver_is_caught(self):
        fake = SolverConfig(command=("sh", "-c", "cat >/dev/null; echo sat"), timeout=5.0)
        with pytest.raises(SolverError, match="re-check"):
            solve([Clause.unit(Polynomial.var(X) - 2)], fake)

    def test_timeout(self):
        slow = SolverConfig(command=("sh", "-c", "sleep 5"), timeout=0.2)
        with pytest.raises(SolverTimeout):
            solve([Clause.unit(Polynomial.var(X))], slow)


class TestSetPartitions:
    def test_bell_numbers(self):
        for n, bell in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52)]:
            parts = set_partitions(n)
            assert len(parts) == bell
            assert len(set(parts)) == bell
            for p in parts:
                assert sorted(i for b in p for i in b) == list(range(n))

    def test_finest_first_coarsest_last(self):
        parts = set_partitions(3)
        assert parts[0] == ((0,), (1,), (2,))
        assert parts[-1] == ((0, 1, 2),)
        counts = [len(p) for p in parts]
        assert counts == sorted(counts, reverse=True)


class TestVandermonde:
    def test_random_instances(self):
        rng = random.Random(11)
        for _ in range(500):
            ell = rng.randint(1, 4)
            ws = []
            while len(ws) < ell:
                w = Fraction(rng.randint(-6, 6), rng.randint(1, 3))
                if w not in ws:
                    ws.append(w)
            if rng.random() < 0.5:
                us = [Fraction(0)] * ell
            else:
                us = [Fraction(rng.randint(-5, 5)) for _ in range(ell)]
            result = vandermonde_zero_check(ws, us)
            assert result == all(u == 0 for u in us)

    def test_rejects_duplicate_bases(self):
        with pytest.raises(ValueError):
            vandermonde_zero_check([Fraction(1), Fraction(1)], [Fraction(0), Fraction(0)])


def make_cfc_problem(hard_clauses, terms):
    cfc = CFiniteConstraint(tuple(terms))
    hard = Pcp(list(hard_clauses))
    full = Pcp(list(hard_clauses) + [Clause.unit(cfc.instantiate(n)) for n in range(cfc.length)])
    return hard, [cfc], full


class TestStructuredSolving:
    def test_all_coefficients_zero_ends_at_first_stage(self):
        w1 = Var("w1", "root")
        u1 = Var("u1", "coeff")
        hard, cfcs, full = make_cfc_problem([], [(Monomial.of(w1), Polynomial.var(u1))])
        res = solve_structured(hard, cfcs, full, cfg())
        assert res.status == "sat"
        assert res.partition == ((0,),)
        assert res.model[u1] == 0

    def test_forced_base_coincidence(self):
        # u1 = 1 is forced, so the only way the exponential sum can vanish
        # for every n is w1 = w2 with u2 = -1
        w1, w2 = Var("w1", "root"), Var("w2", "root")
        u1, u2 = Var("u1", "coeff"), Var("u2", "coeff")
        hard, cfcs, full = make_cfc_problem(
            [Clause.unit(Polynomial.var(u1) - 1)],
            [(Monomial.of(w1), Polynomial.var(u1)), (Monomial.of(w2), Polynomial.var(u2))],
        )
        res = solve_structured(hard, cfcs, full, cfg())
        assert res.status == "sat"
        assert res.partition == ((0, 1),)
        model = res.model
        assert model[u1] == 1 and model[u2] == -1
        assert model[w1] == model[w2]

    def test_conclusive_unsat(self):
        # both coefficients forced to 1: no coincidence pattern can cancel
        w1, w2 = Var("w1", "root"), Var("w2", "root")
        u1, u2 = Var("u1", "coeff"), Var("u2", "coeff")
        hard, cfcs, full = make_cfc_problem(
            [
                Clause.unit(Polynomial.var(u1) - 1),
                Clause.unit(Polynomial.var(u2) - 1),
            ],
            [(Monomial.of(w1), Polynomial.var(u1)), (Monomial.of(w2), Polynomial.var(u2))],
        )
        res = solve_structured(hard, cfcs, full, cfg())
        assert res.status == "unsat"

    def test_no_structured_constraints_plain_solve(self):
        hard = Pcp([Clause.unit(Polynomial.var(X) - 7)])
        res = solve_structured(hard, [], Pcp(list(hard)), cfg())
        assert res.status == "sat" and res.model[X] == 7
