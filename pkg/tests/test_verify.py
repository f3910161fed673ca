import random
from fractions import Fraction

import pytest

from loopsynth.poly import Monomial, Polynomial, Var
from loopsynth.verify import ConcreteSystem, Verdict, check_equiv_modulo, check_invariant, order_bound


def make_system(names, rows, init):
    vars = tuple(Var(n, "program", i) for i, n in enumerate(names))
    update = tuple(tuple(Fraction(e) for e in row) for row in rows)
    return ConcreteSystem(vars, update, tuple(Fraction(v) if not isinstance(v, Polynomial) else v for v in init))


def var_polys(sys):
    return [Polynomial.var(v) for v in sys.vars]


def cube_invariants(sys):
    """c = n^3, k = 3n^2 + 3n + 1, m = 6n + 6 over (c, k, m, n, one)."""
    c, k, m, n, _ = var_polys(sys)
    return [c - n**3, k - 3 * n**2 - 3 * n - 1, m - 6 * n - 6]


# simultaneous form of: c += k; k += m; m += 6; n += 1 (with a constant-one slot)
CUBES_ROWS = [
    [1, 1, 0, 0, 0],
    [0, 1, 1, 0, 0],
    [0, 0, 1, 0, 6],
    [0, 0, 0, 1, 1],
    [0, 0, 0, 0, 1],
]


class TestOrderBound:
    def test_monomial_bounds(self):
        x = Var("x", "program", 0)
        y = Var("y", "program", 1)
        assert order_bound(Polynomial.var(x), 2) == 2
        assert order_bound(Polynomial.var(x) ** 2 * Polynomial.var(y), 3) == 27

    def test_parameters_are_order_one(self):
        x = Var("x", "program", 0)
        q = Var("q", "param")
        p = Polynomial.var(x) ** 2 + Polynomial.var(q)
        assert order_bound(p, 2, [x]) == 5

    def test_constant_poly(self):
        assert order_bound(Polynomial.zero(), 3) == 1


class TestCubeGenerator:
    def test_holds_exactly(self):
        sys = make_system("ckmnu", CUBES_ROWS, [0, 1, 6, 0, 1])
        for p in cube_invariants(sys):
            verdict = check_invariant(sys, p)
            assert verdict.holds and verdict.witness is None

    def test_faulty_initialization_refuted_with_witnesses(self):
        # zero-initialized and stepping m by 9 instead of 6
        rows = [r[:] for r in CUBES_ROWS]
        rows[2][4] = 9
        sys = make_system("ckmnu", rows, [0, 0, 0, 0, 1])
        c_inv, k_inv, m_inv = cube_invariants(sys)
        vc = check_invariant(sys, c_inv)
        assert not vc.holds and vc.witness == (1, Fraction(-1))
        vk = check_invariant(sys, k_inv)
        assert not vk.holds and vk.witness == (0, Fraction(-1))
        vm = check_invariant(sys, m_inv)
        assert not vm.holds and vm.witness == (0, Fraction(-6))

    def test_bound_is_tight_enough(self):
        sys = make_system("ckmnu", CUBES_ROWS, [0, 1, 6, 0, 1])
        c, _, _, n, _ = var_polys(sys)
        assert check_invariant(sys, c - n**3).bound_used == 5**1 + 5**3


class TestParameterized:
    def euclid(self):
        # r -= y; q += 1 with symbolic initial values r = x0, y = y0
        x0, y0 = Var("x0", "param"), Var("y0", "param")
        vars = tuple(Var(n, "program", i) for i, n in enumerate("rqyt"))
        update = tuple(
            tuple(Fraction(e) for e in row)
            for row in [[1, 0, -1, 0], [0, 1, 0, 1], [0, 0, 1, 0], [0, 0, 0, 1]]
        )
        init = (Polynomial.var(x0), Fraction(0), Polynomial.var(y0), Fraction(1))
        return ConcreteSystem(vars, update, init), x0, y0

    def test_symbolic_invariant_holds_for_all_parameters(self):
        sys, x0, y0 = self.euclid()
        r, q, y, _ = var_polys(sys)
        p = Polynomial.var(x0) - Polynomial.var(y0) * q - r
        assert check_invariant(sys, p).holds

    def test_symbolic_refutation_gives_polynomial_witness(self):
        sys, x0, y0 = self.euclid()
        r, q, y, _ = var_polys(sys)
        p = Polynomial.var(x0) - Polynomial.var(y0) * q - r - q
        verdict = check_invariant(sys, p)
        assert not verdict.holds
        n, witness = verdict.witness
        assert isinstance(witness, Polynomial) or witness != 0


class TestEquivalence:
    def linear_sum(self):
        return make_system("xyzu", [[1, 0, 0, 1], [0, 1, 0, 2], [0, 0, 1, 3], [0, 0, 0, 1]], [0, 0, 0, 1])

    def rational_sum(self):
        # a fractional-step system maintaining c = a + b
        return make_system(
            "cabu",
            [
                [1, 0, Fraction(1, 2), Fraction(-7, 32)],
                [0, 1, Fraction(1, 2), Fraction(-11, 32)],
                [0, 0, 1, Fraction(1, 8)],
                [0, 0, 0, 1],
            ],
            [Fraction(-1, 2), 0, Fraction(-1, 2), 1],
        )

    def test_shared_invariant(self):
        lin, rat = self.linear_sum(), self.rational_sum()
        x, y, z, _ = var_polys(lin)
        c, a, b, _ = var_polys(rat)
        p = z - x - y
        mapping = {lin.vars[2]: rat.vars[0], lin.vars[0]: rat.vars[1], lin.vars[1]: rat.vars[2]}
        assert check_equiv_modulo(lin, rat, p, mapping)

    def test_wrong_mapping_fails(self):
        lin, rat = self.linear_sum(), self.rational_sum()
        x, y, z, _ = var_polys(lin)
        p = z - x - y
        mapping = {lin.vars[2]: rat.vars[1], lin.vars[0]: rat.vars[0], lin.vars[1]: rat.vars[2]}
        assert not check_equiv_modulo(lin, rat, p, mapping)

    def test_map_validation(self):
        lin, rat = self.linear_sum(), self.rational_sum()
        x, y, z, _ = var_polys(lin)
        p = z - x - y
        with pytest.raises(ValueError):
            check_equiv_modulo(lin, rat, p, {lin.vars[2]: rat.vars[0]})
        with pytest.raises(ValueError):
            check_equiv_modulo(
                lin, rat, p,
                {lin.vars[0]: rat.vars[0], lin.vars[1]: rat.vars[0], lin.vars[2]: rat.vars[1]},
            )


class TestVerdict:
    def test_failing_needs_witness(self):
        with pytest.raises(ValueError):
            Verdict(holds=False, bound_used=3)


class TestRandomOracle:
    def test_agreement_with_long_unrolling(self):
        rng = random.Random(7)
        for trial in range(40):
            s = rng.randint(1, 3)
            vars = tuple(Var(n, "program", i) for i, n in enumerate("xyz"[:s]))
            update = tuple(
                tuple(Fraction(rng.randint(-2, 2)) for _ in range(s)) for _ in range(s)
            )
            init = tuple(Fraction(rng.randint(-2, 2)) for _ in range(s))
            sys = ConcreteSystem(vars, update, init)
            terms = {}
            for _ in range(rng.randint(1, 3)):
                mono = Monomial.make({v: rng.randint(0, 2) for v in vars})
                terms[mono] = Fraction(rng.randint(-3, 3))
            p = Polynomial(terms)
            verdict = check_invariant(sys, p)
            state = init
            long_holds = True
            for _ in range(5 * verdict.bound_used):
                if p.substitute(dict(zip(vars, state))) != 0:
                    long_holds = False
                    break
                state = sys.step(state)
            assert verdict.holds == long_holds
