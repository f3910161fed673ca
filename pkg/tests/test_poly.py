from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from loopsynth.poly import (
    Monomial,
    MONO_KEY,
    Polynomial,
    SymbolTable,
    Var,
    sign_normalize,
)

X = Var("x", "program", 0)
Y = Var("y", "program", 1)
Z = Var("z", "program", 2)


def poly_of(*terms):
    """terms: (coeff, {var: exp})"""
    return Polynomial({Monomial.make(m): Fraction(c) for c, m in terms})


rationals = st.fractions(
    min_value=-10, max_value=10, max_denominator=8
)


@st.composite
def polynomials(draw, vars=(X, Y, Z), max_terms=5, max_exp=3):
    n = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n):
        mono = Monomial.make({
            v: draw(st.integers(0, max_exp)) for v in draw(st.sets(st.sampled_from(vars)))
        })
        terms[mono] = draw(rationals)
    return Polynomial(terms)


class TestBasics:
    def test_zero_and_const(self):
        assert Polynomial.zero().is_zero()
        assert Polynomial.const(0).is_zero()
        p = Polynomial.const(Fraction(3, 2))
        assert p.is_constant() and p.constant_value() == Fraction(3, 2)

    def test_var_and_degree(self):
        p = Polynomial.var(X) * Polynomial.var(X) + Polynomial.var(Y)
        assert p.degree == 2
        assert p.degree_in(X) == 2 and p.degree_in(Y) == 1
        assert p.variables() == {X, Y}

    def test_dropping_zero_coefficients(self):
        p = Polynomial({Monomial.of(X): Fraction(0)})
        assert p.is_zero()

    def test_equality_with_numbers(self):
        assert Polynomial.const(5) == 5
        assert Polynomial.var(X) - Polynomial.var(X) == 0

    def test_str_is_canonical(self):
        p = poly_of((1, {X: 2}), (-2, {Y: 1}), (Fraction(1, 2), {}))
        assert str(p) == "x^2 - 2*y + 1/2"


class TestArithmetic:
    @given(polynomials(), polynomials())
    @settings(deadline=None, max_examples=60)
    def test_addition_commutes(self, p, q):
        assert p + q == q + p

    @given(polynomials(), polynomials(), polynomials())
    @settings(deadline=None, max_examples=40)
    def test_multiplication_distributes(self, p, q, r):
        assert p * (q + r) == p * q + p * r

    @given(polynomials(), polynomials())
    @settings(deadline=None, max_examples=40)
    def test_multiplication_commutes(self, p, q):
        assert p * q == q * p

    @given(polynomials())
    @settings(deadline=None, max_examples=40)
    def test_additive_inverse(self, p):
        assert (p + (-p)).is_zero()

    @given(polynomials(), st.integers(0, 4))
    @settings(deadline=None, max_examples=30)
    def test_power_is_iterated_product(self, p, k):
        expected = Polynomial.const(1)
        for _ in range(k):
            expected = expected * p
        assert p ** k == expected

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            Polynomial.var(X) ** -1


class TestSubstitution:
    def test_simultaneous(self):
        # x <- y, y <- x must swap, not chain
        p = Polynomial.var(X) - 2 * Polynomial.var(Y)
        q = p.substitute({X: Polynomial.var(Y), Y: Polynomial.var(X)})
        assert q == Polynomial.var(Y) - 2 * Polynomial.var(X)

    def test_unbound_pass_through(self):
        p = Polynomial.var(X) + Polynomial.var(Y)
        assert p.substitute({X: Polynomial.const(1)}) == Polynomial.var(Y) + 1

    @given(polynomials(), rationals, rationals, rationals)
    @settings(deadline=None, max_examples=40)
    def test_substitute_matches_evaluate(self, p, a, b, c):
        env = {X: a, Y: b, Z: c}
        assert p.substitute(env).constant_value() == p.evaluate(env)

    def test_evaluate_requires_full_assignment(self):
        with pytest.raises(KeyError):
            (Polynomial.var(X) + Polynomial.var(Y)).evaluate({X: Fraction(1)})


class TestStructure:
    def test_coeffs_in_reconstructs(self):
        p = poly_of((2, {X: 2, Y: 1}), (3, {X: 1}), (1, {Y: 2}), (5, {}))
        rebuilt = Polynomial.zero()
        for k, coeff in p.coeffs_in(X):
            rebuilt = rebuilt + coeff * Polynomial.var(X) ** k
        assert rebuilt == p

    @given(polynomials())
    @settings(deadline=None, max_examples=40)
    def test_coeffs_in_reconstructs_random(self, p):
        rebuilt = Polynomial.zero()
        for k, coeff in p.coeffs_in(Y):
            rebuilt = rebuilt + coeff * Polynomial.var(Y) ** k
        assert rebuilt == p

    @given(polynomials(), polynomials())
    @settings(deadline=None, max_examples=40)
    def test_divexact_inverts_multiplication(self, p, q):
        if q.is_zero():
            return
        assert (p * q).divexact(q) == p

    def test_divexact_rejects_inexact(self):
        with pytest.raises(ValueError):
            Polynomial.var(X).divexact(Polynomial.var(Y))

    def test_graded_order(self):
        lo = Monomial.make({Y: 1})
        hi = Monomial.make({X: 2})
        assert MONO_KEY(lo) < MONO_KEY(hi)  # degree dominates
        # same degree: earlier variable more significant
        a = Monomial.make({X: 1, Y: 1})
        b = Monomial.make({Y: 2})
        assert MONO_KEY(b) < MONO_KEY(a)

    @given(polynomials())
    @settings(deadline=None, max_examples=40)
    def test_sign_normalize_idempotent_and_canonical(self, p):
        n = sign_normalize(p)
        assert sign_normalize(n) == n
        assert sign_normalize(-p) == n


class TestSymbolTable:
    def test_fresh_avoids_collisions(self):
        tab = SymbolTable()
        tab.declare(Var("w1", "program", 0))
        w = tab.fresh("w1", "root")
        assert w.name == "_w1" and w.kind == "root"

    def test_redeclare_conflict(self):
        tab = SymbolTable()
        tab.declare(Var("x", "program", 0))
        with pytest.raises(ValueError):
            tab.declare(Var("x", "root"))
