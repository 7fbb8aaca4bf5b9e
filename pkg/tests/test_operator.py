import itertools
import math
from fractions import Fraction

import pytest
import sympy

from com.mhire.app.services.operator.airy_operator import (
    BadDegree,
    BadLeading,
    DegenerateDegree,
    characteristic_index,
    connection_coefficients,
    fuchs_form,
    newton_polygon,
    newton_slope,
    sigma,
    symbol,
    to_text,
    validate,
)
from com.mhire.app.services.operator.operator_schema import OperatorModel, operator_to_model
from com.mhire.app.services.series.series import (
    PuiseuxSeries,
    max_difference,
    ps_add,
    ps_antiderive_theta,
    ps_neg,
    theta_derive,
)
from conftest import random_operator

F = Fraction


def test_validate_classical_airy(classical_airy):
    assert classical_airy.bidegree == (2, 1)
    assert classical_airy.a == (F(0), F(1))


def test_validate_errors():
    with pytest.raises(BadLeading):
        validate(2, 1, [0, 2], [0, 1])
    with pytest.raises(DegenerateDegree):
        validate(1, 1, [1], [1, 0])
    with pytest.raises(BadDegree):
        validate(0, 1, [], [0, 1])
    with pytest.raises(BadDegree):
        validate(2, 0, [0, 1], [1])
    with pytest.raises(BadDegree):
        validate(2, 1, [3, 0, 1], [0, 1])


def test_sigma_examples():
    assert sigma(0, 5) == 1
    assert sigma(1, 4) == 6
    assert sigma(2, 3) == 2
    assert sigma(3, 3) == 0


def test_sigma_matches_enumeration_and_generating_product():
    T = sympy.symbols("T")
    for j in range(1, 10):
        product = sympy.Poly(sympy.prod([1 + r * T for r in range(1, j)]), T)
        for h in range(j):
            brute = sum(math.prod(c) for c in itertools.combinations(range(1, j), h))
            assert sigma(h, j) == brute
            assert sigma(h, j) == product.coeff_monomial(T ** h)


def test_fuchs_form_classical_airy(classical_airy):
    c = fuchs_form(classical_airy).c
    assert c[0].terms == {F(0): 1}
    assert c[1].terms == {F(0): 1}
    assert c[2].terms == {F(-3): -1}


def test_fuchs_form_first_order():
    c = fuchs_form(validate(1, 1, [1], [0, 1])).c
    assert c[1].terms == {F(-2): 1}


def test_fuchs_form_valuations(rng):
    for n in range(1, 6):
        for m in range(1, 6):
            L = random_operator(rng, n, m)
            c = fuchs_form(L).c
            assert c[0].terms == {F(0): 1}
            for k in range(1, n):
                assert c[k].is_zero or c[k].valuation >= -k
            assert c[n].valuation == -n - m


def test_first_order_exponential_solution_is_annihilated(rng):
    # n = 1: y = exp(F(z)) with F the pulled-back primitive of Q; D y + c_1 y = 0 means D F = -c_1
    x = sympy.symbols("x")
    for _ in range(5):
        L = random_operator(rng, 1, rng.randint(1, 5))
        primitive = sympy.integrate(sum(sympy.Rational(b.numerator, b.denominator) * x ** j
                                        for j, b in enumerate(L.b)), x)
        poly = sympy.Poly(primitive, x)
        pulled_back = PuiseuxSeries.from_terms(
            {F(-k): complex(poly.coeff_monomial(x ** k)) for k in range(1, L.m + 2)}
        )
        c1 = fuchs_form(L).c[1]
        assert max_difference(ps_add(theta_derive(pulled_back), c1), PuiseuxSeries.from_terms({})) < 1e-12
        assert max_difference(ps_neg(ps_antiderive_theta(c1)), pulled_back) < 1e-12


def test_symbol_classical_airy(classical_airy):
    P = symbol(classical_airy)
    assert P.degree == 2
    assert P.coefficients[0].terms == {F(0): 1}


def test_newton_slope_examples():
    assert newton_slope(validate(2, 1, [0, 1], [0, 1])) == F(3, 2)
    assert newton_slope(validate(3, 3, [0, 0, 1], [0, 0, 0, 1])) == 2
    assert newton_slope(validate(1, 1, [1], [0, 1])) == 2


def test_newton_polygon_single_unbounded_side(rng):
    for n in range(1, 7):
        for m in range(1, 7):
            L = random_operator(rng, n, m)
            sides = [s for s in newton_polygon(L) if s.root_valuation < -1]
            assert len(sides) == 1
            assert sides[0].root_valuation == -F(n + m, n)
            assert newton_slope(L) == F(n + m, n)
            assert characteristic_index(L) == n


def test_connection_coefficients_signs():
    L = validate(3, 2, [5, 7, 1], [1, 2, 3])
    a_tilde, b_tilde = connection_coefficients(L)
    assert a_tilde == (F(-5), F(7))
    assert b_tilde == (F(-1), F(-2), F(-3))

    a_tilde, b_tilde = connection_coefficients(validate(2, 1, [3, 1], [4, 5]))
    assert a_tilde == (F(3),)
    assert b_tilde == (F(4), F(5))


def test_connection_coefficients_sign_rule(rng):
    for n, m in [(1, 2), (2, 3), (3, 2), (4, 4), (5, 1)]:
        L = random_operator(rng, n, m)
        a_tilde, b_tilde = connection_coefficients(L)
        assert a_tilde == tuple((-1) ** (n - 1 - j) * L.a[j - 1] for j in range(1, n))
        assert b_tilde == tuple((-1) ** n * b for b in L.b)


def test_to_text():
    assert to_text(validate(2, 1, [0, 1], [0, 1])) == "d^2 - x"
    assert to_text(validate(3, 2, [2, 0, 1], [1, 0, 1])) == "d^3 + 2*d - x^2 - 1"
    assert to_text(validate(2, 3, [F(-1, 2), 1], [0, -1, 0, 3])) == "d^2 - 1/2*d - 3*x^3 + x"


def test_operator_model_roundtrip():
    L = validate(2, 3, ["1/2", 1], [0, "-3/4", 0, 2])
    model = operator_to_model(L)
    assert model.a == ["1/2", "1"]
    assert OperatorModel.model_validate_json(model.model_dump_json()).to_operator() == L
