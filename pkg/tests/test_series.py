import random
from fractions import Fraction

import pytest

from com.mhire.app.services.series.series import (
    LogarithmicTerm,
    PuiseuxSeries,
    TruncationExceeded,
    ZeroLeadingCoefficient,
    constant,
    max_difference,
    monomial,
    ps_add,
    ps_antiderive_theta,
    ps_derive,
    ps_invert,
    ps_mul,
    ps_pow,
    ps_shift,
    ps_truncate,
    theta_derive,
    zero_series,
)
from com.mhire.app.services.series.series_schema import series_from_model, series_to_model

F = Fraction


def _random_series(rng: random.Random, e: int, truncation: Fraction) -> PuiseuxSeries:
    terms = {}
    start = rng.randint(-3 * e, 0)
    for k in range(start, int(truncation * e)):
        if rng.random() < 0.6:
            terms[F(k, e)] = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
    terms[F(start, e)] = 1.0 + 0.5j
    return PuiseuxSeries.from_terms(terms, truncation)


def test_add_cancels_to_empty_exact_series():
    s = ps_add(monomial(1, -1), monomial(-1, -1))
    assert s.is_zero
    assert s.is_exact
    assert s.valuation is None


def test_add_merges_ramified_terms():
    s = ps_add(PuiseuxSeries.from_terms({0: 1, F(1, 2): 1}), monomial(1, F(1, 2)))
    assert s.terms == {F(0): 1, F(1, 2): 2}
    assert s.ramification == 2


def test_add_takes_smallest_truncation():
    s = ps_add(constant(1, 3), constant(2, 2))
    assert s.truncation_order == 2


def test_mul_of_half_powers():
    s = ps_mul(PuiseuxSeries.from_terms({F(-1, 2): 1, 0: 1}), monomial(1, F(1, 2)))
    assert s.terms == {F(0): 1, F(1, 2): 1}


def test_mul_truncation_rule():
    a = PuiseuxSeries.from_terms({-1: 1, 0: 2}, truncation_order=2)
    b = PuiseuxSeries.from_terms({F(1, 2): 3}, truncation_order=F(5, 2))
    s = ps_mul(a, b)
    # min(2 + 1/2, 5/2 - 1)
    assert s.truncation_order == F(3, 2)
    assert s.coefficient(F(-1, 2)) == pytest.approx(3)


def test_square_matches_beta_convolution(rng):
    alpha = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(6)]
    xi = PuiseuxSeries.from_terms({F(k, 2): alpha[k] for k in range(6)}, F(6, 2))
    square = ps_mul(xi, xi)
    assert max_difference(square, ps_pow(xi, 2)) < 1e-12
    for j in range(6):
        beta = sum(alpha[s] * alpha[j - s] for s in range(j + 1))
        assert abs(square.coefficient(F(j, 2)) - beta) < 1e-12


def test_pow_basics():
    assert ps_pow(monomial(3, -5), 0).terms == {F(0): 1}
    a0 = 1.5 - 0.5j
    sq = ps_pow(monomial(a0, F(-3, 2)), 2)
    assert sq.terms == {F(-3): a0 * a0}
    xi = PuiseuxSeries.from_terms({F(-3, 2): a0, F(-1): 2.0}, F(-1, 2))
    assert ps_pow(xi, 3).leading_term() == (F(-9, 2), pytest.approx(a0 ** 3))


def test_invert_geometric_series():
    c = 0.75
    inv = ps_invert(PuiseuxSeries.from_terms({0: 1, 1: -c}), order=6)
    for k in range(6):
        assert inv.coefficient(k) == pytest.approx(c ** k)
    assert inv.truncation_order == 6


def test_invert_constant_and_monomial_are_exact():
    assert ps_invert(constant(1)).terms == {F(0): 1}
    inv = ps_invert(monomial(4, F(-3, 2)))
    assert inv.is_exact
    assert inv.terms == {F(3, 2): pytest.approx(0.25)}


def test_invert_contract_on_truncated_input(rng):
    a = _random_series(rng, 3, F(2))
    product = ps_mul(a, ps_invert(a))
    residual = ps_add(product, constant(-1))
    assert all(abs(c) < 1e-9 for c in residual.terms.values())


def test_invert_zero_raises():
    with pytest.raises(ZeroLeadingCoefficient):
        ps_invert(zero_series(2))


def test_derivatives():
    d = ps_derive(monomial(1, F(-3, 2)))
    assert d.terms == {F(-5, 2): pytest.approx(-1.5)}
    assert ps_derive(constant(7)).is_zero
    assert theta_derive(monomial(2, F(5, 3))).terms == {F(5, 3): pytest.approx(10 / 3)}
    assert theta_derive(constant(1)).is_zero


def test_theta_is_z_times_derivative(rng):
    a = _random_series(rng, 4, F(3))
    assert max_difference(theta_derive(a), ps_shift(ps_derive(a), 1)) < 1e-12


def test_theta_leibniz(rng):
    a = _random_series(rng, 2, F(2))
    b = _random_series(rng, 3, F(1))
    lhs = theta_derive(ps_mul(a, b))
    rhs = ps_add(ps_mul(theta_derive(a), b), ps_mul(a, theta_derive(b)))
    assert max_difference(lhs, rhs) < 1e-9


def test_antiderive_theta():
    alpha0 = 2.0
    q = ps_antiderive_theta(monomial(alpha0, F(-3, 2)))
    assert q.terms == {F(-3, 2): pytest.approx(-(2 / 3) * alpha0)}
    assert ps_antiderive_theta(zero_series()).is_zero
    with pytest.raises(LogarithmicTerm):
        ps_antiderive_theta(PuiseuxSeries.from_terms({-1: 1, 0: 3}))


def test_antiderive_inverts_theta(rng):
    a = _random_series(rng, 3, F(2))
    without_constant = PuiseuxSeries.from_terms(
        {q: c for q, c in a.terms.items() if q != 0}, a.truncation_order
    )
    assert max_difference(theta_derive(ps_antiderive_theta(without_constant)), without_constant) < 1e-12


def test_ring_laws(rng):
    a = _random_series(rng, 2, F(2))
    b = _random_series(rng, 3, F(2))
    c = _random_series(rng, 6, F(2))
    left = ps_mul(ps_mul(a, b), c)
    right = ps_mul(a, ps_mul(b, c))
    both = ps_truncate(left, right.truncation_order)
    assert max_difference(both, ps_truncate(right, left.truncation_order)) < 1e-9
    distributed = ps_add(ps_mul(a, b), ps_mul(a, c))
    assert max_difference(ps_mul(a, ps_add(b, c)), distributed) < 1e-9


def test_valuation_laws(rng):
    a = _random_series(rng, 2, F(3))
    b = _random_series(rng, 3, F(3))
    assert ps_mul(a, b).valuation == a.valuation + b.valuation
    assert ps_add(a, b).valuation >= min(a.valuation, b.valuation)


def test_coefficients_below_epsilon_are_dropped():
    s = PuiseuxSeries.from_terms({0: 1e-12, 1: 1.0})
    assert list(s.terms) == [F(1)]


def test_reading_beyond_truncation_raises():
    s = PuiseuxSeries.from_terms({0: 1}, truncation_order=F(1, 2))
    assert s.coefficient(F(1, 3)) == 0
    with pytest.raises(TruncationExceeded):
        s.coefficient(F(1, 2))


def test_higher_truncation_reproduces_known_coefficients(rng):
    a = _random_series(rng, 2, F(4))
    low = ps_pow(ps_truncate(a, 1), 3)
    high = ps_pow(a, 3)
    for q, c in low.terms.items():
        assert abs(high.coefficient(q) - c) < 1e-9


def test_schema_serialization():
    s = PuiseuxSeries.from_terms({F(-3, 2): 1 - 2j, 0: 0.5}, F(1, 2))
    model = series_to_model(s)
    assert [t.exponent for t in model.terms] == ["-3/2", "0"]
    assert model.truncation_order == "1/2"
    assert model.terms[0].im == -2.0
    assert max_difference(series_from_model(model), s) == 0.0
