from fractions import Fraction
from math import comb

import pytest

from com.mhire.app.services.branches.branches import branch_expand
from com.mhire.app.services.monodromy.monodromy import (
    closed_form_lambda,
    compute_monodromy,
    eigenvalues_match,
    formal_solution_shape,
    indicial_exponent,
    monodromy_eigenvalue,
    shifted_operator,
    xi_bracket,
)
from com.mhire.app.services.monodromy.monodromy_schema import MonodromyReport, monodromy_report
from com.mhire.app.services.operator.airy_operator import validate
from com.mhire.app.services.series.series import (
    max_difference,
    ps_add,
    ps_mul,
    ps_pow,
    ps_scale,
    ps_sub,
    theta_derive,
)
from conftest import random_operator

F = Fraction


def test_xi_bracket_small_orders(rng):
    L = random_operator(rng, 3, 2)
    xi = branch_expand(L, 0, 8).series()
    assert max_difference(xi_bracket(xi, 0), ps_pow(xi, 0)) == 0
    assert max_difference(xi_bracket(xi, 1), xi) < 1e-12
    second = ps_add(ps_pow(xi, 2), theta_derive(xi))
    assert max_difference(xi_bracket(xi, 2), second) < 1e-9
    dxi = theta_derive(xi)
    third = ps_add(ps_add(ps_pow(xi, 3), ps_scale(ps_mul(xi, dxi), 3)), theta_derive(dxi))
    assert max_difference(xi_bracket(xi, 3), third) < 1e-9


def test_bracket_valuation_bound(rng):
    for n, m in [(2, 1), (2, 3), (3, 2), (4, 5)]:
        L = random_operator(rng, n, m)
        xi = branch_expand(L, 0, m + 2 * n).series()
        dxi = theta_derive(xi)
        for k in range(2, 7):
            rest = ps_sub(
                ps_sub(xi_bracket(xi, k), ps_pow(xi, k)),
                ps_scale(ps_mul(ps_pow(xi, k - 2), dxi), F(k * (k - 1), 2)),
            )
            bound = -(k - 2) * (1 + F(m, n))
            assert all(q >= bound or abs(c) < 1e-8 for q, c in rest.terms.items())


def test_shifted_operator_leading_coefficients(rng):
    for n, m in [(2, 1), (3, 4), (4, 2), (5, 3)]:
        L = random_operator(rng, n, m)
        for i in range(n):
            shifted = shifted_operator(L, branch_expand(L, i))
            alpha0 = shifted.branch.alpha[0]
            exponent = shifted.subleading_exponent
            assert shifted.h[0].terms == {F(0): 1}
            sigma = (1 - n) * (n + m) / 2 * alpha0 ** (n - 1)
            assert abs(shifted.h[n].coefficient(exponent) - sigma) < 1e-8
            assert abs(shifted.h[n - 1].coefficient(exponent) - n * alpha0 ** (n - 1)) < 1e-8
            for k in range(1, n):
                lead = -k * (1 + F(m, n))
                assert shifted.h[k].coefficient(lead) == pytest.approx(comb(n, k) * alpha0 ** k)


def test_indicial_exponent_examples(classical_airy):
    assert indicial_exponent(classical_airy, branch_expand(classical_airy, 0)) == F(-3, 4)
    L = validate(1, 2, [1], [3, 0, -2])
    assert indicial_exponent(L, branch_expand(L, 0)) == 0


def test_indicial_exponent_matches_closed_form(rng):
    for n in range(2, 6):
        for m in range(1, 8):
            L = random_operator(rng, n, m)
            expected = F((1 - n) * (n + m), 2 * n)
            assert closed_form_lambda(L) == expected
            assert indicial_exponent(L, branch_expand(L, rng.randrange(n))) == expected


def _leading_of_conjugated_on_monomial(shifted, lam, n):
    """Coefficient at the subleading exponent of L^ξ z^{−λ} = Σ h_k (−λ)^{n−k} z^{−λ}."""
    exponent = shifted.subleading_exponent
    return sum(shifted.h[k].coefficient(exponent) * (-float(lam)) ** (n - k) for k in range(n + 1))


@pytest.mark.parametrize("m", [1, 2, 3, 5, 7])
def test_first_order_conjugation_kills_the_indicial_monomial(rng, m):
    L = random_operator(rng, 1, m)
    branch = branch_expand(L, 0)
    shifted = shifted_operator(L, branch)
    lam = indicial_exponent(L, branch)
    assert shifted.subleading_exponent == 0
    assert lam == closed_form_lambda(L) == 0
    assert abs(_leading_of_conjugated_on_monomial(shifted, lam, 1)) < 1e-9
    assert abs(_leading_of_conjugated_on_monomial(shifted, lam + 1, 1)) > 0.5


def test_conjugation_kills_the_indicial_monomial_on_every_branch(rng):
    for n, m in [(2, 1), (2, 4), (3, 2), (4, 3)]:
        L = random_operator(rng, n, m)
        for i in range(n):
            branch = branch_expand(L, i)
            shifted = shifted_operator(L, branch)
            lam = indicial_exponent(L, branch)
            assert abs(_leading_of_conjugated_on_monomial(shifted, lam, n)) < 1e-8


def test_lambda_independent_of_branch(rng):
    L = random_operator(rng, 3, 5)
    values = {shape.lam for shape in formal_solution_shape(L)}
    assert values == {F(-8, 3)}


def test_monodromy_eigenvalue_examples(classical_airy):
    assert monodromy_eigenvalue(classical_airy) == pytest.approx(1j)
    assert monodromy_eigenvalue(validate(1, 3, [1], [0, 0, 0, 1])) == pytest.approx(1)
    for n in range(1, 6):
        for m in range(1, 8):
            value = monodromy_eigenvalue(_monomial_operator(n, m))
            assert abs(value) == pytest.approx(1)


def _monomial_operator(n, m):
    return validate(n, m, [0] * (n - 1) + [1], [0] * m + [1])


def test_compute_monodromy_classical_airy(classical_airy):
    data = compute_monodromy(classical_airy)
    assert data.lam == F(-3, 4)
    assert data.eigenvalue == pytest.approx(1j)
    assert [s.eigenvalue for s in data.per_branch] == [pytest.approx(1j)] * 2
    assert all(s.log_blocks == "undetermined" for s in data.per_branch)
    report = monodromy_report(data)
    dumped = report.model_dump(by_alias=True, mode="json")
    assert dumped["lambda"] == "-3/4"
    assert MonodromyReport.model_validate(dumped) == report


def test_eigenvalues_match_is_multiset_equality():
    assert eigenvalues_match([1j, -1j], [-1j, 1j])
    assert not eigenvalues_match([1j, 1j], [1j, -1j])
    assert not eigenvalues_match([1j], [1j, 1j])
