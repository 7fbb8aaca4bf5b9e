from fractions import Fraction

import pytest

from com.mhire.app.services.branches.branches import CASE_A
from com.mhire.app.services.operator.airy_operator import validate
from com.mhire.app.services.reduction.equivalence import (
    LEVEL_MATRICES_DIFFER,
    RESIDUES_DIFFER,
    VERDICT_EQUIVALENT,
    VERDICT_NECESSARY_ONLY,
    VERDICT_NOT_EQUIVALENT,
    canonical_mismatch,
    coefficient_conditions,
    coefficient_value,
    formal_equivalence,
)
from com.mhire.app.services.reduction.reduction import CaseNotImplemented
from com.mhire.app.services.reduction.reduction_schema import EquivalenceReport, equivalence_report
from conftest import random_operator

F = Fraction


def test_operator_is_equivalent_to_itself(rng):
    for n, m in [(2, 3), (3, 3), (3, 2)]:
        L = random_operator(rng, n, m)
        check = formal_equivalence(L, L)
        assert check.same_bidegree
        assert all(holds for _, holds in check.coefficient_conditions)
        assert check.factors_match and check.canonical_orbit_match
        assert check.verdict == VERDICT_EQUIVALENT


def test_bidegree_mismatch_stops_early(rng):
    check = formal_equivalence(random_operator(rng, 2, 1), random_operator(rng, 2, 2))
    assert not check.same_bidegree
    assert check.verdict == VERDICT_NOT_EQUIVALENT
    assert check.factors_match is None and check.canonical_orbit_match is None


def test_coefficient_below_the_sensitive_set_keeps_conditions_and_factors(rng):
    n, m = 2, 4
    L1 = random_operator(rng, n, m)
    q = m // n
    b = list(L1.b)
    b[m - q - 1] += 3
    check = formal_equivalence(L1, validate(n, m, L1.a, b))
    assert [name for name, _ in check.coefficient_conditions] == ["a_1", "b_4", "b_3", "b_2"]
    assert all(holds for _, holds in check.coefficient_conditions)
    assert check.factors_match


def test_constant_term_change_keeps_equivalence(rng):
    n, m = 2, 4
    L1 = random_operator(rng, n, m)
    b = list(L1.b)
    b[0] += 3
    check = formal_equivalence(L1, validate(n, m, L1.a, b))
    assert check.factors_match and check.canonical_orbit_match
    assert check.verdict == VERDICT_EQUIVALENT


def test_sensitive_coefficient_change_breaks_equivalence(rng):
    n, m = 3, 5
    L1 = random_operator(rng, n, m)
    a = list(L1.a)
    a[n - 2] += 1
    check = formal_equivalence(L1, validate(n, m, a, L1.b))
    assert ("a_2", False) in check.coefficient_conditions
    assert not check.factors_match
    assert not check.canonical_orbit_match
    assert check.verdict == VERDICT_NOT_EQUIVALENT


def test_case_S_conditions(rng):
    L1 = random_operator(rng, 5, 2)
    b = list(L1.b)
    b[0] += 1
    conditions = coefficient_conditions(L1, validate(5, 2, L1.a, b))
    assert [name for name, _ in conditions] == ["b_2", "b_1", "a_4", "a_3", "a_2"]
    assert all(holds for _, holds in conditions)


def test_boundary_case_gives_necessary_conditions_only():
    L = validate(4, 2, [0, 0, 0, 1], [1, 0, 1])
    check = formal_equivalence(L, L, strict=False)
    assert check.coefficient_conditions == []
    assert check.verdict == VERDICT_NECESSARY_ONLY
    assert check.notes
    with pytest.raises(CaseNotImplemented):
        formal_equivalence(L, L, strict=True)


def test_coefficient_value_lookup(classical_airy):
    assert coefficient_value(classical_airy, "b_1") == 1
    assert coefficient_value(classical_airy, "a_2") == 1
    assert coefficient_value(classical_airy, "a_0") == 0


def test_equivalence_report_serializes(rng):
    L = random_operator(rng, 2, 3)
    report = equivalence_report(formal_equivalence(L, L))
    dumped = report.model_dump(mode="json")
    assert dumped["verdict"] == "Equivalent"
    assert dumped["coefficient_conditions"][0] == {"name": "a_1", "holds": True}
    assert EquivalenceReport.model_validate(dumped) == report


def test_case_A_integer_exponent_shift_keeps_equivalence():
    # d^2 - x^2 against d^2 - x^2 - 2: formal exponents move by -+1
    check = formal_equivalence(validate(2, 2, [0, 1], [0, 0, 1]), validate(2, 2, [0, 1], [2, 0, 1]))
    assert check.case == CASE_A
    assert all(holds for _, holds in check.coefficient_conditions)
    assert check.factors_match and check.canonical_orbit_match
    assert check.verdict == VERDICT_EQUIVALENT
    assert RESIDUES_DIFFER not in check.notes


def test_case_A_fractional_exponent_shift_is_caught_by_the_residue():
    pairs = [
        (validate(2, 2, [0, 1], [0, 0, 1]), validate(2, 2, [0, 1], [1, 0, 1])),
        (validate(3, 3, [0, 0, 1], [0, 1, 0, 1]), validate(3, 3, [0, 0, 1], [0, 2, 0, 1])),
    ]
    for first, second in pairs:
        check = formal_equivalence(first, second)
        assert check.case == CASE_A
        assert all(holds for _, holds in check.coefficient_conditions)
        assert check.factors_match
        assert check.canonical_orbit_match is False
        assert check.verdict == VERDICT_NOT_EQUIVALENT
        assert RESIDUES_DIFFER in check.notes
        assert canonical_mismatch(first, second) == RESIDUES_DIFFER


def test_canonical_mismatch_reasons():
    b = [1, 2, -1, 3, F(1, 2), 2]
    L = validate(3, 5, [F(1, 2), 2, 1], b)
    assert canonical_mismatch(L, L) is None
    # a_2 stays nonzero, so only the z^-2 level matrix moves
    assert canonical_mismatch(L, validate(3, 5, [F(1, 2), 3, 1], b)) == LEVEL_MATRICES_DIFFER
