import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from com.mhire.app.config.config import Config
from com.mhire.app.services.branches.branches import (
    CASE_A,
    CASE_BOUNDARY,
    branch_case,
    determining_factors,
    sensitive_coefficients,
)
from com.mhire.app.services.operator.airy_operator import AiryOperator
from com.mhire.app.services.reduction.reduction import CaseNotImplemented, bv_reduce, joint_spectrum
from com.mhire.app.services.series.series import PuiseuxSeries, max_difference
from com.mhire.app.utils.number_utils import scalar_abs

logger = logging.getLogger(__name__)

VERDICT_EQUIVALENT = "Equivalent"
VERDICT_NOT_EQUIVALENT = "NotEquivalent"
VERDICT_NECESSARY_ONLY = "NecessaryConditionsOnly"

LEVELS_DIFFER = "canonical models have different levels"
LEVEL_MATRICES_DIFFER = "level matrices of the canonical models differ"
RESIDUES_DIFFER = (
    "canonical residues differ modulo integers: the exponent attached to some determining factor "
    "changes, which the coefficient conditions do not see"
)


@dataclass
class EquivalenceCheck:
    first: AiryOperator
    second: AiryOperator
    same_bidegree: bool
    case: Optional[str] = None
    coefficient_conditions: List[Tuple[str, bool]] = field(default_factory=list)
    factors_match: Optional[bool] = None
    canonical_orbit_match: Optional[bool] = None
    verdict: str = VERDICT_NOT_EQUIVALENT
    notes: List[str] = field(default_factory=list)


def coefficient_value(L: AiryOperator, name: str) -> Fraction:
    """Value of a coefficient named "a_i" or "b_j"."""
    kind, index = name.split("_")
    index = int(index)
    return L.a_coeff(index) if kind == "a" else L.b_coeff(index)


def coefficient_conditions(L1: AiryOperator, L2: AiryOperator) -> List[Tuple[str, bool]]:
    """Exact equalities of the coefficients the formal class depends on; none in the boundary case."""
    if branch_case(L1) == CASE_BOUNDARY:
        return []
    return [(name, coefficient_value(L1, name) == coefficient_value(L2, name)) for name in sensitive_coefficients(L1)]


def expanded_factors(L: AiryOperator) -> List[PuiseuxSeries]:
    factors = []
    for factor in determining_factors(L).factors:
        factors.extend([factor.series] * factor.multiplicity)
    return factors


def series_multisets_match(first: Sequence[PuiseuxSeries], second: Sequence[PuiseuxSeries], tolerance: float) -> bool:
    remaining = list(second)
    if len(first) != len(remaining):
        return False
    for series in first:
        for j, other in enumerate(remaining):
            if max_difference(series, other) <= tolerance:
                del remaining[j]
                break
        else:
            return False
    return True


def factor_multisets_match(L1: AiryOperator, L2: AiryOperator, tolerance: Optional[float] = None) -> bool:
    tolerance = Config().CHECK_TOLERANCE if tolerance is None else tolerance
    return series_multisets_match(expanded_factors(L1), expanded_factors(L2), tolerance)


def _tuples_close(first: Sequence, second: Sequence, tolerance: float) -> bool:
    return len(first) == len(second) and all(scalar_abs(a - b) <= tolerance for a, b in zip(first, second))


def _spectra_match(first: List[tuple], second: List[tuple], tolerance: float) -> bool:
    remaining = list(second)
    for spectrum in first:
        for j, other in enumerate(remaining):
            if _tuples_close(spectrum, other, tolerance):
                del remaining[j]
                break
        else:
            return False
    return True


def canonical_mismatch(L1: AiryOperator, L2: AiryOperator, tolerance: Optional[float] = None) -> Optional[str]:
    """Why the canonical models of L1 and L2 lie in different orbits; None when they agree."""
    tolerance = Config().CHECK_TOLERANCE if tolerance is None else tolerance
    model1, _ = bv_reduce(L1, strict=False)
    model2, _ = bv_reduce(L2, strict=False)
    if model1.levels != model2.levels:
        return LEVELS_DIFFER
    if not _spectra_match(joint_spectrum(model1, turns=0), joint_spectrum(model2, turns=0), tolerance):
        return LEVEL_MATRICES_DIFFER
    if not _spectra_match(joint_spectrum(model1), joint_spectrum(model2), tolerance):
        return RESIDUES_DIFFER
    return None


def canonical_models_match(L1: AiryOperator, L2: AiryOperator, tolerance: Optional[float] = None) -> bool:
    """Equal levels, and equal joint spectra of the level matrices and exp(2iπkC), k = 1..2n."""
    return canonical_mismatch(L1, L2, tolerance) is None


def formal_equivalence(L1: AiryOperator, L2: AiryOperator, strict: Optional[bool] = None) -> EquivalenceCheck:
    strict = Config().STRICT if strict is None else strict
    check = EquivalenceCheck(first=L1, second=L2, same_bidegree=L1.bidegree == L2.bidegree)
    if not check.same_bidegree:
        check.notes.append("bidegrees differ")
        logger.info(f"Verdict {check.verdict}: bidegree {L1.bidegree} vs {L2.bidegree}")
        return check

    n, m = L1.bidegree
    check.case = branch_case(L1)
    if check.case == CASE_BOUNDARY:
        if strict:
            raise CaseNotImplemented(f"No coefficient conditions are known for bidegree ({n}, {m})")
        logger.warning(f"Bidegree ({n}, {m}) has n = qm with q >= 2: only necessary conditions are checked")
        check.notes.append("n = qm with q >= 2: coefficient conditions unknown, only necessary conditions checked")
    if check.case == CASE_A:
        check.notes.append("m = qn: conditions read as equality of a_{n-1} and b_m..b_{m-q}")

    check.coefficient_conditions = coefficient_conditions(L1, L2)
    check.factors_match = factor_multisets_match(L1, L2)
    mismatch = canonical_mismatch(L1, L2)
    check.canonical_orbit_match = mismatch is None
    if mismatch is not None:
        check.notes.append(mismatch)

    failed = not all(holds for _, holds in check.coefficient_conditions)
    if failed or not check.factors_match or not check.canonical_orbit_match:
        check.verdict = VERDICT_NOT_EQUIVALENT
    elif check.case == CASE_BOUNDARY:
        check.verdict = VERDICT_NECESSARY_ONLY
    else:
        check.verdict = VERDICT_EQUIVALENT
    logger.info(f"Verdict {check.verdict} for bidegree ({n}, {m})")
    return check
