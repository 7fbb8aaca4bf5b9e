import cmath
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Any, List, Optional, Sequence

import mpmath

from com.mhire.app.config.config import Config
from com.mhire.app.services.branches.branches import (
    Branch,
    branch_expand,
    factor_from_branch,
)
from com.mhire.app.services.operator.airy_operator import AiryOperator, fuchs_form
from com.mhire.app.services.series.series import (
    PuiseuxSeries,
    TruncationExceeded,
    one_series,
    ps_add,
    ps_mul,
    ps_scale,
    theta_derive,
)
from com.mhire.app.utils.error_utils import AiryEngineError
from com.mhire.app.utils.number_utils import exp_i_pi, round_to_rational, scalar, scalar_abs

logger = logging.getLogger(__name__)

LOG_BLOCKS_UNDETERMINED = "undetermined"


class MonodromyError(AiryEngineError):
    pass


class ValuationMismatch(MonodromyError):
    pass


class RationalRoundingFailure(MonodromyError):
    pass


@dataclass(frozen=True)
class ShiftedOperator:
    """L^ξ = Σ h_k D^{n−k}, the operator conjugated by exp(∫ξ dz/z)."""

    h: tuple
    branch: Branch

    @property
    def subleading_exponent(self) -> Fraction:
        n, m = self.branch.n, self.branch.m
        return Fraction(-n - m + 1) + Fraction(m, n)


@dataclass(frozen=True)
class SolutionShape:
    root_index: int
    factor: PuiseuxSeries
    lam: Fraction
    eigenvalue: Any
    log_blocks: str = LOG_BLOCKS_UNDETERMINED


@dataclass
class MonodromyData:
    operator: AiryOperator
    lam: Fraction
    eigenvalue: Any
    per_branch: List[SolutionShape]
    notes: List[str] = field(default_factory=list)


def xi_bracket(xi: PuiseuxSeries, k: int) -> PuiseuxSeries:
    """ξ^{[0]} = 1, ξ^{[k+1]} = ξ ξ^{[k]} + D ξ^{[k]}."""
    if k < 0:
        raise MonodromyError(f"xi_bracket needs k >= 0, got {k}")
    return xi_brackets(xi, k)[k]


def xi_brackets(xi: PuiseuxSeries, k: int) -> List[PuiseuxSeries]:
    brackets = [one_series()]
    for _ in range(k):
        previous = brackets[-1]
        brackets.append(ps_add(ps_mul(xi, previous), theta_derive(previous)))
    return brackets


def closed_form_lambda(L: AiryOperator) -> Fraction:
    n, m = L.n, L.m
    return Fraction((1 - n) * (n + m), 2 * n)


def _check_leading(h: PuiseuxSeries, exponent: Fraction, expected: Any, label: str) -> Any:
    tolerance = Config().CHECK_TOLERANCE
    try:
        value = h.coefficient(exponent)
    except TruncationExceeded:
        raise ValuationMismatch(f"{label} is not resolved at z^{exponent}: raise the branch order")
    for q, c in h.terms.items():
        if q < exponent and scalar_abs(c) > tolerance:
            raise ValuationMismatch(f"{label} has a term at z^{q} below its expected valuation {exponent}")
    if scalar_abs(value - expected) > tolerance * max(1.0, scalar_abs(expected)):
        raise ValuationMismatch(f"{label} leading coefficient {complex(value)} differs from {complex(expected)}")
    return value


def shifted_operator(L: AiryOperator, branch: Branch, K: Optional[int] = None) -> ShiftedOperator:
    n, m = L.n, L.m
    K = m + 2 * n if K is None else K
    if branch.K < K:
        branch = branch_expand(L, branch.root_index, K)
    c = fuchs_form(L).c
    brackets = xi_brackets(branch.series(), n)
    h = []
    for k in range(n + 1):
        total = None
        for i in range(k + 1):
            term = ps_mul(c[i], ps_scale(brackets[k - i], comb(n - i, k - i)))
            total = term if total is None else ps_add(total, term)
        h.append(total)

    shifted = ShiftedOperator(h=tuple(h), branch=branch)
    alpha0 = branch.alpha[0]
    for k in range(n):
        _check_leading(h[k], -k * (1 + Fraction(m, n)), comb(n, k) * alpha0 ** k, f"h_{k}")
    sigma = scalar(Fraction((1 - n) * (n + m), 2)) * alpha0 ** (n - 1)
    _check_leading(h[n], shifted.subleading_exponent, sigma, f"h_{n}")
    logger.debug(f"Shifted operator of branch {branch.root_index} built with K = {branch.K}")
    return shifted


def indicial_exponent(L: AiryOperator, branch: Branch, K: Optional[int] = None) -> Fraction:
    """λ from −λ n α_0^{n−1} + σ = 0, rounded to a rational with denominator ≤ 2n."""
    shifted = shifted_operator(L, branch, K)
    exponent = shifted.subleading_exponent
    sigma = shifted.h[L.n].coefficient(exponent)
    linear = shifted.h[L.n - 1].coefficient(exponent)
    value = sigma / linear
    lam = round_to_rational(value, 2 * L.n, Config().EPSILON)
    if lam is None:
        raise RationalRoundingFailure(f"Indicial root {complex(value)} is not a rational with denominator <= {2 * L.n}")
    logger.debug(f"Indicial exponent of branch {branch.root_index}: {lam}")
    return lam


def monodromy_eigenvalue(L: AiryOperator) -> Any:
    """(−1)^{m+n−1} exp(iπ m/n)."""
    return (-1) ** (L.m + L.n - 1) * exp_i_pi(Fraction(L.m, L.n))


def formal_solution_shape(L: AiryOperator, K: Optional[int] = None) -> List[SolutionShape]:
    n, m = L.n, L.m
    K = m + 2 * n if K is None else K
    shapes = []
    for i in range(n):
        branch = branch_expand(L, i, K)
        lam = indicial_exponent(L, branch, K)
        shapes.append(
            SolutionShape(
                root_index=i,
                factor=factor_from_branch(branch),
                lam=lam,
                eigenvalue=exp_i_pi(2 * lam),
            )
        )
    return shapes


def compute_monodromy(L: AiryOperator, K: Optional[int] = None) -> MonodromyData:
    shapes = formal_solution_shape(L, K)
    lam = closed_form_lambda(L)
    for shape in shapes:
        if shape.lam != lam:
            raise MonodromyError(
                f"Indicial exponent {shape.lam} of branch {shape.root_index} differs from (1-n)(n+m)/(2n) = {lam}"
            )
    eigenvalue = monodromy_eigenvalue(L)
    if scalar_abs(eigenvalue - exp_i_pi(2 * lam)) > Config().CHECK_TOLERANCE:
        raise MonodromyError("exp(2i pi lambda) disagrees with (-1)^(m+n-1) exp(i pi m/n)")
    notes = [
        "the same exponent is attached to every determining factor",
        "logarithmic blocks are not determined",
    ]
    logger.info(f"Monodromy of bidegree ({L.n}, {L.m}): lambda = {lam}")
    return MonodromyData(operator=L, lam=lam, eigenvalue=eigenvalue, per_branch=shapes, notes=notes)


def monodromy_from_canonical(model) -> List[Any]:
    """Eigenvalues of exp(2iπC) for a canonical model with diagonal residue C."""
    residue = model.residue
    n = residue.shape[0]
    values = []
    for i in range(n):
        c = residue[i, i]
        values.append(_exp_2pi_i(c))
    return values


def _exp_2pi_i(value: Any) -> Any:
    if Config().is_big_precision:
        return mpmath.exp(2j * mpmath.pi * value)
    return cmath.exp(2j * cmath.pi * complex(value))


def eigenvalues_match(first: Sequence[Any], second: Sequence[Any], tolerance: Optional[float] = None) -> bool:
    """Multiset equality of two scalar lists to a tolerance."""
    tolerance = Config().CHECK_TOLERANCE if tolerance is None else tolerance
    remaining = list(second)
    if len(first) != len(remaining):
        return False
    for value in first:
        for j, other in enumerate(remaining):
            if scalar_abs(value - other) <= tolerance:
                del remaining[j]
                break
        else:
            return False
    return True
