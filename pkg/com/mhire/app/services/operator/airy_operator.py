import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Sequence, Tuple

from com.mhire.app.services.series.series import (
    PuiseuxSeries,
    evaluate_polynomial,
)
from com.mhire.app.utils.error_utils import AiryEngineError
from com.mhire.app.utils.number_utils import RationalLike, format_rational, parse_rational

logger = logging.getLogger(__name__)


class OperatorError(AiryEngineError):
    pass


class BadLeading(OperatorError):
    pass


class DegenerateDegree(OperatorError):
    pass


class BadDegree(OperatorError):
    pass


class InternalSlopeMismatch(OperatorError):
    pass


@dataclass(frozen=True)
class AiryOperator:
    """L = Σ_{i=1}^n a_i ∂^i − Σ_{j=0}^m b_j x^j, a = (a_1..a_n), b = (b_0..b_m)."""

    n: int
    m: int
    a: Tuple[Fraction, ...]
    b: Tuple[Fraction, ...]

    def a_coeff(self, i: int) -> Fraction:
        # a_0 is 0: P_n has no constant term
        if 1 <= i <= self.n:
            return self.a[i - 1]
        return Fraction(0)

    def b_coeff(self, j: int) -> Fraction:
        if 0 <= j <= self.m:
            return self.b[j]
        return Fraction(0)

    @property
    def bidegree(self) -> Tuple[int, int]:
        return (self.n, self.m)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class FuchsForm:
    """Coefficients c_0..c_n of (−1)^n x^n L written in D = z d/dz, z = 1/x."""

    operator: AiryOperator
    c: Tuple[PuiseuxSeries, ...]


@dataclass(frozen=True)
class SymbolPoly:
    """P_L(z, X) = Σ c_k X^{n−k}."""

    coefficients: Tuple[PuiseuxSeries, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def evaluate(self, x: PuiseuxSeries) -> PuiseuxSeries:
        return evaluate_polynomial(self.coefficients, x)


@dataclass(frozen=True)
class NewtonSide:
    start: Tuple[int, Fraction]
    end: Tuple[int, Fraction]
    slope: Fraction
    root_valuation: Fraction

    @property
    def length(self) -> int:
        return self.end[0] - self.start[0]


def validate(n: int, m: int, a: Sequence[RationalLike], b: Sequence[RationalLike]) -> AiryOperator:
    if n < 1 or m < 1:
        raise BadDegree(f"Bidegree must satisfy n >= 1 and m >= 1, got (n, m) = ({n}, {m})")
    if len(a) == n + 1:
        raise BadDegree("P_n has no constant term; a constant in P_n(d) belongs to b_0")
    if len(a) != n:
        raise BadDegree(f"Expected {n} coefficients a_1..a_{n}, got {len(a)}")
    if len(b) != m + 1:
        raise BadDegree(f"Expected {m + 1} coefficients b_0..b_{m}, got {len(b)}")
    a = tuple(parse_rational(x) for x in a)
    b = tuple(parse_rational(x) for x in b)
    if a[-1] != 1:
        raise BadLeading(f"Leading coefficient a_{n} must be 1, got {format_rational(a[-1])}")
    if b[-1] == 0:
        raise DegenerateDegree(f"b_{m} = 0: Q has degree below {m}")
    return AiryOperator(n=n, m=m, a=a, b=b)


@lru_cache(maxsize=None)
def _sigma_row(j: int) -> Tuple[int, ...]:
    # coefficients of Π_{r=1}^{j-1} (1 + rT)
    row = [1]
    for r in range(1, j):
        row = [x + r * y for x, y in zip(row + [0], [0] + row)]
    return tuple(row)


def sigma(h: int, j: int) -> int:
    """Elementary symmetric polynomial of degree h in 1, 2, …, j−1."""
    if j < 1:
        raise ValueError(f"sigma needs j >= 1, got {j}")
    if h < 0 or h > j - 1:
        return 0
    return _sigma_row(j)[h]


def fuchs_form(L: AiryOperator) -> FuchsForm:
    n = L.n
    c: List[PuiseuxSeries] = []
    for k in range(n):
        terms = {}
        for i in range(k + 1):
            coefficient = (-1) ** i * L.a_coeff(n - i) * sigma(k - i, n - i)
            if coefficient:
                terms[Fraction(-i)] = coefficient
        c.append(PuiseuxSeries.from_terms(terms))
    sign = (-1) ** (n - 1)
    c.append(PuiseuxSeries.from_terms({Fraction(-n - j): sign * L.b_coeff(j) for j in range(L.m + 1) if L.b_coeff(j)}))
    logger.info(f"Fuchs form built for bidegree ({L.n}, {L.m})")
    return FuchsForm(operator=L, c=tuple(c))


def symbol(L: AiryOperator) -> SymbolPoly:
    return SymbolPoly(coefficients=fuchs_form(L).c)


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_convex_hull(points: Sequence[Tuple[int, Fraction]]) -> List[Tuple[int, Fraction]]:
    """Monotone-chain lower hull, exact arithmetic."""
    hull: List[Tuple[int, Fraction]] = []
    for p in sorted(points):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def newton_polygon(L: AiryOperator) -> List[NewtonSide]:
    """Sides of the lower hull of (n−k, v(c_k)); root_valuation = −slope."""
    c = symbol(L).coefficients
    points = [(L.n - k, ck.valuation) for k, ck in enumerate(c) if not ck.is_zero]
    hull = lower_convex_hull(points)
    sides = []
    for p, q in zip(hull, hull[1:]):
        slope = Fraction(q[1] - p[1]) / (q[0] - p[0])
        sides.append(NewtonSide(start=p, end=q, slope=slope, root_valuation=-slope))
    return sides


def newton_slope(L: AiryOperator) -> Fraction:
    expected = Fraction(L.n + L.m, L.n)
    unbounded = [side for side in newton_polygon(L) if side.root_valuation < -1]
    if len(unbounded) != 1 or unbounded[0].root_valuation != -expected or unbounded[0].length != L.n:
        raise InternalSlopeMismatch(
            f"Newton polygon of the symbol disagrees with slope {format_rational(expected)}: "
            f"{[(format_rational(s.root_valuation), s.length) for s in unbounded]}"
        )
    return expected


def characteristic_index(L: AiryOperator) -> int:
    """n − j, j being the number of symbol roots of nonnegative valuation (the zero factor)."""
    bounded = sum(side.length for side in newton_polygon(L) if side.root_valuation >= 0)
    return L.n - bounded


def connection_coefficients(L: AiryOperator) -> Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...]]:
    """(ã_1..ã_{n−1}, b̃_0..b̃_m) entering the companion connection of L."""
    n = L.n
    a_tilde = tuple((-1) ** (n - 1 - j) * L.a_coeff(j) for j in range(1, n))
    b_tilde = tuple((-1) ** n * b for b in L.b)
    return a_tilde, b_tilde


def _monomial_text(coefficient: Fraction, variable: str, power: int, first: bool) -> str:
    sign = "-" if coefficient < 0 else "+"
    magnitude = abs(coefficient)
    if power == 0:
        body = format_rational(magnitude)
    else:
        var = variable if power == 1 else f"{variable}^{power}"
        body = var if magnitude == 1 else f"{format_rational(magnitude)}*{var}"
    if first:
        return body if sign == "+" else f"-{body}"
    return f" {sign} {body}"


def to_text(L: AiryOperator) -> str:
    """Render as "d^n + … - x^m - …", inverse of the CLI parser."""
    parts = []
    for i in range(L.n, 0, -1):
        if L.a_coeff(i):
            parts.append(_monomial_text(L.a_coeff(i), "d", i, not parts))
    for j in range(L.m, -1, -1):
        if L.b_coeff(j):
            parts.append(_monomial_text(-L.b_coeff(j), "x", j, not parts))
    return "".join(parts)
