import math
import logging
from fractions import Fraction
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

from com.mhire.app.config.config import Config
from com.mhire.app.utils.error_utils import AiryEngineError
from com.mhire.app.utils.number_utils import format_rational, lcm, scalar, scalar_abs

logger = logging.getLogger(__name__)


class SeriesError(AiryEngineError):
    pass


class ZeroLeadingCoefficient(SeriesError):
    pass


class LogarithmicTerm(SeriesError):
    pass


class TruncationExceeded(SeriesError):
    pass


# None stands for +infinity: an exact series, or the valuation of exact zero.
Order = Optional[Fraction]


def _order_add(x: Order, y: Order) -> Order:
    if x is None or y is None:
        return None
    return x + y


def _order_min(*orders: Order) -> Order:
    known = [o for o in orders if o is not None]
    return min(known) if known else None


def _key_limit(truncation: Order, e: int) -> Optional[int]:
    # key/e < truncation  <=>  key < ceil(truncation * e)
    if truncation is None:
        return None
    return math.ceil(truncation * e)


class PuiseuxSeries:
    """Truncated series Σ c_k z^{k/e} with exact exponents.

    Coefficients are kept in a dict keyed by the integer numerator k over the
    ramification e. Exponents at or beyond `truncation_order` are unknown;
    `truncation_order is None` marks an exact (finite) series.
    """

    __slots__ = ("_e", "_coeffs", "_trunc")

    def __init__(self, e: int, coeffs: Mapping[int, Any], truncation_order: Order = None):
        if e < 1:
            raise SeriesError(f"Ramification must be positive, got {e}")
        eps = Config().EPSILON
        truncation_order = None if truncation_order is None else Fraction(truncation_order)
        limit = _key_limit(truncation_order, e)
        kept = {}
        for k, c in coeffs.items():
            if limit is not None and k >= limit:
                continue
            if scalar_abs(c) <= eps:
                continue
            kept[k] = c
        self._e = e
        self._coeffs = kept
        self._trunc = truncation_order

    @classmethod
    def from_terms(cls, terms: Mapping[Any, Any], truncation_order: Order = None) -> "PuiseuxSeries":
        exponents = {Fraction(q): c for q, c in terms.items()}
        e = lcm(*(q.denominator for q in exponents)) if exponents else 1
        coeffs: Dict[int, Any] = {}
        for q, c in exponents.items():
            key = int(q * e)
            coeffs[key] = coeffs.get(key, scalar(0)) + scalar(c)
        return cls(e, coeffs, truncation_order)

    # -- read access ---------------------------------------------------------

    @property
    def ramification(self) -> int:
        return self._e

    @property
    def truncation_order(self) -> Order:
        return self._trunc

    @property
    def is_exact(self) -> bool:
        return self._trunc is None

    @property
    def is_zero(self) -> bool:
        """No stored term (exact zero, or zero up to the truncation)."""
        return not self._coeffs

    @property
    def terms(self) -> Dict[Fraction, Any]:
        return {Fraction(k, self._e): self._coeffs[k] for k in sorted(self._coeffs)}

    @property
    def valuation(self) -> Order:
        if self._coeffs:
            return Fraction(min(self._coeffs), self._e)
        return self._trunc

    def leading_term(self) -> Tuple[Fraction, Any]:
        if not self._coeffs:
            raise ZeroLeadingCoefficient("Series has no nonzero term")
        k = min(self._coeffs)
        return Fraction(k, self._e), self._coeffs[k]

    def coefficient(self, exponent: Any) -> Any:
        exponent = Fraction(exponent)
        if self._trunc is not None and exponent >= self._trunc:
            raise TruncationExceeded(
                f"Coefficient of z^{format_rational(exponent)} is beyond truncation order "
                f"{format_rational(self._trunc)}"
            )
        key = exponent * self._e
        if key.denominator != 1:
            return scalar(0)
        return self._coeffs.get(int(key), scalar(0))

    def exponents(self) -> Iterable[Fraction]:
        return [Fraction(k, self._e) for k in sorted(self._coeffs)]

    def rescaled_coeffs(self, e: int) -> Dict[int, Any]:
        factor = e // self._e
        return {k * factor: c for k, c in self._coeffs.items()}

    # -- operators -----------------------------------------------------------

    def __add__(self, other):
        return ps_add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ps_add(self, ps_neg(_coerce(other)))

    def __rsub__(self, other):
        return ps_add(_coerce(other), ps_neg(self))

    def __neg__(self):
        return ps_neg(self)

    def __mul__(self, other):
        if isinstance(other, PuiseuxSeries):
            return ps_mul(self, other)
        return ps_scale(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        return ps_pow(self, k)

    def __repr__(self) -> str:
        parts = [f"({complex(c):.6g})*z^{format_rational(q)}" for q, c in self.terms.items()]
        body = " + ".join(parts) if parts else "0"
        if self._trunc is not None:
            body += f" + O(z^{format_rational(self._trunc)})"
        return f"PuiseuxSeries({body})"


def _coerce(value: Any) -> PuiseuxSeries:
    if isinstance(value, PuiseuxSeries):
        return value
    return constant(value)


# -- constructors --------------------------------------------------------------

def constant(value: Any, truncation_order: Order = None) -> PuiseuxSeries:
    return PuiseuxSeries(1, {0: scalar(value)}, truncation_order)


def monomial(value: Any, exponent: Any, truncation_order: Order = None) -> PuiseuxSeries:
    return PuiseuxSeries.from_terms({Fraction(exponent): value}, truncation_order)


def zero_series(truncation_order: Order = None) -> PuiseuxSeries:
    return PuiseuxSeries(1, {}, truncation_order)


def one_series() -> PuiseuxSeries:
    return constant(1)


# -- arithmetic ----------------------------------------------------------------

def ps_add(a: PuiseuxSeries, b: PuiseuxSeries) -> PuiseuxSeries:
    e = lcm(a.ramification, b.ramification)
    coeffs = a.rescaled_coeffs(e)
    for k, c in b.rescaled_coeffs(e).items():
        coeffs[k] = coeffs[k] + c if k in coeffs else c
    return PuiseuxSeries(e, coeffs, _order_min(a.truncation_order, b.truncation_order))


def ps_neg(a: PuiseuxSeries) -> PuiseuxSeries:
    return PuiseuxSeries(a.ramification, {k: -c for k, c in a.rescaled_coeffs(a.ramification).items()},
                         a.truncation_order)


def ps_sub(a: PuiseuxSeries, b: PuiseuxSeries) -> PuiseuxSeries:
    return ps_add(a, ps_neg(b))


def ps_scale(a: PuiseuxSeries, factor: Any) -> PuiseuxSeries:
    factor = scalar(factor)
    return PuiseuxSeries(a.ramification, {k: c * factor for k, c in a.rescaled_coeffs(a.ramification).items()},
                         a.truncation_order)


def ps_shift(a: PuiseuxSeries, exponent: Any) -> PuiseuxSeries:
    """Exact multiplication by z^exponent."""
    exponent = Fraction(exponent)
    e = lcm(a.ramification, exponent.denominator)
    offset = int(exponent * e)
    coeffs = {k + offset: c for k, c in a.rescaled_coeffs(e).items()}
    return PuiseuxSeries(e, coeffs, _order_add(a.truncation_order, exponent))


def ps_truncate(a: PuiseuxSeries, order: Order) -> PuiseuxSeries:
    return PuiseuxSeries(a.ramification, a.rescaled_coeffs(a.ramification),
                         _order_min(a.truncation_order, None if order is None else Fraction(order)))


def ps_mul(a: PuiseuxSeries, b: PuiseuxSeries) -> PuiseuxSeries:
    truncation = _order_min(
        _order_add(a.truncation_order, b.valuation),
        _order_add(b.truncation_order, a.valuation),
    )
    e = lcm(a.ramification, b.ramification)
    limit = _key_limit(truncation, e)
    left = sorted(a.rescaled_coeffs(e).items())
    right = sorted(b.rescaled_coeffs(e).items())
    coeffs: Dict[int, Any] = {}
    for ka, ca in left:
        for kb, cb in right:
            k = ka + kb
            if limit is not None and k >= limit:
                break
            coeffs[k] = coeffs[k] + ca * cb if k in coeffs else ca * cb
    return PuiseuxSeries(e, coeffs, truncation)


def ps_pow(a: PuiseuxSeries, k: int) -> PuiseuxSeries:
    if k < 0:
        raise SeriesError(f"ps_pow expects a nonnegative exponent, got {k}")
    result = one_series()
    base = a
    while k:
        if k & 1:
            result = ps_mul(result, base)
        k >>= 1
        if k:
            base = ps_mul(base, base)
    return result


def ps_invert(a: PuiseuxSeries, order: Order = None) -> PuiseuxSeries:
    """Multiplicative inverse.

    A truncated input keeps its relative precision. An exact input whose
    inverse is infinite needs `order`, the truncation order of the result.
    """
    if a.is_zero:
        raise ZeroLeadingCoefficient("Cannot invert a series with no nonzero leading coefficient")
    v, c0 = a.leading_term()
    # a = c0 z^v (1 + u), val(u) > 0
    u = ps_add(ps_shift(ps_scale(a, 1 / c0), -v), constant(-1))
    truncation = None if a.is_exact else a.truncation_order - 2 * v
    if order is not None:
        truncation = _order_min(truncation, Fraction(order))
    if u.is_zero and u.is_exact:
        return PuiseuxSeries.from_terms({-v: 1 / c0}, truncation)
    if truncation is None:
        raise SeriesError("Inverse of an exact non-monomial series needs a truncation order")
    inner_order = truncation + v
    total = constant(1, inner_order)
    term = constant(1, inner_order)
    minus_u = ps_neg(u)
    while True:
        term = ps_truncate(ps_mul(term, minus_u), inner_order)
        if term.is_zero:
            break
        total = ps_add(total, term)
    return ps_scale(ps_shift(total, -v), 1 / c0)


def ps_derive(a: PuiseuxSeries) -> PuiseuxSeries:
    """d/dz."""
    e = a.ramification
    coeffs = {k - e: c * scalar(Fraction(k, e)) for k, c in a.rescaled_coeffs(e).items() if k != 0}
    return PuiseuxSeries(e, coeffs, _order_add(a.truncation_order, Fraction(-1)))


def theta_derive(a: PuiseuxSeries) -> PuiseuxSeries:
    """D = z d/dz."""
    e = a.ramification
    coeffs = {k: c * scalar(Fraction(k, e)) for k, c in a.rescaled_coeffs(e).items() if k != 0}
    return PuiseuxSeries(e, coeffs, a.truncation_order)


def ps_antiderive_theta(a: PuiseuxSeries) -> PuiseuxSeries:
    """Solve z dQ/dz = a with zero integration constant."""
    e = a.ramification
    coeffs = a.rescaled_coeffs(e)
    if 0 in coeffs:
        raise LogarithmicTerm(f"z^0 coefficient {complex(coeffs[0]):.6g} would need a logarithm")
    return PuiseuxSeries(e, {k: c / scalar(Fraction(k, e)) for k, c in coeffs.items()}, a.truncation_order)


def negative_part(a: PuiseuxSeries) -> PuiseuxSeries:
    """Terms of negative exponent, truncated at 0."""
    e = a.ramification
    coeffs = {k: c for k, c in a.rescaled_coeffs(e).items() if k < 0}
    return PuiseuxSeries(e, coeffs, _order_min(a.truncation_order, Fraction(0)))


def max_difference(a: PuiseuxSeries, b: PuiseuxSeries) -> float:
    """Largest coefficient gap over the exponents both series know."""
    diff = ps_sub(a, b)
    return max((scalar_abs(c) for c in diff.terms.values()), default=0.0)


def evaluate_polynomial(coefficients: Iterable[PuiseuxSeries], x: PuiseuxSeries) -> PuiseuxSeries:
    """Horner evaluation of Σ coefficients[k] x^{N-k} (highest degree first)."""
    result = None
    for c in coefficients:
        result = c if result is None else ps_add(ps_mul(result, x), c)
    return result if result is not None else zero_series()
