import cmath
import math
import logging
from fractions import Fraction
from typing import Any, List, Optional, Tuple, Union

import mpmath

from com.mhire.app.config.config import Config
from com.mhire.app.utils.error_utils import AiryEngineError

logger = logging.getLogger(__name__)

RationalLike = Union[int, Fraction, str]


class RationalFormatError(AiryEngineError):
    pass


def parse_rational(value: RationalLike) -> Fraction:
    """Accept 3, "3", "-3/2" or a Fraction; always returns a reduced Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise RationalFormatError(f"Not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise RationalFormatError(f"Not a rational: {value!r}")
    raise RationalFormatError(f"Not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def lcm(*values: int) -> int:
    result = 1
    for v in values:
        result = result * v // math.gcd(result, v)
    return result


def scalar(value: Any) -> Any:
    """Convert a Fraction, int, float or complex to a working-precision scalar."""
    if Config().is_big_precision:
        if isinstance(value, mpmath.mpc):
            return value
        if isinstance(value, Fraction):
            return mpmath.mpc(mpmath.mpf(value.numerator) / value.denominator)
        return mpmath.mpc(value)
    if isinstance(value, Fraction):
        return complex(value.numerator / value.denominator)
    if isinstance(value, mpmath.mpc) or isinstance(value, mpmath.mpf):
        return complex(value)
    return complex(value)


def zero() -> Any:
    return scalar(0)


def one() -> Any:
    return scalar(1)


def scalar_abs(value: Any) -> float:
    return float(abs(value))


def is_zero(value: Any, eps: Optional[float] = None) -> bool:
    if eps is None:
        eps = Config().EPSILON
    return scalar_abs(value) <= eps


def to_pair(value: Any) -> Tuple[float, float]:
    """(re, im) as plain floats, with -0.0 folded to 0.0 for stable output."""
    c = complex(value)
    return (c.real + 0.0, c.imag + 0.0)


def exp_i_pi(fraction: Fraction) -> Any:
    """exp(iπf) for an exact rational f."""
    fraction = Fraction(fraction)
    if Config().is_big_precision:
        return mpmath.expjpi(mpmath.mpf(fraction.numerator) / fraction.denominator)
    # quarter turns are exact
    if (2 * fraction).denominator == 1:
        return [1, 1j, -1, -1j][int(2 * fraction) % 4] + 0j
    return cmath.exp(1j * math.pi * fraction.numerator / fraction.denominator)


def principal_argument_fraction(angle: Fraction) -> Fraction:
    """Fold an angle given in units of π into (-1, 1]."""
    angle = Fraction(angle) % 2
    if angle > 1:
        angle -= 2
    return angle


def nth_roots_of_rational(value: Fraction, n: int) -> List[Tuple[Fraction, Any]]:
    """All n-th roots of a nonzero rational, ascending by principal argument.

    Returns (argument / π, root) pairs; the arguments are exact so the order
    never depends on rounding.
    """
    value = Fraction(value)
    if value == 0:
        raise ValueError("n-th roots of zero are not simple")
    base_angle = Fraction(0) if value > 0 else Fraction(1)
    magnitude = abs(value)
    if Config().is_big_precision:
        radius = mpmath.root(mpmath.mpf(magnitude.numerator) / magnitude.denominator, n)
    else:
        radius = (magnitude.numerator / magnitude.denominator) ** (1.0 / n)
    roots = []
    for k in range(n):
        angle = principal_argument_fraction((base_angle + 2 * k) / Fraction(n))
        roots.append((angle, radius * exp_i_pi(angle)))
    roots.sort(key=lambda item: item[0])
    return roots


def round_to_rational(value: Any, max_denominator: int, tolerance: Optional[float] = None) -> Optional[Fraction]:
    """Nearest rational with bounded denominator, or None if farther than tolerance."""
    if tolerance is None:
        tolerance = Config().EPSILON
    c = complex(value)
    if abs(c.imag) > tolerance:
        return None
    candidate = Fraction(c.real).limit_denominator(max_denominator)
    if abs(float(candidate) - c.real) > tolerance:
        return None
    return candidate
