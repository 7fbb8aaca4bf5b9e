from fractions import Fraction
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator

from com.mhire.app.services.series.series import PuiseuxSeries
from com.mhire.app.utils.number_utils import format_rational, parse_rational, to_pair


def _check_rational_text(value: Optional[str]) -> Optional[str]:
    if value is None:
        return value
    return format_rational(parse_rational(value))


class SeriesTermModel(BaseModel):
    exponent: str = Field(..., description="Exact exponent as reduced 'p/q' (or 'p')")
    re: float = Field(..., description="Real part of the coefficient")
    im: float = Field(..., description="Imaginary part of the coefficient")

    @field_validator("exponent")
    @classmethod
    def validate_exponent(cls, v):
        return _check_rational_text(v)


class SeriesModel(BaseModel):
    terms: List[SeriesTermModel] = Field(default_factory=list, description="Stored terms, ascending exponent")
    truncation_order: Optional[str] = Field(None, description="Exponents at or beyond this are unknown; null when exact")

    @field_validator("truncation_order")
    @classmethod
    def validate_truncation(cls, v):
        return _check_rational_text(v)


def series_to_model(series: PuiseuxSeries) -> SeriesModel:
    terms = []
    for exponent, coefficient in series.terms.items():
        re, im = to_pair(coefficient)
        terms.append(SeriesTermModel(exponent=format_rational(exponent), re=re, im=im))
    truncation = series.truncation_order
    return SeriesModel(terms=terms, truncation_order=None if truncation is None else format_rational(truncation))


def series_from_model(model: SeriesModel) -> PuiseuxSeries:
    terms = {Fraction(parse_rational(t.exponent)): complex(t.re, t.im) for t in model.terms}
    truncation = None if model.truncation_order is None else parse_rational(model.truncation_order)
    return PuiseuxSeries.from_terms(terms, truncation)
