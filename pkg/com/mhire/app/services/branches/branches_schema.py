from typing import List, Optional

from pydantic import BaseModel, Field, field_validator

from com.mhire.app.services.branches.branches import (
    CASE_A,
    CASE_B,
    CASE_BOUNDARY,
    CASE_S,
    DeterminingFactor,
    FactorAnalysis,
    characteristic_multiplicity,
)
from com.mhire.app.services.operator.airy_operator import to_text
from com.mhire.app.services.series.series_schema import SeriesTermModel, series_to_model
from com.mhire.app.utils.number_utils import to_pair


class ComplexModel(BaseModel):
    re: float = Field(..., description="Real part")
    im: float = Field(..., description="Imaginary part")


def complex_model(value) -> ComplexModel:
    re, im = to_pair(value)
    return ComplexModel(re=re, im=im)


class FactorModel(BaseModel):
    branch: int = Field(..., description="root_index of the branch the factor comes from")
    multiplicity: int = Field(..., description="Number of branches sharing this factor")
    members: List[int] = Field(default_factory=list, description="root_index of every branch in the group")
    terms: List[SeriesTermModel] = Field(..., description="Q(z), negative exponents only")

    @field_validator("multiplicity")
    @classmethod
    def validate_multiplicity(cls, v):
        if v < 1:
            raise ValueError("multiplicity must be positive")
        return v


class FactorsReport(BaseModel):
    operator: str = Field(..., description="Operator in text form")
    n: int
    m: int
    case: str = Field(..., description="A, B, S or boundary")
    flagged: bool = Field(False, description="True outside the three analysed cases")
    K: int = Field(..., description="Branch truncation index")
    characteristic_index: int
    characteristic_multiplicity: int
    sensitive_coefficients: List[str]
    leading_coefficients: List[ComplexModel]
    factors: List[FactorModel]
    closed_form_drift: Optional[float] = Field(None, description="Largest gap between closed-form and general factors")
    recovered_coefficients: Optional[List[ComplexModel]] = Field(
        None, description="a_{n-1}..a_{n-(q+1)} recovered from system (S)"
    )
    notes: List[str] = Field(default_factory=list)

    @field_validator("case")
    @classmethod
    def validate_case(cls, v):
        if v not in {CASE_A, CASE_B, CASE_S, CASE_BOUNDARY}:
            raise ValueError(f"Unknown case: {v}")
        return v


def factor_to_model(factor: DeterminingFactor) -> FactorModel:
    return FactorModel(
        branch=factor.source_branch,
        multiplicity=factor.multiplicity,
        members=list(factor.members),
        terms=series_to_model(factor.series).terms,
    )


def factors_report(analysis: FactorAnalysis) -> FactorsReport:
    L = analysis.operator
    return FactorsReport(
        operator=to_text(L),
        n=L.n,
        m=L.m,
        case=analysis.case,
        flagged=analysis.flagged,
        K=analysis.K,
        characteristic_index=analysis.characteristic_index,
        characteristic_multiplicity=characteristic_multiplicity(analysis.factors),
        sensitive_coefficients=analysis.sensitive,
        leading_coefficients=[complex_model(b.alpha[0]) for b in analysis.branches],
        factors=[factor_to_model(f) for f in analysis.factors],
        closed_form_drift=analysis.closed_form_drift,
        recovered_coefficients=None if analysis.recovered is None else [complex_model(x) for x in analysis.recovered],
        notes=analysis.notes,
    )
