from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from com.mhire.app.services.branches.branches_schema import ComplexModel, complex_model
from com.mhire.app.services.operator.airy_operator import to_text
from com.mhire.app.services.reduction.equivalence import (
    VERDICT_EQUIVALENT,
    VERDICT_NECESSARY_ONLY,
    VERDICT_NOT_EQUIVALENT,
    EquivalenceCheck,
)
from com.mhire.app.services.reduction.reduction import (
    STEP_CONSTANT,
    STEP_RAMIFIED,
    STEP_SHEAR,
    STEP_UNIPOTENT,
    CanonicalModel,
    GaugeStep,
    canonical_factors,
    principal_invariant,
)
from com.mhire.app.services.series.series_schema import SeriesTermModel, series_to_model
from com.mhire.app.utils.number_utils import format_rational, parse_rational

STEP_KINDS = {STEP_SHEAR, STEP_UNIPOTENT, STEP_RAMIFIED, STEP_CONSTANT}
VERDICTS = {VERDICT_EQUIVALENT, VERDICT_NOT_EQUIVALENT, VERDICT_NECESSARY_ONLY}

Matrix = List[List[ComplexModel]]


def matrix_model(matrix: np.ndarray) -> Matrix:
    return [[complex_model(x) for x in row] for row in matrix.tolist()]


class GaugeStepModel(BaseModel):
    kind: str = Field(..., description="shear, unipotent, ramified or constant")
    exponent: str = Field(..., description="s for a shear, k for (I + z^k T), 0 for a constant gauge")
    matrix: Matrix = Field(..., description="H for a shear, T for a unipotent step, U for a constant gauge")

    @field_validator("kind")
    @classmethod
    def validate_kind(cls, v):
        if v not in STEP_KINDS:
            raise ValueError(f"Unknown gauge step kind: {v}")
        return v

    @field_validator("exponent")
    @classmethod
    def validate_exponent(cls, v):
        return format_rational(parse_rational(v))


class CanonicalReport(BaseModel):
    operator: str
    n: int
    m: int
    case: str
    flagged: bool = Field(False, description="True outside m = nq + s with 0 < s < n")
    order: str = Field(..., description="Reduction offset beyond the principal invariant")
    principal_invariant: str = Field(..., description="Least level, -m/n - 2")
    lam: str = Field(..., alias="lambda", description="Residue eigenvalue (1-n)(n+m)/(2n)")
    levels: List[str] = Field(..., description="Ascending exponents < -1 of the canonical model")
    D: List[Matrix] = Field(..., description="Level matrices, one per level")
    C: Matrix = Field(..., description="Residue matrix")
    raw_C: Matrix = Field(..., description="Traceless residue before the scalar gauge z^lambda")
    diagonal: List[List[SeriesTermModel]] = Field(..., description="Diagonal entries q_i(z) up to the residue")
    factors: List[List[SeriesTermModel]] = Field(..., description="Antiderivatives of the level parts of q_i")
    gauge_steps: List[GaugeStepModel]
    notes: List[str] = Field(default_factory=list)

    model_config = {"populate_by_name": True}

    @field_validator("levels")
    @classmethod
    def validate_levels(cls, v):
        values = [parse_rational(x) for x in v]
        if values != sorted(values):
            raise ValueError("levels must be ascending")
        return [format_rational(x) for x in values]


class CoefficientConditionModel(BaseModel):
    name: str
    holds: bool


class EquivalenceReport(BaseModel):
    first: str
    second: str
    same_bidegree: bool
    case: Optional[str] = None
    coefficient_conditions: List[CoefficientConditionModel] = Field(default_factory=list)
    factors_match: Optional[bool] = Field(None, description="Determining-factor multisets agree; null when not reached")
    canonical_orbit_match: Optional[bool] = Field(None, description="Canonical models agree; null when not reached")
    verdict: str
    notes: List[str] = Field(default_factory=list)

    @field_validator("verdict")
    @classmethod
    def validate_verdict(cls, v):
        if v not in VERDICTS:
            raise ValueError(f"Unknown verdict: {v}")
        return v


def step_to_model(step: GaugeStep) -> GaugeStepModel:
    return GaugeStepModel(kind=step.kind, exponent=format_rational(step.exponent), matrix=matrix_model(step.matrix))


def _drop_above(terms: List[SeriesTermModel], limit) -> List[SeriesTermModel]:
    return [t for t in terms if parse_rational(t.exponent) <= limit]


def canonical_report(model: CanonicalModel, steps: Sequence[GaugeStep]) -> CanonicalReport:
    L = model.operator
    return CanonicalReport(
        operator=to_text(L),
        n=L.n,
        m=L.m,
        case=model.case,
        flagged=model.flagged,
        order=format_rational(model.order),
        principal_invariant=format_rational(principal_invariant(L)),
        lam=format_rational(model.lam),
        levels=[format_rational(e) for e in model.levels],
        D=[matrix_model(D) for D in model.level_matrices],
        C=matrix_model(model.residue),
        raw_C=matrix_model(model.raw_residue),
        diagonal=[_drop_above(series_to_model(q).terms, -1) for q in model.diagonal_series],
        factors=[series_to_model(f).terms for f in canonical_factors(model)],
        gauge_steps=[step_to_model(s) for s in steps],
        notes=model.notes,
    )


def _conditions(pairs: Sequence[Tuple[str, bool]]) -> List[CoefficientConditionModel]:
    return [CoefficientConditionModel(name=name, holds=holds) for name, holds in pairs]


def equivalence_report(check: EquivalenceCheck) -> EquivalenceReport:
    return EquivalenceReport(
        first=to_text(check.first),
        second=to_text(check.second),
        same_bidegree=check.same_bidegree,
        case=check.case,
        coefficient_conditions=_conditions(check.coefficient_conditions),
        factors_match=check.factors_match,
        canonical_orbit_match=check.canonical_orbit_match,
        verdict=check.verdict,
        notes=check.notes,
    )
