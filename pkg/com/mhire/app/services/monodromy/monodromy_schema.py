from typing import List, Optional

from pydantic import BaseModel, Field, field_validator

from com.mhire.app.services.branches.branches_schema import ComplexModel, complex_model
from com.mhire.app.services.monodromy.monodromy import MonodromyData, SolutionShape
from com.mhire.app.services.operator.airy_operator import to_text
from com.mhire.app.services.series.series_schema import SeriesTermModel, series_to_model
from com.mhire.app.utils.number_utils import format_rational, parse_rational


class BranchMonodromyModel(BaseModel):
    branch: int = Field(..., description="root_index of the branch")
    factor: List[SeriesTermModel] = Field(..., description="Determining factor Q(z) of the branch")
    lam: str = Field(..., alias="lambda", description="Exponent from the indicial equation, 'p/q'")
    eigenvalue: ComplexModel = Field(..., description="exp(2 i pi lambda)")
    log_blocks: str = Field(..., description="Logarithmic block structure; 'undetermined' when not settled")

    model_config = {"populate_by_name": True}

    @field_validator("lam")
    @classmethod
    def validate_lambda(cls, v):
        return format_rational(parse_rational(v))


class MonodromyReport(BaseModel):
    operator: str
    n: int
    m: int
    lam: str = Field(..., alias="lambda", description="(1-n)(n+m)/(2n), 'p/q'")
    eigenvalue: ComplexModel = Field(..., description="(-1)^(m+n-1) exp(i pi m/n)")
    per_branch: List[BranchMonodromyModel]
    canonical_eigenvalues: Optional[List[ComplexModel]] = Field(
        None, description="Eigenvalues of exp(2 i pi C) from the canonical model"
    )
    notes: List[str] = Field(default_factory=list)

    model_config = {"populate_by_name": True}

    @field_validator("lam")
    @classmethod
    def validate_lambda(cls, v):
        return format_rational(parse_rational(v))


def shape_to_model(shape: SolutionShape) -> BranchMonodromyModel:
    return BranchMonodromyModel(
        branch=shape.root_index,
        factor=series_to_model(shape.factor).terms,
        lam=format_rational(shape.lam),
        eigenvalue=complex_model(shape.eigenvalue),
        log_blocks=shape.log_blocks,
    )


def monodromy_report(data: MonodromyData, canonical_eigenvalues: Optional[list] = None) -> MonodromyReport:
    L = data.operator
    return MonodromyReport(
        operator=to_text(L),
        n=L.n,
        m=L.m,
        lam=format_rational(data.lam),
        eigenvalue=complex_model(data.eigenvalue),
        per_branch=[shape_to_model(s) for s in data.per_branch],
        canonical_eigenvalues=None
        if canonical_eigenvalues is None
        else [complex_model(v) for v in canonical_eigenvalues],
        notes=data.notes,
    )
