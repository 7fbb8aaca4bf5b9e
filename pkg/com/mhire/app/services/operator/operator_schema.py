from typing import List

from pydantic import BaseModel, Field, field_validator

from com.mhire.app.services.operator.airy_operator import AiryOperator, validate
from com.mhire.app.utils.number_utils import format_rational, parse_rational


class OperatorModel(BaseModel):
    """JSON form of an Airy operator: ascending coefficient lists as "p/q" strings."""

    n: int = Field(..., description="Degree of P_n (order of the operator)")
    m: int = Field(..., description="Degree of Q_m")
    a: List[str] = Field(..., description="a_1..a_n, ascending, a_n = 1")
    b: List[str] = Field(..., description="b_0..b_m, ascending, b_m != 0")

    @field_validator("a", "b", mode="before")
    @classmethod
    def normalize_coefficients(cls, v):
        if not isinstance(v, list):
            raise ValueError("coefficients must be a list")
        return [format_rational(parse_rational(x if not isinstance(x, float) else str(x))) for x in v]

    def to_operator(self) -> AiryOperator:
        return validate(self.n, self.m, self.a, self.b)


def operator_to_model(L: AiryOperator) -> OperatorModel:
    return OperatorModel(
        n=L.n,
        m=L.m,
        a=[format_rational(x) for x in L.a],
        b=[format_rational(x) for x in L.b],
    )
