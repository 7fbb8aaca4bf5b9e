from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from com.mhire.app.config.config import DOUBLE_PRECISION_BITS
from com.mhire.app.utils.number_utils import RationalFormatError, format_rational, parse_rational

COMMANDS = ("factors", "monodromy", "canonical", "equiv", "selftest")
ORDER_COMMANDS = ("monodromy", "canonical")


class JobConfig(BaseModel):
    """One CLI invocation after argument parsing."""

    command: Literal["factors", "monodromy", "canonical", "equiv", "selftest"] = Field(
        ..., description="Pipeline to run"
    )
    operators: List[str] = Field(default_factory=list, description="Operators in text form, e.g. 'd^2 - x'")
    files: List[str] = Field(default_factory=list, description="Paths of operator JSON files")
    order: Optional[str] = Field(None, description="Reduction order override, 'p/q' or integer")
    precision: str = Field("double", description="'double' or 'big:N'")
    eps: Optional[float] = Field(None, gt=0, description="Zero tolerance override")
    format: Literal["json", "text"] = Field("json", description="Output format")
    strict: bool = Field(False, description="Refuse configurations outside the analysed cases")
    replay: bool = Field(False, description="Replay the gauge steps of the canonical reduction")

    @field_validator("order")
    @classmethod
    def validate_order(cls, v):
        if v is None:
            return v
        try:
            value = parse_rational(str(v))
        except RationalFormatError as e:
            raise ValueError(e.message)
        if value <= 0:
            raise ValueError("order must be positive")
        return format_rational(value)

    @field_validator("precision")
    @classmethod
    def validate_precision(cls, v):
        v = v.strip().lower()
        if v == "double":
            return v
        if v.startswith("big:") and v[4:].isdigit():
            if int(v[4:]) < DOUBLE_PRECISION_BITS:
                raise ValueError(f"big precision needs at least {DOUBLE_PRECISION_BITS} bits")
            return v
        raise ValueError("precision must be 'double' or 'big:N'")

    @model_validator(mode="after")
    def validate_inputs(self):
        count = len(self.operators) + len(self.files)
        if self.command == "selftest":
            if count:
                raise ValueError("selftest takes no operator")
        elif self.command == "equiv":
            if count != 2:
                raise ValueError(f"equiv needs exactly two operators, got {count}")
        elif count != 1:
            raise ValueError(f"{self.command} needs exactly one operator, got {count}")
        if self.order is not None and self.command not in ORDER_COMMANDS:
            raise ValueError(f"--order applies to {' and '.join(ORDER_COMMANDS)} only, not {self.command}")
        return self


class ErrorReport(BaseModel):
    error_type: str = Field(..., description="Exception class name")
    error_message: str
    position: Optional[int] = Field(None, description="0-based character offset for parse errors")


class SelfTestCheck(BaseModel):
    name: str
    passed: bool
    detail: Optional[str] = None


class SelfTestCase(BaseModel):
    operator: str
    case: str
    checks: List[SelfTestCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class SelfTestReport(BaseModel):
    cases: List[SelfTestCase]
    passed: bool = Field(..., description="True when every check of every case passed")
