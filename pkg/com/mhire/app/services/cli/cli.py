import json
import logging
import re
from collections import defaultdict
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from pydantic import BaseModel, ValidationError

from com.mhire.app.config.config import Config
from com.mhire.app.services.branches.branches import branch_case, branch_expand, determining_factors, symbol_residual
from com.mhire.app.services.branches.branches_schema import FactorsReport, factors_report
from com.mhire.app.services.cli.cli_schema import SelfTestCase, SelfTestCheck, SelfTestReport
from com.mhire.app.services.monodromy.monodromy import compute_monodromy, monodromy_from_canonical
from com.mhire.app.services.monodromy.monodromy_schema import MonodromyReport, monodromy_report
from com.mhire.app.services.operator.airy_operator import AiryOperator, newton_slope, to_text, validate
from com.mhire.app.services.operator.operator_schema import OperatorModel
from com.mhire.app.services.reduction.equivalence import (
    VERDICT_NOT_EQUIVALENT,
    expanded_factors,
    formal_equivalence,
    series_multisets_match,
)
from com.mhire.app.services.reduction.reduction import (
    CaseNotImplemented,
    ReductionError,
    bv_reduce,
    canonical_factors,
    check_canonical,
    companion_connection,
    principal_invariant,
    replay_gauge,
)
from com.mhire.app.services.reduction.reduction_schema import (
    CanonicalReport,
    EquivalenceReport,
    canonical_report,
    equivalence_report,
)
from com.mhire.app.services.series.series_schema import SeriesTermModel
from com.mhire.app.utils.error_utils import AiryEngineError
from com.mhire.app.utils.number_utils import format_rational, parse_rational

logger = logging.getLogger(__name__)

SELFTEST_BATTERY = (
    "d^2 - x",
    "d - x",
    "d - x^3 + 2*x",
    "d^2 - x^4 - x^3 + 2",
    "d^2 + d - x^3 - x",
    "d^3 + d^2 - x^2 - 1",
    "d^4 - x^2 + x",
)

_SPACE = re.compile(r"\s*")
_NUMBER = re.compile(r"\d+(?:/\d+|\.\d+)?")
_VARIABLE = re.compile(r"[dx]")
_POWER = re.compile(r"\^\s*(\d+)")


class ParseError(AiryEngineError):
    pass


class UsageError(AiryEngineError):
    pass


# -- input ----------------------------------------------------------------------

def _skip(text: str, pos: int) -> int:
    return _SPACE.match(text, pos).end()


def _number(token: str, pos: int) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"Invalid coefficient {token!r}", pos)


def parse_operator_text(text: str) -> AiryOperator:
    """Parse sums of terms c*d^k and c*x^j (bare numbers are x^0 terms) into an operator.

    "+ c x^j" contributes b_j = -c; repeated terms add up.
    """
    derivatives: Dict[int, Fraction] = defaultdict(Fraction)
    powers: Dict[int, Fraction] = defaultdict(Fraction)
    pos = _skip(text, 0)
    if pos == len(text):
        raise ParseError("Empty operator text", pos)

    first = True
    while pos < len(text):
        sign = 1
        if text[pos] in "+-":
            sign = -1 if text[pos] == "-" else 1
            pos = _skip(text, pos + 1)
        elif not first:
            raise ParseError(f"Expected '+' or '-' at position {pos}", pos)
        start = pos

        coefficient = Fraction(1)
        number = _NUMBER.match(text, pos)
        if number:
            coefficient = _number(number.group(), pos)
            pos = _skip(text, number.end())
            if pos < len(text) and text[pos] == "*":
                pos = _skip(text, pos + 1)
                if not _VARIABLE.match(text, pos):
                    raise ParseError(f"Expected 'd' or 'x' after '*' at position {pos}", pos)

        variable = _VARIABLE.match(text, pos)
        if variable is None:
            if number is None:
                raise ParseError(f"Expected a term at position {pos}", pos)
            powers[0] += sign * coefficient
        else:
            pos = _skip(text, variable.end())
            exponent = 1
            power = _POWER.match(text, pos)
            if power:
                exponent = int(power.group(1))
                pos = _skip(text, power.end())
            if variable.group() == "d":
                if exponent == 0:
                    raise ParseError("d^0 is not a derivative; write a constant as a plain number", start)
                derivatives[exponent] += sign * coefficient
            else:
                powers[exponent] += sign * coefficient
        first = False

    n = max((k for k, c in derivatives.items() if c), default=0)
    m = max((j for j, c in powers.items() if c), default=0)
    a = [derivatives.get(i, Fraction(0)) for i in range(1, n + 1)]
    b = [-powers.get(j, Fraction(0)) for j in range(m + 1)]
    return validate(n, m, a, b)


def load_operator_file(path: str) -> AiryOperator:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = f.read()
    except OSError as e:
        raise UsageError(f"Cannot read operator file {path}: {e}")
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", e.pos)
    try:
        model = OperatorModel.model_validate(payload)
    except ValidationError as e:
        raise ParseError(f"{path}: {e.errors()[0]['msg']}")
    return model.to_operator()


# -- commands -------------------------------------------------------------------

def run_factors(L: AiryOperator) -> FactorsReport:
    return factors_report(determining_factors(L))


def run_monodromy(L: AiryOperator, order: Optional[Fraction] = None) -> MonodromyReport:
    data = compute_monodromy(L)
    try:
        model, _ = bv_reduce(L, order=order)
    except CaseNotImplemented as e:
        report = monodromy_report(data)
        report.notes.append(f"canonical model skipped: {e.message}")
        return report
    return monodromy_report(data, monodromy_from_canonical(model))


def run_canonical(L: AiryOperator, order: Optional[Fraction] = None, replay: bool = False) -> CanonicalReport:
    model, steps = bv_reduce(L, order=order)
    check_canonical(model)
    report = canonical_report(model, steps)
    if replay:
        replayed = replay_gauge(companion_connection(L), steps, model.truncation_order)
        gap = replayed.max_difference(model.connection)
        if gap > Config().CHECK_TOLERANCE:
            raise ReductionError(f"Gauge replay drifts from the canonical connection by {gap:.3g}")
        report.notes.append("gauge replay reproduces the canonical connection")
    return report


def run_equivalence(L1: AiryOperator, L2: AiryOperator) -> EquivalenceReport:
    return equivalence_report(formal_equivalence(L1, L2))


# -- selftest -------------------------------------------------------------------

Check = Callable[[AiryOperator], Tuple[bool, Optional[str]]]


def _check_slope(L: AiryOperator) -> Tuple[bool, Optional[str]]:
    slope = newton_slope(L)
    return slope == Fraction(L.n + L.m, L.n), f"slope {format_rational(slope)}"


def _check_residual(L: AiryOperator) -> Tuple[bool, Optional[str]]:
    K = L.n + L.m
    worst = 0.0
    for i in range(L.n):
        residual = symbol_residual(L, branch_expand(L, i, K))
        worst = max([worst] + [float(abs(c)) for c in residual.terms.values()])
    return worst <= 1e-6, f"largest residual {worst:.3g}"


def _check_monodromy(L: AiryOperator) -> Tuple[bool, Optional[str]]:
    data = compute_monodromy(L)
    return True, f"lambda {format_rational(data.lam)}"


def _check_canonical(L: AiryOperator) -> Tuple[bool, Optional[str]]:
    model, _ = bv_reduce(L, strict=False)
    check_canonical(model)
    least = model.levels[0] if model.levels else None
    return least == principal_invariant(L), f"least level {None if least is None else format_rational(least)}"


def _check_canonical_factors(L: AiryOperator) -> Tuple[bool, Optional[str]]:
    model, _ = bv_reduce(L, strict=False)
    return series_multisets_match(canonical_factors(model), expanded_factors(L), 1e-6), None


def _check_replay(L: AiryOperator) -> Tuple[bool, Optional[str]]:
    model, steps = bv_reduce(L, strict=False)
    gap = replay_gauge(companion_connection(L), steps, model.truncation_order).max_difference(model.connection)
    return gap <= 1e-8, f"gap {gap:.3g}"


def _check_reflexive(L: AiryOperator) -> Tuple[bool, Optional[str]]:
    check = formal_equivalence(L, L, strict=False)
    return check.verdict != VERDICT_NOT_EQUIVALENT, check.verdict


SELFTEST_CHECKS: Tuple[Tuple[str, Check], ...] = (
    ("newton_slope", _check_slope),
    ("residual", _check_residual),
    ("monodromy", _check_monodromy),
    ("canonical", _check_canonical),
    ("canonical_factors", _check_canonical_factors),
    ("gauge_replay", _check_replay),
    ("reflexive_equivalence", _check_reflexive),
)


def _run_check(name: str, check: Check, L: AiryOperator) -> SelfTestCheck:
    try:
        passed, detail = check(L)
    except AiryEngineError as e:
        logger.warning(f"Selftest check {name} raised {e.error_type} on {to_text(L)}")
        return SelfTestCheck(name=name, passed=False, detail=f"{e.error_type}: {e.message}")
    return SelfTestCheck(name=name, passed=bool(passed), detail=detail)


def run_selftest(battery=SELFTEST_BATTERY) -> SelfTestReport:
    cases = []
    for text in battery:
        L = parse_operator_text(text)
        checks = [_run_check(name, check, L) for name, check in SELFTEST_CHECKS]
        cases.append(SelfTestCase(operator=to_text(L), case=branch_case(L), checks=checks))
    passed = all(case.passed for case in cases)
    logger.info(f"Selftest over {len(cases)} operators: {'passed' if passed else 'failed'}")
    return SelfTestReport(cases=cases, passed=passed)


# -- output ---------------------------------------------------------------------

def dump_json(report: BaseModel) -> str:
    return json.dumps(report.model_dump(mode="json", by_alias=True), sort_keys=True, indent=2)


def _format_number(re_part: float, im_part: float) -> str:
    if abs(im_part) <= 1e-12:
        return f"{re_part:.12g}"
    if abs(re_part) <= 1e-12:
        return f"{im_part:.12g}i"
    return f"({re_part:.12g}{im_part:+.12g}i)"


def _format_terms(terms: List[SeriesTermModel], variable: str, flip: bool = False) -> str:
    if not terms:
        return "0"
    parts = []
    for t in terms:
        exponent = parse_rational(t.exponent)
        exponent = -exponent if flip else exponent
        parts.append(f"{_format_number(t.re, t.im)} {variable}^({format_rational(exponent)})")
    return " + ".join(parts)


def _render_factors(report: FactorsReport) -> List[str]:
    lines = [
        f"operator: {report.operator}",
        f"bidegree: ({report.n}, {report.m})  case: {report.case}{'  [flagged]' if report.flagged else ''}",
        f"sensitive coefficients: {', '.join(report.sensitive_coefficients) or 'all'}",
    ]
    for i, factor in enumerate(report.factors):
        lines.append(f"Q_{i}(z) = {_format_terms(factor.terms, 'z')}  (multiplicity {factor.multiplicity})")
        lines.append(f"Q_{i}(x) = {_format_terms(list(reversed(factor.terms)), 'x', flip=True)}")
    return lines


def _render_monodromy(report: MonodromyReport) -> List[str]:
    lines = [
        f"operator: {report.operator}",
        f"lambda: {report.lam}",
        f"eigenvalue: {_format_number(report.eigenvalue.re, report.eigenvalue.im)}",
    ]
    for branch in report.per_branch:
        lines.append(f"branch {branch.branch}: Q(z) = {_format_terms(branch.factor, 'z')}")
    if report.canonical_eigenvalues is not None:
        values = ", ".join(_format_number(v.re, v.im) for v in report.canonical_eigenvalues)
        lines.append(f"exp(2 i pi C) eigenvalues: {values}")
    return lines


def _render_canonical(report: CanonicalReport) -> List[str]:
    lines = [
        f"operator: {report.operator}",
        f"case: {report.case}{'  [flagged]' if report.flagged else ''}",
        f"levels: {', '.join(report.levels)}",
        f"lambda: {report.lam}",
        f"residue before z^lambda: {', '.join(_format_number(row[i].re, row[i].im) for i, row in enumerate(report.raw_C))}",
        f"gauge steps: {', '.join(f'{s.kind}({s.exponent})' for s in report.gauge_steps)}",
    ]
    for i, factor in enumerate(report.factors):
        lines.append(f"int q_{i} dz = {_format_terms(factor, 'z')}")
    return lines


def _render_equivalence(report: EquivalenceReport) -> List[str]:
    lines = [f"first: {report.first}", f"second: {report.second}", f"same bidegree: {report.same_bidegree}"]
    if report.case is not None:
        lines.append(f"case: {report.case}")
    for condition in report.coefficient_conditions:
        lines.append(f"  {condition.name} equal: {condition.holds}")
    lines.append(f"factors match: {report.factors_match}")
    lines.append(f"canonical models match: {report.canonical_orbit_match}")
    lines.append(f"verdict: {report.verdict}")
    return lines


def _render_selftest(report: SelfTestReport) -> List[str]:
    lines = []
    for case in report.cases:
        lines.append(f"{case.operator}  [{case.case}]")
        for check in case.checks:
            status = "PASS" if check.passed else "FAIL"
            detail = f"  {check.detail}" if check.detail else ""
            lines.append(f"  {status}  {check.name}{detail}")
    lines.append("all checks passed" if report.passed else "some checks failed")
    return lines


_RENDERERS = {
    FactorsReport: _render_factors,
    MonodromyReport: _render_monodromy,
    CanonicalReport: _render_canonical,
    EquivalenceReport: _render_equivalence,
    SelfTestReport: _render_selftest,
}


def render_text(report: BaseModel) -> str:
    lines = _RENDERERS[type(report)](report)
    lines.extend(f"note: {note}" for note in getattr(report, "notes", []))
    return "\n".join(lines)
