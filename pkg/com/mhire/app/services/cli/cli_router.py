import argparse
import logging
import sys
from fractions import Fraction
from typing import List, Optional, TextIO

from pydantic import BaseModel, ValidationError

from com.mhire.app.config.config import Config
from com.mhire.app.services.cli.cli import (
    UsageError,
    dump_json,
    load_operator_file,
    parse_operator_text,
    render_text,
    run_canonical,
    run_equivalence,
    run_factors,
    run_monodromy,
    run_selftest,
)
from com.mhire.app.services.cli.cli_schema import COMMANDS, ErrorReport, JobConfig, SelfTestReport
from com.mhire.app.services.operator.airy_operator import AiryOperator
from com.mhire.app.utils.error_utils import AiryEngineError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airy",
        description="Determining factors, formal monodromy and canonical forms of Airy operators",
    )
    parser.add_argument("command", choices=COMMANDS, help="Pipeline to run")
    parser.add_argument("operators", nargs="*", help="Operators in text form, e.g. 'd^2 - x'")
    parser.add_argument("--file", dest="files", action="append", default=[], help="Operator JSON file (repeatable)")
    parser.add_argument("--order", default=None, help="Reduction order beyond the principal level, p/q or integer")
    parser.add_argument("--precision", default=None, help="'double' or 'big:N' (N bits)")
    parser.add_argument("--eps", type=float, default=None, help="Zero tolerance")
    parser.add_argument("--format", choices=("json", "text"), default=None, help="Output format")
    parser.add_argument("--strict", action="store_true", help="Refuse configurations outside the analysed cases")
    parser.add_argument("--replay", action="store_true", help="Replay the gauge steps of the canonical reduction")
    return parser


def job_from_args(args: argparse.Namespace) -> JobConfig:
    config = Config()
    try:
        return JobConfig(
            command=args.command,
            operators=args.operators,
            files=args.files,
            order=args.order,
            precision=args.precision or config.PRECISION,
            eps=args.eps,
            format=args.format or config.OUTPUT_FORMAT,
            strict=args.strict or config.STRICT,
            replay=args.replay,
        )
    except ValidationError as e:
        first = e.errors()[0]
        raise UsageError(f"{'.'.join(str(p) for p in first['loc']) or 'arguments'}: {first['msg']}")


def load_operators(job: JobConfig) -> List[AiryOperator]:
    operators = [parse_operator_text(text) for text in job.operators]
    operators.extend(load_operator_file(path) for path in job.files)
    return operators


def execute(job: JobConfig) -> BaseModel:
    order = None if job.order is None else Fraction(job.order)
    operators = load_operators(job)
    logger.info(f"Running {job.command} on {len(operators)} operator(s)")
    if job.command == "factors":
        return run_factors(operators[0])
    if job.command == "monodromy":
        return run_monodromy(operators[0], order)
    if job.command == "canonical":
        return run_canonical(operators[0], order, replay=job.replay)
    if job.command == "equiv":
        return run_equivalence(operators[0], operators[1])
    return run_selftest()


def _report_error(error: AiryEngineError, code: int, err: TextIO) -> int:
    logger.error(f"{error.error_type}: {error.message}")
    report = ErrorReport(error_type=error.error_type, error_message=error.message, position=error.position)
    err.write(dump_json(report) + "\n")
    return code


def run(job: JobConfig, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    """Run one job; the report goes to `out`, errors to `err`. Returns the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    config = Config()
    previous = (config.EPSILON, config.STRICT)
    try:
        with config.scalar_context(job.precision):
            if job.eps is not None:
                config.EPSILON = job.eps
            config.STRICT = job.strict
            report = execute(job)
    except UsageError as e:
        return _report_error(e, EXIT_USAGE_ERROR, err)
    except AiryEngineError as e:
        return _report_error(e, EXIT_DOMAIN_ERROR, err)
    finally:
        config.EPSILON, config.STRICT = previous

    out.write((render_text(report) if job.format == "text" else dump_json(report)) + "\n")
    if isinstance(report, SelfTestReport) and not report.passed:
        logger.error("Selftest reported failing checks")
        return EXIT_DOMAIN_ERROR
    return EXIT_OK


def run_args(argv: Optional[List[str]] = None, out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    """Parse command-line arguments and run; argparse itself exits with 2 on malformed flags."""
    args = build_parser().parse_args(argv)
    try:
        job = job_from_args(args)
    except UsageError as e:
        return _report_error(e, EXIT_USAGE_ERROR, sys.stderr if err is None else err)
    return run(job, out, err)
