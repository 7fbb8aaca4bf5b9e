import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from com.mhire.app.config.config import Config
from com.mhire.app.services.operator.airy_operator import AiryOperator, characteristic_index, newton_slope, symbol
from com.mhire.app.services.series.series import (
    PuiseuxSeries,
    negative_part,
    ps_antiderive_theta,
    ps_sub,
)
from com.mhire.app.utils.error_utils import AiryEngineError
from com.mhire.app.utils.number_utils import nth_roots_of_rational, scalar, scalar_abs

logger = logging.getLogger(__name__)

CASE_A = "A"
CASE_B = "B"
CASE_S = "S"
CASE_BOUNDARY = "boundary"


class BranchError(AiryEngineError):
    pass


class NonSimpleLinearization(BranchError):
    pass


class WrongCase(BranchError):
    pass


class SingularSystem(BranchError):
    pass


class ClosedFormMismatch(BranchError):
    pass


class RecoveryMismatch(BranchError):
    pass


@dataclass(frozen=True)
class Branch:
    """ξ = Σ_{k≤K} α_k z^{(k−n−m)/n}, one unbounded root of the symbol."""

    n: int
    m: int
    root_index: int
    alpha: Tuple[Any, ...]

    @property
    def K(self) -> int:
        return len(self.alpha) - 1

    @property
    def truncation_order(self) -> Fraction:
        return Fraction(self.K + 1 - self.n - self.m, self.n)

    def series(self) -> PuiseuxSeries:
        return alpha_series(self.alpha, self.n, self.m)


@dataclass(frozen=True)
class BetaTable:
    """β_{j,k} = [t^j] (Σ α_s t^s)^k for j ≤ K, k ≤ n."""

    values: Dict[Tuple[int, int], Any]
    K: int
    n: int

    def beta(self, j: int, k: int) -> Any:
        if j < 0 or j > self.K or k < 0 or k > self.n:
            raise BranchError(f"beta({j}, {k}) outside the table (K={self.K}, n={self.n})")
        return self.values[(j, k)]


@dataclass(frozen=True)
class DeterminingFactor:
    series: PuiseuxSeries
    multiplicity: int
    source_branch: int
    members: Tuple[int, ...] = ()


@dataclass
class FactorAnalysis:
    operator: AiryOperator
    case: str
    flagged: bool
    K: int
    branches: List[Branch]
    factors: List[DeterminingFactor]
    characteristic_index: int
    sensitive: List[str]
    closed_form_drift: Optional[float] = None
    recovered: Optional[List[Any]] = None
    notes: List[str] = field(default_factory=list)


def alpha_series(alpha: Sequence[Any], n: int, m: int) -> PuiseuxSeries:
    K = len(alpha) - 1
    terms = {Fraction(k - n - m, n): a for k, a in enumerate(alpha)}
    return PuiseuxSeries.from_terms(terms, Fraction(K + 1 - n - m, n))


def branch_case(L: AiryOperator) -> str:
    n, m = L.n, L.m
    if m % n == 0:
        return CASE_A
    if m > n:
        return CASE_B
    if n % m != 0:
        return CASE_S
    return CASE_BOUNDARY


def sensitive_coefficients(L: AiryOperator) -> List[str]:
    """Coefficients the determining factors can depend on, per case."""
    n, m = L.n, L.m
    case = branch_case(L)
    if case == CASE_A:
        q = m // n
        return [f"a_{n - 1}"] + [f"b_{m - s}" for s in range(q + 1)]
    if case == CASE_B:
        q = m // n
        return [f"a_{n - 1}"] + [f"b_{m - s}" for s in range(q + 2)]
    if case == CASE_S:
        q = n // m
        return [f"b_{m}", f"b_{m - 1}"] + [f"a_{n - k}" for k in range(1, q + 2)]
    return [f"a_{i}" for i in range(1, n)] + [f"b_{j}" for j in range(m + 1)]


def leading_coefficients(L: AiryOperator) -> List[Any]:
    """The n-th roots of (−1)^n b_m, ascending by principal argument."""
    target = (-1) ** L.n * L.b_coeff(L.m)
    return [root for _, root in nth_roots_of_rational(target, L.n)]


def beta_table(branch: Branch, K: Optional[int] = None, n: Optional[int] = None) -> BetaTable:
    K = branch.K if K is None else K
    n = branch.n if n is None else n
    if K > branch.K:
        raise BranchError(f"beta_table needs alpha up to index {K}, branch has {branch.K}")
    alpha = branch.alpha
    values: Dict[Tuple[int, int], Any] = {}
    for j in range(K + 1):
        values[(j, 0)] = scalar(1 if j == 0 else 0)
    for k in range(n):
        for j in range(K + 1):
            values[(j, k + 1)] = sum((alpha[s] * values[(j - s, k)] for s in range(j + 1)), scalar(0))
    return BetaTable(values=values, K=K, n=n)


def _check_linear_coefficient(L: AiryOperator, alpha0: Any) -> Any:
    linear = L.n * alpha0 ** (L.n - 1)
    if scalar_abs(linear) <= Config().EPSILON:
        raise NonSimpleLinearization(f"Linear coefficient n*alpha_0^(n-1) = {complex(linear)} vanishes")
    return linear


def branch_expand(L: AiryOperator, root_index: int, K: Optional[int] = None) -> Branch:
    """α_0..α_K solved order by order from P_L(z, ξ) = 0."""
    n, m = L.n, L.m
    K = m + n - 1 if K is None else K
    if not 0 <= root_index < n:
        raise BranchError(f"root_index must lie in 0..{n - 1}, got {root_index}")
    P = symbol(L)
    alpha0 = leading_coefficients(L)[root_index]
    linear = _check_linear_coefficient(L, alpha0)
    alpha = [alpha0]
    for k in range(1, K + 1):
        # α_k is still unknown: truncate ξ right where it would enter
        trial = alpha_series(alpha + [scalar(0)], n, m)
        residual = P.evaluate(trial)
        value = residual.coefficient(Fraction(k, n) - (n + m))
        alpha_k = -value / linear
        logger.debug(f"branch {root_index}: alpha_{k} = {complex(alpha_k)}")
        alpha.append(alpha_k)
    logger.info(f"Branch {root_index} of bidegree ({n}, {m}) expanded to K = {K}")
    return Branch(n=n, m=m, root_index=root_index, alpha=tuple(alpha))


def symbol_residual(L: AiryOperator, branch: Branch) -> PuiseuxSeries:
    return symbol(L).evaluate(branch.series())


def _partial_branch(L: AiryOperator, alpha: Dict[int, Any], upto: int, root_index: int) -> Branch:
    values = tuple(alpha.get(k, scalar(0)) for k in range(upto + 1))
    return Branch(n=L.n, m=L.m, root_index=root_index, alpha=values)


def _solve_triangular(L: AiryOperator, root_index: int, rows: List[Tuple[int, Any]]) -> Dict[int, Any]:
    """Solve β_{j,n} = rhs_j for α_j, rows ascending in j; every other α_k < max j is 0."""
    alpha0 = leading_coefficients(L)[root_index]
    linear = _check_linear_coefficient(L, alpha0)
    alpha: Dict[int, Any] = {0: alpha0}
    for j, rhs in rows:
        table = beta_table(_partial_branch(L, alpha, j, root_index), j, L.n)
        alpha[j] = (rhs - table.beta(j, L.n)) / linear
    return alpha


def solve_system_A(L: AiryOperator, root_index: int = 0) -> Dict[int, Any]:
    """α_0, α_n, …, α_{qn} for m = qn."""
    n, m = L.n, L.m
    if m % n != 0:
        raise WrongCase(f"System (A) needs n | m, got (n, m) = ({n}, {m})")
    q = m // n
    alpha0 = leading_coefficients(L)[root_index]
    rows = []
    for s in range(1, q + 1):
        rhs = scalar((-1) ** n * L.b_coeff(m - s))
        if s == q:
            rhs += scalar(L.a_coeff(n - 1)) * alpha0 ** (n - 1)
        rows.append((s * n, rhs))
    return _solve_triangular(L, root_index, rows)


def solve_system_B(L: AiryOperator, root_index: int = 0) -> Dict[int, Any]:
    """α_0, α_n, …, α_{qn}, α_m, α_{(q+1)n} for m = qn + r, 0 < r < n."""
    n, m = L.n, L.m
    if m <= n or m % n == 0:
        raise WrongCase(f"System (B) needs m = qn + r with q >= 1, 0 < r < n, got (n, m) = ({n}, {m})")
    q = m // n
    alpha0 = leading_coefficients(L)[root_index]
    rows = [(s * n, scalar((-1) ** n * L.b_coeff(m - s))) for s in range(1, q + 2)]
    rows.append((m, scalar(L.a_coeff(n - 1)) * alpha0 ** (n - 1)))
    rows.sort(key=lambda row: row[0])
    return _solve_triangular(L, root_index, rows)


def recover_coefficients_S(L: AiryOperator, branch: Branch) -> List[Any]:
    """Solve system (S) for (a_{n−1}, …, a_{n−(q+1)}) from the branch's β's."""
    n, m = L.n, L.m
    if branch_case(L) != CASE_S:
        raise WrongCase(f"System (S) needs n = qm + r with 0 < r < m, got (n, m) = ({n}, {m})")
    q = n // m
    table = beta_table(branch, (q + 1) * m, n)
    eps = Config().EPSILON
    recovered: List[Any] = []
    for j in range(1, q + 2):
        known = -table.beta(j * m, n)
        for k in range(1, j):
            known -= (-1) ** k * recovered[k - 1] * table.beta((j - k) * m, n - k)
        pivot = (-1) ** j * table.beta(0, n - j)
        if scalar_abs(pivot) <= eps:
            raise SingularSystem(f"Pivot beta(0, {n - j}) vanishes in system (S)")
        recovered.append(known / pivot)
    tolerance = Config().CHECK_TOLERANCE
    for k, value in enumerate(recovered, start=1):
        expected = scalar(L.a_coeff(n - k))
        if scalar_abs(value - expected) > tolerance:
            raise RecoveryMismatch(
                f"System (S) recovers a_{n - k} = {complex(value)}, operator has {complex(expected)}"
            )
    return recovered


def factor_from_branch(branch: Branch) -> PuiseuxSeries:
    """Q with z dQ/dz = ξ_{<0}."""
    return ps_antiderive_theta(negative_part(branch.series()))


def factor_in_x(factor: PuiseuxSeries) -> Dict[Fraction, Any]:
    """Q as a polynomial in x^{1/n}, x = 1/z."""
    return {-exponent: c for exponent, c in factor.terms.items()}


def _factor_distance(a: PuiseuxSeries, b: PuiseuxSeries) -> float:
    return max((scalar_abs(c) for c in ps_sub(a, b).terms.values()), default=0.0)


def group_factors(factors: List[Tuple[int, PuiseuxSeries]]) -> List[DeterminingFactor]:
    threshold = 10 * Config().EPSILON
    groups: List[List[Tuple[int, PuiseuxSeries]]] = []
    for root_index, series in factors:
        for group in groups:
            if all(_factor_distance(series, other) <= threshold for _, other in group):
                group.append((root_index, series))
                break
        else:
            groups.append([(root_index, series)])
    return [
        DeterminingFactor(series=g[0][1], multiplicity=len(g), source_branch=g[0][0], members=tuple(i for i, _ in g))
        for g in groups
    ]


def characteristic_multiplicity(factors: Sequence[DeterminingFactor]) -> int:
    """Largest number of factors agreeing with one of them beyond its leading order."""
    best = 0
    for f in factors:
        v = f.series.valuation
        count = 0
        for g in factors:
            diff = ps_sub(g.series, f.series)
            if diff.is_zero or (v is not None and diff.valuation > v):
                count += g.multiplicity
        best = max(best, count)
    return best


def _closed_form_factor(L: AiryOperator, alpha: Dict[int, Any]) -> PuiseuxSeries:
    n, m = L.n, L.m
    terms = {Fraction(k - n - m, n): -n * a / (n + m - k) for k, a in alpha.items() if k < n + m}
    return PuiseuxSeries.from_terms(terms, Fraction(0))


def determining_factors(L: AiryOperator, K: Optional[int] = None) -> FactorAnalysis:
    n, m = L.n, L.m
    K = m + n - 1 if K is None else K
    if K < m + n - 1:
        raise BranchError(f"Determining factors need K >= m + n - 1 = {m + n - 1}, got {K}")
    newton_slope(L)
    case = branch_case(L)
    flagged = case == CASE_BOUNDARY
    notes: List[str] = []
    if flagged:
        logger.warning(f"Bidegree ({n}, {m}) has n = qm with q >= 2: general expansion only")
        notes.append("n = qm with q >= 2 is outside the three analysed cases; general expansion used")

    branches = [branch_expand(L, i, K) for i in range(n)]
    leading = [b.alpha[0] for b in branches]
    eps = Config().EPSILON
    for i in range(n):
        for j in range(i + 1, n):
            if scalar_abs(leading[i] - leading[j]) <= eps:
                raise NonSimpleLinearization(f"Leading coefficients of branches {i} and {j} coincide")

    raw = [(b.root_index, factor_from_branch(b)) for b in branches]
    drift = None
    if case in (CASE_A, CASE_B):
        solver = solve_system_A if case == CASE_A else solve_system_B
        drift = 0.0
        for root_index, general in raw:
            fast = _closed_form_factor(L, solver(L, root_index))
            gap = _factor_distance(fast, general)
            drift = max(drift, gap)
            if gap > Config().CHECK_TOLERANCE:
                raise ClosedFormMismatch(f"Closed form and general factor of branch {root_index} differ by {gap:.3g}")
        if drift > 10 * eps:
            logger.warning(f"Closed-form factors drift by {drift:.3g} from the general expansion")

    recovered = None
    if case == CASE_S:
        recovered = recover_coefficients_S(L, branches[0])

    factors = group_factors(raw)
    if any(f.multiplicity > 1 for f in factors):
        notes.append("coincident determining factors grouped")
    logger.info(f"Determining factors of bidegree ({n}, {m}) computed: case {case}, {len(factors)} factor(s)")
    return FactorAnalysis(
        operator=L,
        case=case,
        flagged=flagged,
        K=K,
        branches=branches,
        factors=factors,
        characteristic_index=characteristic_index(L),
        sensitive=sensitive_coefficients(L),
        closed_form_drift=drift,
        recovered=recovered,
        notes=notes,
    )
