import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from com.mhire.app.config.config import Config
from com.mhire.app.services.branches.branches import CASE_B, branch_case, leading_coefficients
from com.mhire.app.services.monodromy.monodromy import closed_form_lambda, monodromy_from_canonical
from com.mhire.app.services.operator.airy_operator import AiryOperator, connection_coefficients
from com.mhire.app.services.reduction.series_matrix import (
    SeriesMatrix,
    unipotent,
    unipotent_inverse,
)
from com.mhire.app.services.series.series import (
    PuiseuxSeries,
    monomial,
    negative_part,
    ps_add,
    ps_antiderive_theta,
    ps_invert,
    ps_mul,
    ps_scale,
    ps_shift,
    zero_series,
)
from com.mhire.app.utils.error_utils import AiryEngineError
from com.mhire.app.utils.linalg_utils import (
    as_matrix,
    commutator,
    condition_number,
    diagonal,
    eig,
    identity,
    inverse,
    max_abs,
)
from com.mhire.app.utils.number_utils import round_to_rational, scalar, scalar_abs

logger = logging.getLogger(__name__)

STEP_SHEAR = "shear"
STEP_UNIPOTENT = "unipotent"
STEP_RAMIFIED = "ramified"
STEP_CONSTANT = "constant"


class ReductionError(AiryEngineError):
    pass


class NonInvertibleGauge(ReductionError):
    pass


class NotSemisimple(ReductionError):
    pass


class CaseNotImplemented(ReductionError):
    pass


@dataclass(frozen=True)
class StandardTriple:
    X: np.ndarray
    Y: np.ndarray
    H: np.ndarray


@dataclass(frozen=True)
class Eigenbasis:
    """Columns of `vectors` are eigenvectors of a semisimple matrix, in the order of `values`."""

    values: tuple
    vectors: np.ndarray
    inverse: np.ndarray

    def to_basis(self, M: np.ndarray) -> np.ndarray:
        return self.inverse @ M @ self.vectors

    def from_basis(self, M: np.ndarray) -> np.ndarray:
        return self.vectors @ M @ self.inverse

    def clustered(self, i: int, j: int) -> bool:
        scale = max(1.0, max(scalar_abs(v) for v in self.values))
        return scalar_abs(self.values[i] - self.values[j]) <= Config().CHECK_TOLERANCE * scale


@dataclass(frozen=True)
class GaugeStep:
    kind: str
    exponent: Fraction
    matrix: np.ndarray


@dataclass
class CanonicalModel:
    operator: AiryOperator
    case: str
    flagged: bool
    order: Fraction
    truncation_order: Fraction
    lam: Fraction
    levels: List[Fraction]
    level_matrices: List[np.ndarray]
    residue: np.ndarray
    raw_residue: np.ndarray
    diagonal_series: List[PuiseuxSeries]
    connection: SeriesMatrix
    notes: List[str] = field(default_factory=list)


# -- constant matrices ---------------------------------------------------------

def standard_triple(n: int) -> StandardTriple:
    """X_n superdiagonal ones, Y_n subdiagonal j(n−j), H_n = diag(n+1−2j)."""
    if n < 1:
        raise ReductionError(f"standard_triple needs n >= 1, got {n}")
    X = [[0] * n for _ in range(n)]
    Y = [[0] * n for _ in range(n)]
    for j in range(n - 1):
        X[j][j + 1] = 1
        Y[j + 1][j] = (j + 1) * (n - j - 1)
    H = [[n - 1 - 2 * i if i == j else 0 for j in range(n)] for i in range(n)]
    return StandardTriple(X=as_matrix(X), Y=as_matrix(Y), H=as_matrix(H))


def principal_invariant(L: AiryOperator) -> Fraction:
    return Fraction(-L.m, L.n) - 2


def default_order(L: AiryOperator) -> Fraction:
    """Offset beyond the principal invariant that reaches the residue exponent −1."""
    return Fraction(L.m + L.n, L.n)


def commutant_basis(A_r: np.ndarray) -> List[np.ndarray]:
    """I, A_r, …, A_r^{n−1}: a basis of the commutant when A_r has distinct eigenvalues."""
    n = A_r.shape[0]
    powers = [identity(n)]
    for _ in range(n - 1):
        powers.append(powers[-1] @ A_r)
    return powers


def eigenbasis(S: np.ndarray) -> Eigenbasis:
    values, vectors = eig(S)
    return _checked_basis(S, values, vectors)


def vandermonde_eigenbasis(values: Sequence[Any]) -> Eigenbasis:
    """Eigenbasis of X_n + μ^n E_{n,1}: columns (1, μ, …, μ^{n−1})."""
    n = len(values)
    vectors = as_matrix([[values[k] ** i for k in range(n)] for i in range(n)])
    return Eigenbasis(values=tuple(values), vectors=vectors, inverse=inverse(vectors))


def _checked_basis(S: np.ndarray, values: Sequence[Any], vectors: np.ndarray) -> Eigenbasis:
    tolerance = Config().CHECK_TOLERANCE
    if condition_number(vectors) > 1 / tolerance:
        raise NotSemisimple("Eigenvector matrix is too ill-conditioned for a stable splitting")
    residual = max_abs(S @ vectors - vectors @ diagonal(values))
    if residual > tolerance * max(1.0, max_abs(S)):
        raise NotSemisimple(f"Eigen-decomposition residual {residual:.3g} exceeds tolerance")
    return Eigenbasis(values=tuple(values), vectors=vectors, inverse=inverse(vectors))


def commutant_split(
    M: np.ndarray, S: np.ndarray, basis: Optional[Eigenbasis] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """M = M_comm + M_im with [S, M_comm] = 0 and M_im in the image of ad_S."""
    basis = eigenbasis(S) if basis is None else basis
    M_hat = basis.to_basis(as_matrix(M))
    n = M_hat.shape[0]
    comm_hat = as_matrix(
        [[M_hat[i, j] if basis.clustered(i, j) else 0 for j in range(n)] for i in range(n)]
    )
    comm = basis.from_basis(comm_hat)
    return comm, as_matrix(M) - comm


def ad_inverse(R: np.ndarray, S: np.ndarray, basis: Optional[Eigenbasis] = None) -> np.ndarray:
    """The T in the image of ad_S with [S, T] equal to the image part of R."""
    basis = eigenbasis(S) if basis is None else basis
    R_hat = basis.to_basis(as_matrix(R))
    n = R_hat.shape[0]
    T_hat = as_matrix(
        [
            [0 if basis.clustered(i, j) else R_hat[i, j] / (basis.values[i] - basis.values[j]) for j in range(n)]
            for i in range(n)
        ]
    )
    return basis.from_basis(T_hat)


# -- connections and gauges ----------------------------------------------------

def companion_connection(L: AiryOperator) -> SeriesMatrix:
    """Superdiagonal z^{−2}; bottom row ((−1)^n z^{−2}Q(1/z), ã_1 z^{−2}, …, ã_{n−1} z^{−2})."""
    n = L.n
    a_tilde, b_tilde = connection_coefficients(L)
    rows: List[List[PuiseuxSeries]] = [[zero_series() for _ in range(n)] for _ in range(n)]
    for i in range(n - 1):
        rows[i][i + 1] = monomial(1, -2)
    rows[n - 1][0] = PuiseuxSeries.from_terms({-2 - j: b for j, b in enumerate(b_tilde)})
    for j, a in enumerate(a_tilde, start=1):
        rows[n - 1][j] = ps_add(rows[n - 1][j], monomial(a, -2))
    return SeriesMatrix(rows)


def _is_diagonal_monomial(P: SeriesMatrix) -> bool:
    n = P.size
    for i in range(n):
        for j in range(n):
            entry = P.entry(i, j)
            if not entry.is_exact:
                return False
            if i != j and not entry.is_zero:
                return False
            if i == j and len(entry.terms) != 1:
                return False
    return True


def invert_gauge(P: SeriesMatrix, order: Optional[Fraction] = None) -> SeriesMatrix:
    """P^{−1} for diagonal monomial P, or for P with an invertible constant term (truncated at `order`)."""
    n = P.size
    if _is_diagonal_monomial(P):
        entries = []
        for i in range(n):
            exponent, c = P.entry(i, i).leading_term()
            entries.append(monomial(1 / c, -exponent))
        return SeriesMatrix([[entries[i] if i == j else zero_series() for j in range(n)] for i in range(n)])

    valuation = P.valuation
    if valuation is None or valuation < 0:
        raise NonInvertibleGauge("Gauge has negative powers and is not a diagonal monomial")
    P0 = P.coefficient(0)
    if condition_number(P0) > 1 / Config().CHECK_TOLERANCE:
        raise NonInvertibleGauge("Constant term of the gauge is singular")
    if order is None:
        raise ReductionError("Inverting a non-monomial gauge needs a truncation order")
    P0_inv = inverse(P0)
    # P = P0 (I + N), val(N) > 0
    N = (SeriesMatrix.from_constant(P0_inv) @ (P - SeriesMatrix.from_constant(P0))).truncate(order)
    minus_N = N.scale(-1)
    term = SeriesMatrix.identity(n).truncate(order)
    total = term
    while True:
        term = (term @ minus_N).truncate(order)
        if all(e.is_zero for row in term.rows for e in row):
            break
        total = total + term
    return total @ SeriesMatrix.from_constant(P0_inv)


def gauge(A: SeriesMatrix, P: SeriesMatrix, P_inv: Optional[SeriesMatrix] = None) -> SeriesMatrix:
    """P[A] = P A P^{−1} + P′ P^{−1}, kept at the truncation order of A."""
    truncation = A.truncation_order
    if P_inv is None:
        relative = None if truncation is None else truncation - A.valuation
        P_inv = invert_gauge(P, relative)
    result = P @ A @ P_inv + P.derive() @ P_inv
    return result.truncate(truncation)


def _rational_weights(H: Any) -> List[Fraction]:
    H = as_matrix(H)
    n = H.shape[0]
    tolerance = Config().EPSILON
    weights = []
    for i in range(n):
        for j in range(n):
            if i != j and scalar_abs(H[i, j]) > tolerance:
                raise ReductionError("shear needs a diagonal H")
        weight = round_to_rational(H[i, i], 1000, tolerance)
        if weight is None:
            raise ReductionError(f"shear needs rational weights, got {complex(H[i, i])}")
        weights.append(weight)
    return weights


def shear(A: SeriesMatrix, s: Any, H: Any) -> SeriesMatrix:
    """Gauge by z^{(s/2)H} for diagonal H with rational entries."""
    s = Fraction(s)
    half = [s / 2 * h for h in _rational_weights(H)]
    n = A.size
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            entry = ps_shift(A.entry(i, j), half[i] - half[j])
            if i == j and half[i] != 0:
                entry = ps_add(entry, monomial(scalar(half[i]), -1))
            row.append(entry)
        rows.append(row)
    return SeriesMatrix(rows)


def levels(A: SeriesMatrix) -> List[Fraction]:
    """Ascending exponents below −1 carrying a nonzero coefficient."""
    eps = Config().EPSILON
    return [e for e in A.exponents() if e < -1 and max_abs(A.coefficient(e)) > eps]


def spectral_reduce_step(
    A: SeriesMatrix,
    k: Any,
    A_r: np.ndarray,
    commutant_part: Optional[np.ndarray] = None,
    basis: Optional[Eigenbasis] = None,
    r: Optional[Fraction] = None,
) -> Tuple[np.ndarray, SeriesMatrix]:
    """T_k in the image of ad_{A_r} making the z^{r+k} coefficient of (I + z^k T_k)[A] commute with A_r."""
    k = Fraction(k)
    if k <= 0:
        raise ReductionError(f"Reduction step offset must be positive, got {k}")
    r = A.valuation if r is None else Fraction(r)
    tolerance = Config().CHECK_TOLERANCE
    if max_abs(A.coefficient(r) - A_r) > tolerance * max(1.0, max_abs(A_r)):
        raise ReductionError(f"Leading coefficient of the connection at z^{r} is not A_r")
    basis = eigenbasis(A_r) if basis is None else basis
    _, image = commutant_split(A.coefficient(r + k), A_r, basis)
    T = ad_inverse(image, A_r, basis)
    if commutant_part is not None:
        T = T + as_matrix(commutant_part)
    if max_abs(T) <= Config().EPSILON:
        return T, A
    truncation = A.truncation_order
    P_inv = unipotent_inverse(T, k, truncation - r)
    logger.debug(f"Step at offset {k}: |T| = {max_abs(T):.3g}")
    return T, gauge(A, unipotent(T, k), P_inv)


def replay_gauge(A: SeriesMatrix, steps: Sequence[GaugeStep], truncation_order: Optional[Fraction] = None) -> SeriesMatrix:
    """Apply a gauge step list in order, truncating after every step."""
    for step in steps:
        if step.kind == STEP_SHEAR:
            A = shear(A, step.exponent, step.matrix)
        elif step.kind == STEP_CONSTANT:
            A = gauge(A, SeriesMatrix.from_constant(step.matrix), SeriesMatrix.from_constant(inverse(step.matrix)))
        elif step.kind in (STEP_UNIPOTENT, STEP_RAMIFIED):
            if A.truncation_order is None:
                raise ReductionError("Unipotent steps need a truncated connection")
            P_inv = unipotent_inverse(step.matrix, step.exponent, A.truncation_order - A.valuation)
            A = gauge(A, unipotent(step.matrix, step.exponent), P_inv)
        else:
            raise ReductionError(f"Unknown gauge step kind: {step.kind}")
        A = A.truncate(truncation_order)
    return A


# -- closed-form second stage ----------------------------------------------------

def _geometric_inverse(coefficient: Fraction, order: Fraction) -> PuiseuxSeries:
    """(1 − coefficient·z)^{−1} up to z^order."""
    base = PuiseuxSeries.from_terms({0: 1, 1: -coefficient})
    return ps_invert(base, order)


def explicit_first_gauge(L: AiryOperator) -> np.ndarray:
    """(b_{m−1}/(n b_m))·diag(0, −1, …, −(n−1))."""
    n = L.n
    c = Fraction(L.b_coeff(L.m - 1), n * L.b_coeff(L.m))
    return diagonal([scalar(-j * c) for j in range(n)])


def sheared_companion(L: AiryOperator) -> SeriesMatrix:
    return shear(companion_connection(L), Fraction(-L.m, L.n), standard_triple(L.n).H)


def explicit_second_stage(L: AiryOperator, order: Optional[Any] = None) -> SeriesMatrix:
    """A² assembled from its closed-form entries p_j, q_k and the diagonal, up to r + order."""
    n, m = L.n, L.m
    order = default_order(L) if order is None else Fraction(order)
    r = principal_invariant(L)
    truncation = r + order + Fraction(1, n)
    a_tilde, b_tilde = connection_coefficients(L)
    c = Fraction(L.b_coeff(m - 1), n * L.b_coeff(m))
    relative = truncation - r
    shift = Fraction(m, n)

    def ratio(numerator_step: int, denominator_step: int) -> PuiseuxSeries:
        # (1 − i c z)(1 − j c z)^{−1}
        top = PuiseuxSeries.from_terms({0: 1, 1: -numerator_step * c})
        return ps_mul(top, _geometric_inverse(denominator_step * c, relative))

    rows: List[List[PuiseuxSeries]] = [[zero_series() for _ in range(n)] for _ in range(n)]
    for j in range(1, n):
        rows[j - 1][j] = ps_shift(ratio(j - 1, j), r)

    last = PuiseuxSeries.from_terms({0: 1, 1: -(n - 1) * c})
    q_poly = PuiseuxSeries.from_terms({-j: b for j, b in enumerate(b_tilde)})
    rows[n - 1][0] = ps_add(rows[n - 1][0], ps_shift(ps_mul(q_poly, last), -2 + shift * (n - 1)))
    for k, a in enumerate(a_tilde, start=1):
        if a == 0:
            continue
        q_k = ps_shift(ps_mul(last, _geometric_inverse(k * c, relative)), -2 + shift * (n - 1 - k))
        rows[n - 1][k] = ps_add(rows[n - 1][k], ps_scale(q_k, a))

    for j in range(1, n + 1):
        weight = -Fraction(m, 2 * n) * (n + 1 - 2 * j)
        entry = monomial(scalar(weight), -1)
        if j > 1:
            derivative = ps_mul(monomial(scalar(-(j - 1) * c), 0), _geometric_inverse((j - 1) * c, relative))
            entry = ps_add(entry, derivative)
        rows[j - 1][j - 1] = ps_add(rows[j - 1][j - 1], entry)

    return SeriesMatrix(rows).truncate(truncation)


def first_stage_commutant_part(L: AiryOperator) -> np.ndarray:
    """Commutant scalar turning the ad-image T_1 into the diagonal closed form."""
    n = L.n
    c = Fraction(L.b_coeff(L.m - 1), n * L.b_coeff(L.m))
    return identity(n) * scalar(-c * Fraction(n - 1, 2))


# -- canonical model -------------------------------------------------------------

def bv_reduce(
    L: AiryOperator, order: Optional[Any] = None, strict: Optional[bool] = None
) -> Tuple[CanonicalModel, List[GaugeStep]]:
    """Canonical model of the companion connection of L and the gauge steps reaching it."""
    n, m = L.n, L.m
    config = Config()
    strict = config.STRICT if strict is None else strict
    case = branch_case(L)
    flagged = case != CASE_B
    notes: List[str] = []
    if flagged:
        if strict:
            raise CaseNotImplemented(f"Bidegree ({n}, {m}) is not of the form m = nq + s with 0 < s < n")
        logger.warning(f"Bidegree ({n}, {m}) outside m = nq + s, 0 < s < n: generic reduction loop")
        notes.append("outside m = nq + s with 0 < s < n; reduced by the generic loop")

    order = default_order(L) if order is None else Fraction(order)
    if (order * n).denominator != 1:
        raise ReductionError(f"Reduction order must lie in (1/{n})Z, got {order}")
    if order < default_order(L):
        raise ReductionError(f"Reduction order {order} does not reach the residue; need >= {default_order(L)}")

    r = principal_invariant(L)
    truncation = r + order + Fraction(1, n)
    triple = standard_triple(n)
    s = Fraction(-m, n)
    steps = [GaugeStep(kind=STEP_SHEAR, exponent=s, matrix=triple.H)]
    A = shear(companion_connection(L), s, triple.H).truncate(truncation)
    A_r = A.coefficient(r)

    basis = vandermonde_eigenbasis(leading_coefficients(L))
    basis = _checked_basis(A_r, basis.values, basis.vectors)
    logger.info(f"Reducing bidegree ({n}, {m}) from z^{r} up to z^{truncation}")

    for j in range(1, int(order * n) + 1):
        k = Fraction(j, n)
        T, A = spectral_reduce_step(A, k, A_r, basis=basis, r=r)
        if max_abs(T) > config.EPSILON:
            kind = STEP_UNIPOTENT if k.denominator == 1 else STEP_RAMIFIED
            steps.append(GaugeStep(kind=kind, exponent=k, matrix=T))

    A = gauge(A, SeriesMatrix.from_constant(basis.inverse), SeriesMatrix.from_constant(basis.vectors))
    steps.append(GaugeStep(kind=STEP_CONSTANT, exponent=Fraction(0), matrix=basis.inverse))
    raw_residue = A.coefficient(-1)
    _check_traceless(raw_residue)

    lam = closed_form_lambda(L)
    A = shear(A, 2 * lam, identity(n))
    steps.append(GaugeStep(kind=STEP_SHEAR, exponent=2 * lam, matrix=identity(n)))

    _check_diagonal(A)
    found = levels(A)
    model = CanonicalModel(
        operator=L,
        case=case,
        flagged=flagged,
        order=order,
        truncation_order=truncation,
        lam=lam,
        levels=found,
        level_matrices=[_diagonal_part(A.coefficient(e)) for e in found],
        residue=_diagonal_part(A.coefficient(-1)),
        raw_residue=_diagonal_part(raw_residue),
        diagonal_series=A.diagonal(),
        connection=A,
        notes=notes,
    )
    logger.info(f"Canonical model of bidegree ({n}, {m}): levels {[str(e) for e in found]}, {len(steps)} gauge steps")
    return model, steps


def _diagonal_part(M: np.ndarray) -> np.ndarray:
    return diagonal([M[i, i] for i in range(M.shape[0])])


def _check_traceless(residue: np.ndarray) -> None:
    # companion and unipotent gauges carry no z^-1 trace, H is traceless
    trace = sum((residue[i, i] for i in range(residue.shape[0])), scalar(0))
    if scalar_abs(trace) > Config().CHECK_TOLERANCE * max(1.0, max_abs(residue)):
        raise ReductionError(f"Residue before the scalar gauge has trace {complex(trace)}, expected 0")


def _check_diagonal(A: SeriesMatrix) -> None:
    scale = max(
        [1.0] + [scalar_abs(c) for row in A.rows for e in row for c in e.terms.values()]
    )
    tolerance = Config().CHECK_TOLERANCE * scale
    for exponent in A.exponents():
        gap = A.off_diagonal_size(exponent)
        if gap > tolerance:
            raise ReductionError(f"Reduced connection keeps an off-diagonal term {gap:.3g} at z^{exponent}")


def check_canonical(model: CanonicalModel) -> None:
    """D's semisimple and all of {D's, C} pairwise commuting, to tolerance."""
    tolerance = Config().CHECK_TOLERANCE
    matrices = list(model.level_matrices) + [model.residue]
    for D in model.level_matrices:
        if max_abs(D - _diagonal_part(D)) > tolerance:
            raise NotSemisimple("Level matrix is not diagonal in the reduced basis")
    for i, first in enumerate(matrices):
        for second in matrices[i + 1:]:
            if max_abs(commutator(first, second)) > tolerance * max(1.0, max_abs(first), max_abs(second)):
                raise ReductionError("Canonical model matrices do not commute")


def canonical_factors(model: CanonicalModel) -> List[PuiseuxSeries]:
    """∫q_i dz over the level part of each diagonal entry, zero constant."""
    return [ps_antiderive_theta(negative_part(ps_shift(q, 1))) for q in model.diagonal_series]


def joint_spectrum(model: CanonicalModel, turns: Optional[int] = None) -> List[tuple]:
    """Per basis vector: its level eigenvalues, then exp(2iπkC) for k = 1..turns (default 2n)."""
    n = model.residue.shape[0]
    turns = 2 * n if turns is None else turns
    base = monodromy_from_canonical(model)
    spectra = []
    for i in range(n):
        levels_part = tuple(D[i, i] for D in model.level_matrices)
        spectra.append(levels_part + tuple(base[i] ** k for k in range(1, turns + 1)))
    return spectra

