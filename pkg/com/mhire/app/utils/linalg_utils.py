import logging
from typing import Any, Sequence, Tuple

import mpmath
import numpy as np

from com.mhire.app.config.config import Config
from com.mhire.app.utils.number_utils import scalar

logger = logging.getLogger(__name__)


def _dtype():
    return object if Config().is_big_precision else complex


def as_matrix(rows: Sequence[Sequence[Any]]) -> np.ndarray:
    """Constant matrix at working precision (complex128, or object array of mpc)."""
    return np.array([[scalar(x) for x in row] for row in rows], dtype=_dtype())


def zeros(n: int) -> np.ndarray:
    return as_matrix([[0] * n for _ in range(n)])


def identity(n: int) -> np.ndarray:
    return as_matrix([[1 if i == j else 0 for j in range(n)] for i in range(n)])


def diagonal(values: Sequence[Any]) -> np.ndarray:
    n = len(values)
    return as_matrix([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])


def max_abs(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return max(float(abs(x)) for x in matrix.flat)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def inverse(matrix: np.ndarray) -> np.ndarray:
    if Config().is_big_precision:
        inv = mpmath.inverse(mpmath.matrix(matrix.tolist()))
        n = matrix.shape[0]
        return as_matrix([[inv[i, j] for j in range(n)] for i in range(n)])
    return np.linalg.inv(matrix.astype(complex))


def condition_number(matrix: np.ndarray) -> float:
    if Config().is_big_precision:
        m = mpmath.matrix(matrix.tolist())
        return float(mpmath.mnorm(m, 1) * mpmath.mnorm(mpmath.inverse(m), 1))
    return float(np.linalg.cond(matrix.astype(complex)))


def eig(matrix: np.ndarray) -> Tuple[list, np.ndarray]:
    """Eigenvalues and right eigenvectors (columns) at working precision."""
    n = matrix.shape[0]
    if Config().is_big_precision:
        values, vectors = mpmath.eig(mpmath.matrix(matrix.tolist()))
        return list(values), as_matrix([[vectors[i, j] for j in range(n)] for i in range(n)])
    values, vectors = np.linalg.eig(matrix.astype(complex))
    return list(values), vectors
