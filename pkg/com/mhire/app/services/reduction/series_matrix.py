import logging
from fractions import Fraction
from typing import Any, Callable, List, Sequence

import numpy as np

from com.mhire.app.services.series.series import (
    Order,
    PuiseuxSeries,
    TruncationExceeded,
    monomial,
    ps_add,
    ps_derive,
    ps_mul,
    ps_scale,
    ps_sub,
    ps_truncate,
    zero_series,
)
from com.mhire.app.utils.linalg_utils import as_matrix, max_abs

logger = logging.getLogger(__name__)


class SeriesMatrix:
    """Square matrix of Puiseux series: Σ_e A_e z^e with constant A_e."""

    __slots__ = ("_rows",)

    def __init__(self, rows: Sequence[Sequence[PuiseuxSeries]]):
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise ValueError("SeriesMatrix must be square")
        self._rows = tuple(tuple(row) for row in rows)

    @classmethod
    def zeros(cls, n: int, truncation_order: Order = None) -> "SeriesMatrix":
        return cls([[zero_series(truncation_order) for _ in range(n)] for _ in range(n)])

    @classmethod
    def identity(cls, n: int) -> "SeriesMatrix":
        return cls.from_constant(as_matrix([[1 if i == j else 0 for j in range(n)] for i in range(n)]))

    @classmethod
    def from_constant(cls, matrix: Any, exponent: Any = 0) -> "SeriesMatrix":
        """Exact series matrix M z^exponent."""
        n = len(matrix)
        exponent = Fraction(exponent)
        return cls([[monomial(matrix[i][j], exponent) for j in range(n)] for i in range(n)])

    @property
    def size(self) -> int:
        return len(self._rows)

    @property
    def rows(self):
        return self._rows

    def entry(self, i: int, j: int) -> PuiseuxSeries:
        return self._rows[i][j]

    @property
    def truncation_order(self) -> Order:
        known = [e.truncation_order for row in self._rows for e in row if e.truncation_order is not None]
        return min(known) if known else None

    @property
    def valuation(self) -> Order:
        stored = [e.valuation for row in self._rows for e in row if not e.is_zero]
        return min(stored) if stored else self.truncation_order

    def exponents(self) -> List[Fraction]:
        found = set()
        for row in self._rows:
            for e in row:
                found.update(e.exponents())
        return sorted(found)

    def coefficient(self, exponent: Any) -> np.ndarray:
        exponent = Fraction(exponent)
        try:
            return as_matrix([[e.coefficient(exponent) for e in row] for row in self._rows])
        except TruncationExceeded:
            raise TruncationExceeded(f"Matrix coefficient at z^{exponent} is beyond the tracked order")

    def map(self, fn: Callable[[PuiseuxSeries], PuiseuxSeries]) -> "SeriesMatrix":
        return SeriesMatrix([[fn(e) for e in row] for row in self._rows])

    def truncate(self, order: Order) -> "SeriesMatrix":
        if order is None:
            return self
        return self.map(lambda e: ps_truncate(e, order))

    def derive(self) -> "SeriesMatrix":
        return self.map(ps_derive)

    def scale(self, factor: Any) -> "SeriesMatrix":
        return self.map(lambda e: ps_scale(e, factor))

    def diagonal(self) -> List[PuiseuxSeries]:
        return [self._rows[i][i] for i in range(self.size)]

    def off_diagonal_size(self, exponent: Any) -> float:
        block = self.coefficient(exponent)
        n = self.size
        return max((float(abs(block[i, j])) for i in range(n) for j in range(n) if i != j), default=0.0)

    def __add__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        return SeriesMatrix([[ps_add(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(self._rows, other.rows)])

    def __sub__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        return SeriesMatrix([[ps_sub(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(self._rows, other.rows)])

    def __matmul__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        n = self.size
        result = []
        for i in range(n):
            row = []
            for j in range(n):
                total = None
                for k in range(n):
                    left = self._rows[i][k]
                    right = other.rows[k][j]
                    if left.is_zero and left.is_exact or right.is_zero and right.is_exact:
                        continue
                    term = ps_mul(left, right)
                    total = term if total is None else ps_add(total, term)
                row.append(total if total is not None else zero_series())
            result.append(row)
        return SeriesMatrix(result)

    def max_difference(self, other: "SeriesMatrix") -> float:
        diff = self - other
        return max(
            (float(abs(c)) for row in diff.rows for e in row for c in e.terms.values()),
            default=0.0,
        )

    def __repr__(self) -> str:
        return f"SeriesMatrix(n={self.size}, exponents={[str(e) for e in self.exponents()]})"


def unipotent(T: Any, exponent: Any) -> SeriesMatrix:
    """I + z^exponent T."""
    return SeriesMatrix.identity(len(T)) + SeriesMatrix.from_constant(T, exponent)


def unipotent_inverse(T: Any, exponent: Any, truncation_order: Fraction) -> SeriesMatrix:
    """(I + z^k T)^{-1} = Σ_j (−T)^j z^{jk}, truncated."""
    exponent = Fraction(exponent)
    n = len(T)
    power = as_matrix([[1 if i == j else 0 for j in range(n)] for i in range(n)])
    minus_t = -np.asarray(T)
    total = SeriesMatrix.zeros(n, truncation_order)
    j = 0
    while j * exponent < truncation_order:
        if max_abs(power) == 0.0:
            break
        total = total + SeriesMatrix.from_constant(power, j * exponent)
        power = power @ minus_t
        j += 1
    return total.truncate(truncation_order)


def diagonal_series_matrix(entries: Sequence[PuiseuxSeries]) -> SeriesMatrix:
    n = len(entries)
    return SeriesMatrix([[entries[i] if i == j else zero_series() for j in range(n)] for i in range(n)])
