"""Dense nonnegative matrix type, stochasticity classification, and
support-structure checks.

Everything downstream (scaling, bounds, exact oracles) funnels through
:class:`Matrix`, which validates entries once at construction so that logs
taken later are always well defined.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import DimensionError, DomainError

__all__ = [
    "Matrix",
    "StochasticityReport",
    "as_matrix",
    "classify",
    "support_has_perfect_matching",
    "load_matrix",
    "parse_matrix",
    "dump_matrix",
    "format_matrix",
]


class Matrix:
    """Immutable dense matrix with nonnegative finite real entries.

    The underlying array is C-ordered float64 and marked read-only; all
    operations in this package treat instances as values.
    """

    __slots__ = ("_data",)

    def __init__(self, entries):
        data = np.array(entries, dtype=np.float64, order="C")
        if data.ndim != 2:
            raise DimensionError(f"expected a 2-d array, got ndim={data.ndim}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionError(f"empty matrix of shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise DomainError("matrix entries must be finite (no NaN/inf)")
        if np.any(data < 0):
            raise DomainError("matrix entries must be nonnegative")
        data.setflags(write=False)
        self._data = data

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def n_rows(self) -> int:
        return self._data.shape[0]

    @property
    def n_cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self):
        return self._data.shape

    def is_square(self) -> bool:
        return self.n_rows == self.n_cols

    def require_square(self, what="operation"):
        if not self.is_square():
            raise DimensionError(
                f"{what} requires a square matrix, got {self.n_rows}x{self.n_cols}"
            )
        return self.n_rows

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self._data.astype(dtype)
        return self._data

    def __repr__(self):
        return f"Matrix({self.n_rows}x{self.n_cols})"


def as_matrix(a) -> Matrix:
    """Pass a Matrix through, wrap (and validate) anything array-like."""
    if isinstance(a, Matrix):
        return a
    return Matrix(a)


@dataclass(frozen=True)
class StochasticityReport:
    row_sum_deviation: float
    col_sum_deviation: float
    is_row_stochastic: bool
    is_doubly_stochastic: bool


def classify(a, tol: float = 1e-9) -> StochasticityReport:
    """Measure how far a square matrix is from row/doubly stochastic.

    Deviations are max over lines of |sum - 1|; the booleans compare
    against ``tol``.  The default tolerance matches the Sinkhorn residual
    target so a freshly scaled matrix classifies as doubly stochastic.
    """
    a = as_matrix(a)
    a.require_square("stochasticity classification")
    if tol <= 0:
        raise DomainError("tol must be positive")
    row_dev = float(np.max(np.abs(a.data.sum(axis=1) - 1.0)))
    col_dev = float(np.max(np.abs(a.data.sum(axis=0) - 1.0)))
    row_ok = row_dev <= tol
    return StochasticityReport(
        row_sum_deviation=row_dev,
        col_sum_deviation=col_dev,
        is_row_stochastic=row_ok,
        is_doubly_stochastic=row_ok and col_dev <= tol,
    )


def support_has_perfect_matching(a) -> bool:
    """True iff the bipartite graph with an edge wherever an entry is
    positive admits a perfect matching (equivalently, the permanent of the
    nonnegative matrix is positive).

    Uses the Hopcroft-Karp augmenting-path algorithm via scipy.
    """
    a = as_matrix(a)
    n = a.require_square("perfect-matching check")
    support = csr_matrix(a.data > 0)
    if support.nnz < n:
        return False
    match = maximum_bipartite_matching(support, perm_type="column")
    return bool(np.all(match >= 0))


# ---------------------------------------------------------------------------
# text I/O
#
# Native format: first line "n_rows n_cols", then n_rows whitespace-separated
# rows.  CSV with no header is accepted on read.  Writers emit 17 significant
# digits so round-trips are exact.


def parse_matrix(text: str) -> Matrix:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise DomainError("empty matrix input")
    if "," in lines[0]:
        rows = [[_parse_entry(tok) for tok in ln.split(",")] for ln in lines]
        return _from_rows(rows)
    head = lines[0].split()
    try:
        n_rows, n_cols = (int(tok) for tok in head)
    except ValueError:
        n_rows = n_cols = -1
    if len(head) != 2 or n_rows < 1 or n_cols < 1:
        raise DomainError(
            "expected an 'n_rows n_cols' header line (or CSV input), got "
            f"{lines[0]!r}"
        )
    if len(lines) != n_rows + 1:
        raise DomainError(
            f"header says {n_rows} rows but input has {len(lines) - 1}"
        )
    rows = [[_parse_entry(t) for t in ln.split()] for ln in lines[1:]]
    m = _from_rows(rows)
    if m.shape != (n_rows, n_cols):
        raise DomainError(f"header says {n_rows}x{n_cols} but body is {m.shape}")
    return m


def _parse_entry(tok: str) -> float:
    try:
        return float(tok)
    except ValueError as exc:
        raise DomainError(f"bad matrix entry {tok!r}") from exc


def _from_rows(rows) -> Matrix:
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DomainError(f"ragged rows of widths {sorted(widths)}")
    return Matrix(rows)


def load_matrix(path) -> Matrix:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def format_matrix(a, fmt: str = "text") -> str:
    a = as_matrix(a)
    buf = io.StringIO()
    if fmt == "text":
        buf.write(f"{a.n_rows} {a.n_cols}\n")
        sep = " "
    elif fmt == "csv":
        sep = ","
    else:
        raise DomainError(f"unknown matrix format {fmt!r}")
    for row in a.data:
        buf.write(sep.join(f"{x:.17g}" for x in row))
        buf.write("\n")
    return buf.getvalue()


def dump_matrix(a, path, fmt: str = "text"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_matrix(a, fmt))
