"""Sinkhorn scaling of a nonnegative matrix to (near-)doubly-stochastic form.

The scaled matrix B = (x_i * a_ij * y_j) together with the log of the factor
product is the reduction every approximation in this package builds on:
Per(A) = Per(B) / (prod_i x_i * prod_j y_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergenceError, ZeroPermanentError
from .exact import permanent_ryser
from .matrix import Matrix, as_matrix, classify, support_has_perfect_matching

__all__ = ["ScalingResult", "sinkhorn_scale", "scaling_relation_check"]

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class ScalingResult:
    row_factors: np.ndarray
    col_factors: np.ndarray
    scaled: Matrix
    residual: float
    iterations: int
    log_factor_product: float

    def to_dict(self):
        return {
            "row_factors": self.row_factors.tolist(),
            "col_factors": self.col_factors.tolist(),
            "scaled": self.scaled.data.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "log_factor_product": self.log_factor_product,
        }


def sinkhorn_scale(a, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ScalingResult:
    """Alternately normalize rows then columns until both line sums are
    within ``tol`` of 1.

    Factors accumulate in log domain.  Normalization order is fixed
    (rows first) for cross-platform determinism; after each row pass the
    rows sum to 1 exactly up to rounding, so the reported residual is the
    column deviation.  Raises ZeroPermanentError when the support admits no
    perfect matching (no scaling exists), NonConvergenceError carrying the
    best partial result when max_iter runs out.
    """
    a = as_matrix(a)
    n = a.require_square("Sinkhorn scaling")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if max_iter < 1:
        raise DomainError("max_iter must be >= 1")
    if not support_has_perfect_matching(a):
        raise ZeroPermanentError(
            "support admits no perfect matching; permanent is zero and the "
            "matrix cannot be scaled to doubly stochastic"
        )

    b = a.data.copy()
    log_x = np.zeros(n)
    log_y = np.zeros(n)

    rep = classify(a, tol)
    if rep.is_doubly_stochastic:
        return _result(a, log_x, log_y, iterations=0)

    residual = max(rep.row_sum_deviation, rep.col_sum_deviation)
    for it in range(1, max_iter + 1):
        r = b.sum(axis=1)
        b /= r[:, None]
        log_x -= np.log(r)
        c = b.sum(axis=0)
        residual = float(np.max(np.abs(c - 1.0)))
        if residual <= tol:
            return _result(a, log_x, log_y, iterations=it)
        b /= c[None, :]
        log_y -= np.log(c)

    raise NonConvergenceError(
        f"Sinkhorn did not reach tol={tol} in {max_iter} iterations "
        f"(best residual {residual:.3e})",
        partial=_result(a, log_x, log_y, iterations=max_iter),
    )


def _result(a, log_x, log_y, iterations):
    # rebuild the scaled matrix from the factors so the entries match
    # x_i * a_ij * y_j to the last ulp
    x = np.exp(log_x)
    y = np.exp(log_y)
    entries = a.data * x[:, None] * y[None, :]
    row_dev = float(np.max(np.abs(entries.sum(axis=1) - 1.0)))
    col_dev = float(np.max(np.abs(entries.sum(axis=0) - 1.0)))
    return ScalingResult(
        row_factors=x,
        col_factors=y,
        scaled=Matrix(entries),
        residual=max(row_dev, col_dev),
        iterations=iterations,
        log_factor_product=float(log_x.sum() + log_y.sum()),
    )


def scaling_relation_check(a, r: ScalingResult) -> float:
    """|log Per(A) - (log Per(B) - log factor product)| via the exact oracle.

    Exercises the identity Per(A) = Per(B) / (prod x_i prod y_j) on both
    sides with Ryser, so n must be within its budget.
    """
    a = as_matrix(a)
    lhs = permanent_ryser(a)
    rhs = permanent_ryser(r.scaled)
    if lhs.is_zero or rhs.is_zero:
        raise ZeroPermanentError("scaling relation undefined for zero permanent")
    return abs(lhs.log_value - (rhs.log_value - r.log_factor_product))
