"""Exact permanent and matching-count oracles at desk scale.

All results are reported in natural-log domain with an explicit zero marker:
products like n!/n^n underflow doubles near n = 20, and every bound in this
package is a log quantity anyway.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import DomainError, SizeLimitError
from .matrix import Matrix, as_matrix, support_has_perfect_matching

__all__ = [
    "PermanentValue",
    "permanent_bruteforce",
    "permanent_ryser",
    "per_m_direct",
    "per_m_via_block",
    "per_m_budget",
    "BRUTEFORCE_MAX_N",
    "RYSER_MAX_N",
]

BRUTEFORCE_MAX_N = 8
RYSER_MAX_N = 24
# per_m_direct: binomial(n,m)^2 * m! products must stay below this
PER_M_DIRECT_BUDGET = 5 * 10**7


@dataclass(frozen=True)
class PermanentValue:
    """Permanent in natural-log domain; log_value is -inf iff is_zero."""

    log_value: float
    is_zero: bool

    @property
    def value(self) -> float:
        """Linear-domain value; may overflow to inf for large inputs."""
        return 0.0 if self.is_zero else math.exp(self.log_value)

    @staticmethod
    def zero() -> "PermanentValue":
        return PermanentValue(log_value=float("-inf"), is_zero=True)

    @staticmethod
    def from_log(log_value: float) -> "PermanentValue":
        if not math.isfinite(log_value):
            raise DomainError("finite log required; use PermanentValue.zero()")
        return PermanentValue(log_value=log_value, is_zero=False)


def permanent_bruteforce(a) -> PermanentValue:
    """Permanent by summing over all n! permutations, n <= 8.

    Products of nonnegative entries accumulate without cancellation, so the
    plain sum is exact up to rounding and zero means zero.
    """
    a = as_matrix(a)
    n = a.require_square("permanent")
    if n > BRUTEFORCE_MAX_N:
        raise SizeLimitError(
            f"brute-force permanent capped at n={BRUTEFORCE_MAX_N}, got n={n}"
        )
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    prods = a.data[np.arange(n), perms].prod(axis=1)
    total = float(math.fsum(prods.tolist()))
    if total <= 0.0:
        return PermanentValue.zero()
    return PermanentValue.from_log(math.log(total))


def permanent_ryser(a) -> PermanentValue:
    """Permanent by Ryser's inclusion-exclusion over column subsets, n <= 24.

    Subsets are walked in Gray-code order with incremental row-sum updates.
    The matrix is pre-scaled by its largest entry to keep the signed sum in
    range; the log of the correction is re-applied at the end.  Support
    without a perfect matching short-circuits to an exact zero, so the
    signed sum never has to distinguish zero from cancellation noise.
    """
    a = as_matrix(a)
    n = a.require_square("permanent")
    if n > RYSER_MAX_N:
        raise SizeLimitError(f"Ryser permanent capped at n={RYSER_MAX_N}, got n={n}")
    scale = float(a.data.max())
    if scale == 0.0 or not support_has_perfect_matching(a):
        return PermanentValue.zero()
    total = _kernels.ryser_sum(np.ascontiguousarray(a.data / scale))
    if total <= 0.0:
        # cancellation noise on a structurally positive permanent
        return PermanentValue.zero()
    return PermanentValue.from_log(math.log(total) + n * math.log(scale))


def per_m_budget(n: int, m: int) -> float:
    """Work estimate for the direct route: binomial(n,m)^2 * m!."""
    return math.comb(n, m) ** 2 * math.factorial(m)


def per_m_direct(a, m: int) -> PermanentValue:
    """Sum of permanents of all m x m submatrices, by enumeration.

    Every pair of an m-row-subset and an m-column-subset contributes the
    exact permanent of the corresponding submatrix, itself expanded over
    all m! permutations.  Deliberately independent of the Ryser code path
    so the two can cross-check each other.
    """
    a = as_matrix(a)
    n = a.require_square("per_m")
    _check_m(n, m)
    if per_m_budget(n, m) > PER_M_DIRECT_BUDGET:
        raise SizeLimitError(
            f"per_m_direct budget exceeded for n={n}, m={m} "
            f"({per_m_budget(n, m):.2e} products)"
        )
    scale = float(a.data.max())
    if scale == 0.0:
        return PermanentValue.zero()
    total = _kernels.per_m_enumerate(
        np.ascontiguousarray(a.data / scale),
        _combination_array(n, m),
        _combination_array(n, m),
        _permutation_array(m),
    )
    if total <= 0.0:
        return PermanentValue.zero()
    return PermanentValue.from_log(math.log(total) + m * math.log(scale))


def per_m_via_block(a, m: int) -> PermanentValue:
    """Per_m as a single permanent of the bordered block matrix.

    Per_m(A) = Per(L) / ((n-m)!)^2 with L = [[A, J], [J^T, 0]] where J is
    the n x (n-m) all-ones block; computed with the Ryser oracle, so
    2n - m must stay within its budget.
    """
    a = as_matrix(a)
    n = a.require_square("per_m")
    _check_m(n, m)
    k = n - m
    if 2 * n - m > RYSER_MAX_N:
        raise SizeLimitError(
            f"block route needs Ryser on size {2 * n - m} > {RYSER_MAX_N}"
        )
    if k == 0:
        return permanent_ryser(a)
    big = np.zeros((2 * n - m, 2 * n - m))
    big[:n, :n] = a.data
    big[:n, n:] = 1.0
    big[n:, :n] = 1.0
    per_l = permanent_ryser(Matrix(big))
    if per_l.is_zero:
        return PermanentValue.zero()
    return PermanentValue.from_log(per_l.log_value - 2.0 * math.lgamma(k + 1))


@lru_cache(maxsize=64)
def _combination_array(n: int, m: int) -> np.ndarray:
    out = np.array(list(itertools.combinations(range(n), m)), dtype=np.int64)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _permutation_array(m: int) -> np.ndarray:
    out = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    out.setflags(write=False)
    return out


def _check_m(n: int, m) -> None:
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool):
        raise DomainError(f"m must be an integer, got {m!r}")
    if not 1 <= m <= n:
        raise DomainError(f"m must satisfy 1 <= m <= n={n}, got m={m}")
