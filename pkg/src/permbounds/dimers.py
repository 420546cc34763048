"""Monomer-dimer computations on k-regular bipartite multigraph matrices.

The matrix class of interest has every row and column summing to the
integer k.  Samples come from the permutation-block construction: draw a
uniform permutation of kn points, view its 0/1 matrix as a k x k grid of
n x n blocks, and add the blocks entrywise.  For these matrices the count
of m-edge matchings (sum of permanents of m x m submatrices) admits an
explicit log lower bound and an explicit growth-rate limit as n grows with
the density m/n fixed, both implemented here alongside desk-scale
empirical checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import DomainError, SizeLimitError
from .exact import (
    PER_M_DIRECT_BUDGET,
    RYSER_MAX_N,
    PermanentValue,
    per_m_budget,
    per_m_direct,
    per_m_via_block,
)
from .matrix import Matrix, as_matrix

__all__ = [
    "DimerInstance",
    "DimerBoundReport",
    "sample_lambda",
    "per_m_auto",
    "friedland_lower_bound",
    "friedland_limit_beta",
    "proposition_friedland_check",
    "evaluate_instance",
    "sample_mean_log_per_m",
    "empirical_beta",
]

# prefer direct enumeration below this work estimate, the bordered-block
# route above it
PER_M_ROUTE_CUTOFF = 10**7


@dataclass(frozen=True)
class DimerInstance:
    """An (n, k, m) triple plus a line-sum-k integer matrix."""

    n: int
    k: int
    m: int
    matrix: Matrix

    def __post_init__(self):
        if not 1 <= self.m <= self.n:
            raise DomainError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        d = self.matrix.data
        if d.shape != (self.n, self.n):
            raise DomainError("matrix shape disagrees with n")
        if np.any(d != np.round(d)):
            raise DomainError("entries must be integers")
        if np.any(d.sum(axis=0) != self.k) or np.any(d.sum(axis=1) != self.k):
            raise DomainError(f"all line sums must equal k={self.k}")


@dataclass(frozen=True)
class DimerBoundReport:
    log_per_m: float
    log_lower_bound: float
    p: float
    limit_beta: float


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_lambda(k: int, n: int, seed=None) -> Matrix:
    """One sample from the permutation-block distribution on line-sum-k
    integer matrices.

    A uniform permutation of kn points (Fisher-Yates under the hood, via
    numpy's seedable stream-stable generator) is folded block-wise: entry
    (r, c) counts the i with i = r (mod n) mapped to p(i) = c (mod n).
    Row and column sums come out exactly k by construction.
    """
    if k < 1 or n < 1:
        raise DomainError("k and n must be positive")
    rng = _as_rng(seed)
    p = rng.permutation(k * n)
    a = np.zeros((n, n))
    np.add.at(a, (np.arange(k * n) % n, p % n), 1.0)
    return Matrix(a)


def per_m_auto(a, m: int) -> PermanentValue:
    """Count m-edge matchings by whichever exact route fits the budget."""
    a = as_matrix(a)
    n = a.require_square("per_m")
    if per_m_budget(n, m) < PER_M_ROUTE_CUTOFF:
        return per_m_direct(a, m)
    return per_m_via_block(a, m)


def friedland_lower_bound(n: int, m: int, k: int) -> float:
    """Log lower bound on the m-matching count over all line-sum-k integer
    matrices, at p = m/n:

        n(k-p) ln((k-p)/k) + 2 n^2 (1-p) (1-1/n) ln(1-1/n)
          - n p ln(p/k) + 2 n (1-p) ln(n) - 2 ln((n(1-p))!)

    n(1-p) = n - m is an integer whenever m is, but the factorial goes
    through log-gamma anyway so the formula stays smooth in its arguments.
    """
    if n < 1 or k < 1:
        raise DomainError("n and k must be positive")
    if not 1 <= m <= n:
        raise DomainError(f"need 1 <= m <= n, got m={m}, n={n}")
    p = m / n
    kp = k - p
    t1 = n * float(xlogy(kp, kp / k))
    t2 = 2.0 * n * n * (1.0 - p) * float(xlogy(1.0 - 1.0 / n, 1.0 - 1.0 / n))
    t3 = -n * p * math.log(p / k)
    t4 = 2.0 * n * (1.0 - p) * math.log(n)
    t5 = -2.0 * math.lgamma(n * (1.0 - p) + 1.0)
    return t1 + t2 + t3 + t4 + t5


def friedland_limit_beta(p: float, k: int) -> float:
    """Exponential growth rate p ln(k/p) - 2(1-p) ln(1-p) + (k-p) ln(1-p/k)
    of the expected m-matching count at dimer density p, extended by
    continuity at p = 0 and p = 1."""
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0,1]")
    if k < 1:
        raise DomainError("k must be positive")
    if p == 0.0:
        return 0.0
    t1 = p * math.log(k / p)
    t2 = -2.0 * float(xlogy(1.0 - p, 1.0 - p))
    t3 = float(xlogy(k - p, 1.0 - p / k))
    return t1 + t2 + t3


def proposition_friedland_check(p_vec) -> float:
    """Margin of prod (1-p_i)^(1-p_i) >= (1-b)^(k(1-b)), b the mean.

    Returns log LHS - log RHS; convexity of (1-x) ln(1-x) makes it
    nonnegative, with equality on constant vectors.
    """
    p = np.atleast_1d(np.asarray(p_vec, dtype=float))
    if np.any((p < 0.0) | (p > 1.0)):
        raise DomainError("entries must lie in [0,1]")
    k = p.size
    b = float(p.mean())
    lhs = float(xlogy(1.0 - p, 1.0 - p).sum())
    rhs = k * float(xlogy(1.0 - b, 1.0 - b))
    return lhs - rhs


def evaluate_instance(inst: DimerInstance) -> DimerBoundReport:
    value = per_m_auto(inst.matrix, inst.m)
    p = inst.m / inst.n
    return DimerBoundReport(
        log_per_m=value.log_value,
        log_lower_bound=friedland_lower_bound(inst.n, inst.m, inst.k),
        p=p,
        limit_beta=friedland_limit_beta(p, inst.k),
    )


def sample_mean_log_per_m(k: int, n: int, m: int, samples: int, seed=None) -> float:
    """ln of the sample mean of the m-matching count over the
    permutation-block distribution.

    The mean is taken in the linear domain after a max-log shift, with
    compensated summation, so the reduction is stable and order
    independent.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = _as_rng(seed)
    logs = []
    for _ in range(samples):
        a = sample_lambda(k, n, rng)
        logs.append(per_m_auto(a, m).log_value)
    shift = max(logs)
    if shift == float("-inf"):
        return float("-inf")
    mean = math.fsum(math.exp(v - shift) for v in logs) / samples
    return shift + math.log(mean)


def empirical_beta(k: int, p: float, n_list, samples: int, seed=None):
    """Per-dimension growth-rate estimates (1/n) ln mean(Per_m), m = round(pn).

    Deterministic given the seed: each n draws from its own spawned
    substream.  Raises before sampling if any n puts the block route past
    the exact-oracle budget.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0,1]")
    n_list = list(n_list)
    for n in n_list:
        m = int(round(p * n))
        if not 1 <= m <= n:
            raise DomainError(f"m = round(p*n) = {m} out of range for n={n}")
        if 2 * n - m > RYSER_MAX_N and per_m_budget(n, m) > PER_M_DIRECT_BUDGET:
            raise SizeLimitError(f"no exact route for n={n}, m={m}")
    streams = np.random.SeedSequence(seed).spawn(len(n_list))
    out = []
    for n, ss in zip(n_list, streams):
        m = int(round(p * n))
        log_mean = sample_mean_log_per_m(
            k, n, m, samples, np.random.default_rng(ss)
        )
        out.append((n, log_mean / n))
    return out
