"""Matrix ensembles used by the CLI, the benchmarks, and the test suite.

Covers the named extremal objects (the 2x2-block matrix, the cycle
adjacency) and the random families: Sinkhorn-projected positive matrices,
line-sum-k integer samples, row-stochastic matrices, and Bernoulli 0/1
matrices.
"""

from __future__ import annotations

import re

import numpy as np

from .dimers import sample_lambda
from .errors import DomainError
from .matrix import Matrix
from .scaling import sinkhorn_scale

__all__ = [
    "block_a1",
    "cycle_a2",
    "random_positive",
    "ds_random",
    "random_row_stochastic",
    "random_stochastic_vector",
    "zero_one_density",
    "make_generator",
    "ENSEMBLE_NAMES",
]


def block_a1(n: int) -> Matrix:
    """0/1 block-diagonal matrix with n/2 all-ones 2x2 blocks (n even).

    Two ones per line; its permanent is 2^(n/2), the largest possible for
    that line profile.
    """
    if n < 2 or n % 2:
        raise DomainError("block matrix needs even n >= 2")
    return Matrix(np.kron(np.eye(n // 2), np.ones((2, 2))))


def cycle_a2(n: int) -> Matrix:
    """Bipartite adjacency of the 2n-cycle: ones on the diagonal and the
    first superdiagonal (wrapped).  Two ones per line; permanent 2."""
    if n < 2:
        raise DomainError("cycle matrix needs n >= 2")
    eye = np.eye(n)
    return Matrix(np.clip(eye + np.roll(eye, 1, axis=1), 0.0, 1.0))


def random_positive(n: int, rng) -> Matrix:
    return Matrix(rng.random((n, n)))


def ds_random(n: int, rng, tol: float = 1e-9) -> Matrix:
    """Sinkhorn projection of a uniform positive matrix: the workhorse
    random doubly stochastic ensemble."""
    return sinkhorn_scale(random_positive(n, rng), tol=tol).scaled


def random_row_stochastic(n: int, rng) -> Matrix:
    x = rng.random((n, n))
    return Matrix(x / x.sum(axis=1, keepdims=True))


def random_stochastic_vector(dim: int, rng, alpha: float | None = None):
    """Nonnegative vector summing to 1; a Dirichlet concentration < 1
    produces spiky vectors, None means uniform-then-normalize."""
    if alpha is None:
        x = rng.random(dim)
        return x / x.sum()
    return rng.dirichlet(np.full(dim, alpha))


def zero_one_density(n: int, q: float, rng) -> Matrix:
    if not 0.0 <= q <= 1.0:
        raise DomainError("density must lie in [0,1]")
    return Matrix((rng.random((n, n)) < q).astype(float))


ENSEMBLE_NAMES = (
    "ds-random",
    "lambda-k",
    "block-a1",
    "cycle-a2",
    "zero-one-density(q)",
)


def make_generator(spec: str, n: int, rng, k: int | None = None):
    """Yield matrices for an ensemble spec string.

    Deterministic ensembles (block-a1, cycle-a2) yield their single matrix
    once; random ones yield forever and the caller takes what it needs.
    """
    name, arg = _parse_spec(spec)
    if name == "block-a1":
        yield block_a1(n)
        return
    if name == "cycle-a2":
        yield cycle_a2(n)
        return
    if name == "ds-random":
        while True:
            yield ds_random(n, rng)
    elif name == "lambda-k":
        if k is None:
            raise DomainError("lambda-k ensemble needs k")
        while True:
            yield sample_lambda(k, n, rng)
    elif name == "zero-one-density":
        if arg is None:
            raise DomainError("zero-one-density needs a density, e.g. zero-one-density(0.5)")
        while True:
            yield zero_one_density(n, arg, rng)
    elif name == "row-stochastic":
        while True:
            yield random_row_stochastic(n, rng)
    else:
        raise DomainError(f"unknown ensemble {spec!r}")


def _parse_spec(spec: str):
    m = re.fullmatch(r"([a-z0-9-]+)(?:\(([^)]*)\))?", spec.strip())
    if not m:
        raise DomainError(f"bad ensemble spec {spec!r}")
    name, arg = m.group(1), m.group(2)
    if arg is not None:
        try:
            arg = float(arg)
        except ValueError as exc:
            raise DomainError(f"bad ensemble argument in {spec!r}") from exc
    return name, arg
