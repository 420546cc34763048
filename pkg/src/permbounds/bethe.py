"""Bethe-approximation machinery for the permanent.

The central quantity is the log of the Bethe functional
``sum_ij (1 - a_ij) * ln(1 - a_ij)`` of a doubly stochastic matrix, which
sandwiches the log permanent within an additive n*ln(2).  The CW functional
extends it with a relative-entropy term so the bound applies to arbitrary
nonnegative matrices through any doubly stochastic reference point, and its
maximization over the Birkhoff polytope is a concave program solved here by
Frank-Wolfe with an exact assignment oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar
from scipy.special import xlogy

from .errors import DomainError, NonConvergenceError, ZeroPermanentError
from .matrix import Matrix, as_matrix, classify, support_has_perfect_matching
from .scaling import ScalingResult, sinkhorn_scale

__all__ = [
    "BoundReport",
    "BetheSolution",
    "bethe_functional",
    "cw_functional",
    "cw_gradient",
    "lower_bound_general",
    "approximate_permanent",
    "maximize_bethe",
    "relative_entropy_relaxation",
    "product_relaxation",
    "schrijver_lower",
]

LN2 = math.log(2.0)

# Frank-Wolfe steps are clipped to this so entries never touch 0 or 1,
# where the gradient blows up.
_GAMMA_MAX = 1.0 - 1e-12
# stand-in magnitude for infinite gradient entries in the assignment oracle
_GRAD_CAP = 1e18


@dataclass(frozen=True)
class BoundReport:
    """Certified interval and point estimate for a log permanent."""

    log_lower: float
    log_upper: float
    log_estimate: float
    log_exact: float | None
    scaling_residual: float
    n: int
    degraded: bool = False

    def to_dict(self):
        return {
            "log_lower": self.log_lower,
            "log_upper": self.log_upper,
            "log_estimate": self.log_estimate,
            "log_exact": self.log_exact,
            "scaling_residual": self.scaling_residual,
            "n": self.n,
            "degraded": self.degraded,
            "log2_lower": self.log_lower / LN2,
            "log2_upper": self.log_upper / LN2,
        }


@dataclass(frozen=True)
class BetheSolution:
    """Outcome of a concave maximization over the doubly stochastic set."""

    maximizer: Matrix
    objective: float
    iterations: int
    duality_gap_estimate: float

    def to_dict(self):
        return {
            "maximizer": self.maximizer.data.tolist(),
            "objective": self.objective,
            "iterations": self.iterations,
            "duality_gap_estimate": self.duality_gap_estimate,
        }


def bethe_functional(a, tol: float = 1e-9) -> float:
    """log of prod_ij (1 - a_ij)^(1 - a_ij) with the 0^0 = 1 convention.

    Entries must lie in [0, 1]; values within ``tol`` above 1 (residue of
    finite scaling) are treated as exactly 1 and contribute nothing.
    """
    a = as_matrix(a)
    d = a.data
    if np.any(d > 1.0 + tol):
        raise DomainError(
            f"Bethe functional needs entries <= 1, max entry {d.max():.6g}"
        )
    one_minus = np.clip(1.0 - d, 0.0, 1.0)
    return float(xlogy(one_minus, one_minus).sum())


def _cw_value(p: np.ndarray, q: np.ndarray) -> float:
    one_minus = np.clip(1.0 - q, 0.0, 1.0)
    entropy = float(xlogy(one_minus, one_minus).sum())
    on = q > 0.0
    if np.any(on & (p <= 0.0)):
        return float("-inf")
    qs = q[on]
    rel = float((qs * (np.log(qs) - np.log(p[on]))).sum())
    return entropy - rel


def cw_functional(p, q, tol: float = 1e-9) -> float:
    """sum (1-q) ln(1-q) - sum q ln(q/p) with 0 ln 0 = 0.

    Positive q over a zero p entry makes the value -inf (a valid output,
    not an error).  Doubly stochastic q is the caller's obligation; entry
    domains are checked here.
    """
    p = as_matrix(p)
    q = as_matrix(q)
    if p.shape != q.shape:
        raise DomainError(f"shape mismatch {p.shape} vs {q.shape}")
    if np.any(q.data > 1.0 + tol):
        raise DomainError("q entries must be <= 1")
    return _cw_value(p.data, np.minimum(q.data, 1.0))


def cw_gradient(p, q) -> np.ndarray:
    """Entry-wise partials -2 - ln(1-q) - ln(q) + ln(p).

    Requires 0 < q < 1 wherever p is positive; entries over zero p come
    back -inf.
    """
    p = as_matrix(p)
    q = as_matrix(q)
    if p.shape != q.shape:
        raise DomainError(f"shape mismatch {p.shape} vs {q.shape}")
    pd, qd = p.data, q.data
    on = pd > 0.0
    if np.any(on & ((qd <= 0.0) | (qd >= 1.0))):
        raise DomainError("gradient undefined: q at {0,1} on the support of p")
    g = np.full(pd.shape, float("-inf"))
    g[on] = -2.0 - np.log1p(-qd[on]) - np.log(qd[on]) + np.log(pd[on])
    return g


def _cw_grad_capped(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Gradient with infinities replaced by large finite sentinels, for the
    assignment oracle."""
    g = np.full(p.shape, -_GRAD_CAP)
    on = p > 0.0
    qs = np.clip(q[on], 1e-300, 1.0 - 1e-16)
    g[on] = -2.0 - np.log1p(-qs) - np.log(qs) + np.log(p[on])
    return np.clip(g, -_GRAD_CAP, _GRAD_CAP)


def lower_bound_general(a, b, tol: float = 1e-7) -> float:
    """Log lower bound on Per(a) from any doubly stochastic reference b.

    This is the CW functional, re-exposed with the reference point
    validated as doubly stochastic so it may be quoted as a bound.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    rep = classify(b, tol)
    if not rep.is_doubly_stochastic:
        raise DomainError(
            "reference matrix is not doubly stochastic at tolerance "
            f"{tol:g} (row dev {rep.row_sum_deviation:.3g}, "
            f"col dev {rep.col_sum_deviation:.3g})"
        )
    return cw_functional(a, b)


def approximate_permanent(a, tol: float = 1e-9) -> BoundReport:
    """Scale to doubly stochastic, evaluate the Bethe functional, undo the
    scaling: a point estimate that certifies Per within a factor of 2^n.

    A non-convergent scaling still yields a report, flagged degraded, with
    the residual recorded so callers can judge the slack themselves.
    """
    a = as_matrix(a)
    n = a.require_square("permanent approximation")
    degraded = False
    try:
        scaling = sinkhorn_scale(a, tol=tol)
    except NonConvergenceError as exc:
        scaling = exc.partial
        degraded = True
    estimate = (
        bethe_functional(scaling.scaled, tol=max(1e-9, 2.0 * scaling.residual))
        - scaling.log_factor_product
    )
    return BoundReport(
        log_lower=estimate,
        log_upper=estimate + n * LN2,
        log_estimate=estimate,
        log_exact=None,
        scaling_residual=scaling.residual,
        n=n,
        degraded=degraded,
    )


def _start_point(a: Matrix) -> ScalingResult:
    """Frank-Wolfe start: the Sinkhorn image when the matrix is fully
    supported, otherwise the scaled uniform-on-support point."""
    target = a
    if np.any(a.data <= 0.0):
        target = Matrix((a.data > 0.0).astype(float))
    try:
        return sinkhorn_scale(target, tol=1e-10, max_iter=10_000)
    except NonConvergenceError as exc:
        return exc.partial


def _resolve_start(a: Matrix, start) -> np.ndarray:
    if start is None:
        return _start_point(a).scaled.data
    start = as_matrix(start)
    rep = classify(start, tol=1e-7)
    if not rep.is_doubly_stochastic:
        raise DomainError("start point must be doubly stochastic")
    if np.any((start.data > 0.0) & (a.data <= 0.0)):
        raise DomainError("start point carries mass outside the support")
    return start.data


def _frank_wolfe(value_fn, grad_fn, q0, max_iter, gap_tol):
    q = np.array(q0, dtype=float)
    value = value_fn(q)
    gap = float("inf")
    steps = 0
    for _ in range(max_iter):
        g = grad_fn(q)
        rows, cols = linear_sum_assignment(g, maximize=True)
        vertex = np.zeros_like(q)
        vertex[rows, cols] = 1.0
        direction = vertex - q
        gap = float((g * direction).sum())
        if gap <= gap_tol:
            break
        res = minimize_scalar(
            lambda t: -value_fn(q + t * direction),
            bounds=(0.0, _GAMMA_MAX),
            method="bounded",
            options={"xatol": 1e-12},
        )
        gamma = float(res.x)
        new_q = q + gamma * direction
        new_value = value_fn(new_q)
        if not new_value >= value:
            break  # line search hit numerical noise; current point is final
        q, value = new_q, new_value
        steps += 1
    return q, value, steps, gap


def maximize_bethe(
    a, max_iter: int = 2000, gap_tol: float = 1e-7, start=None
) -> BetheSolution:
    """Maximize the CW functional over doubly stochastic matrices.

    Frank-Wolfe over the Birkhoff polytope: each step maximizes the
    linearized objective with an exact assignment solver and moves by an
    exact line search on the 1-d concave restriction (clipped so entries
    stay strictly inside (0,1) on the support).  Stops at the requested
    duality gap or the iteration cap, whichever first; the gap at exit is
    reported as the optimality certificate.

    ``start`` overrides the default start point (the Sinkhorn image); it
    must be doubly stochastic with no mass outside the support of ``a``.
    """
    a = as_matrix(a)
    a.require_square("Bethe maximization")
    if not support_has_perfect_matching(a):
        raise ZeroPermanentError(
            "no feasible doubly stochastic matrix on this support"
        )
    pd = a.data
    q0 = _resolve_start(a, start)
    q, value, steps, gap = _frank_wolfe(
        value_fn=lambda qq: _cw_value(pd, qq),
        grad_fn=lambda qq: _cw_grad_capped(pd, qq),
        q0=q0,
        max_iter=max_iter,
        gap_tol=gap_tol,
    )
    return BetheSolution(
        maximizer=Matrix(q),
        objective=value,
        iterations=steps,
        duality_gap_estimate=gap,
    )


def _entropy_value(p: np.ndarray, q: np.ndarray) -> float:
    on = q > 0.0
    if np.any(on & (p <= 0.0)):
        return float("-inf")
    qs = q[on]
    return float((qs * (np.log(p[on]) - np.log(qs))).sum())


def _entropy_grad_capped(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    g = np.full(p.shape, -_GRAD_CAP)
    on = p > 0.0
    qs = np.clip(q[on], 1e-300, None)
    g[on] = np.log(p[on]) - np.log(qs) - 1.0
    return np.clip(g, -_GRAD_CAP, _GRAD_CAP)


def relative_entropy_relaxation(
    a, max_iter: int = 2000, gap_tol: float = 1e-7, start=None
) -> BetheSolution:
    """Maximize sum_ij b_ij ln(a_ij / b_ij) over doubly stochastic b.

    The optimal value equals the log of the inverse Sinkhorn factor
    product, which makes this an independent check on the scaling; it
    shares the Frank-Wolfe engine of :func:`maximize_bethe` with a
    different objective/gradient pair and the same ``start`` override.
    """
    a = as_matrix(a)
    a.require_square("relative-entropy relaxation")
    if not support_has_perfect_matching(a):
        raise ZeroPermanentError(
            "no feasible doubly stochastic matrix on this support"
        )
    pd = a.data
    q0 = _resolve_start(a, start)
    q, value, steps, gap = _frank_wolfe(
        value_fn=lambda qq: _entropy_value(pd, qq),
        grad_fn=lambda qq: _entropy_grad_capped(pd, qq),
        q0=q0,
        max_iter=max_iter,
        gap_tol=gap_tol,
    )
    return BetheSolution(
        maximizer=Matrix(q),
        objective=value,
        iterations=steps,
        duality_gap_estimate=gap,
    )


def product_relaxation(a, tol: float = 1e-8, max_iter: int = 20_000) -> float:
    """Infimum of ln prod_i (sum_j a_ij e^{x_j}) over zero-sum x.

    Projected gradient descent on the zero-sum hyperplane with a
    Barzilai-Borwein step and Armijo backtracking.  The optimum equals the
    log of the inverse Sinkhorn factor product.  ``tol`` bounds the
    infinity norm of the projected gradient at exit.
    """
    a = as_matrix(a)
    n = a.require_square("product relaxation")
    d = a.data
    if np.any(d.sum(axis=1) <= 0.0):
        raise DomainError("every row needs a positive sum")
    if not support_has_perfect_matching(a):
        raise ZeroPermanentError("zero permanent: relaxation unbounded below")

    def value_grad(x):
        w = d * np.exp(x)[None, :]
        r = w.sum(axis=1)
        return float(np.log(r).sum()), (w / r[:, None]).sum(axis=0)

    x = np.zeros(n)
    f, g = value_grad(x)
    gp = g - g.mean()
    step = 1.0
    prev_x = None
    prev_gp = None
    for _ in range(max_iter):
        if np.max(np.abs(gp)) <= tol:
            return f
        if prev_x is not None:
            s = x - prev_x
            yv = gp - prev_gp
            sy = float(s @ yv)
            if sy > 0:
                step = min(max(float(s @ s) / sy, 1e-10), 1e8)
        # Armijo backtracking along the projected steepest descent direction
        gnorm2 = float(gp @ gp)
        t = step
        for _bt in range(60):
            xn = x - t * gp
            fn, gn = value_grad(xn)
            if fn <= f - 1e-4 * t * gnorm2:
                break
            t *= 0.5
        else:
            return f  # no progress possible at machine precision
        prev_x, prev_gp = x, gp
        x, f, g = xn, fn, gn
        x = x - x.mean()  # stay on the hyperplane against drift
        gp = g - g.mean()
    raise NonConvergenceError(
        f"product relaxation not stationary after {max_iter} iterations "
        f"(grad inf-norm {np.max(np.abs(gp)):.3e})",
        best_value=f,
    )


def schrijver_lower(b, tol: float = 1e-7):
    """Entry-wise map b -> b(1-b) together with the log bound sum ln(1-b).

    Returns the transformed matrix and the bound, which is a valid log
    lower bound for its permanent; -inf (zero bound) when some entry is 1.
    """
    b = as_matrix(b)
    rep = classify(b, tol)
    if not rep.is_doubly_stochastic:
        raise DomainError("input must be doubly stochastic at tolerance")
    bd = np.minimum(b.data, 1.0)
    transformed = Matrix(bd * (1.0 - bd))
    with np.errstate(divide="ignore"):
        bound = float(np.log1p(-bd).sum())
    return transformed, bound
