"""Orlicz-norm upper bounds for the permanent and their companions.

A convex increasing function psi mapping [0,1] onto itself defines a norm
through the Luxemburg recipe: ||v|| is the scale s at which the entries
v_i/s, pushed through psi, sum to one.  For suitable psi (monotone ratio
conditions plus a one-dimensional inequality, all checkable on a grid) the
permanent of any nonnegative matrix is at most the product of the psi-norms
of its rows.  The workhorse family is psi_a(x) = 1 - (1-x) a^x with the
parameter chosen so that (1 - ln a)/a = 1/e; the classical 0/1-matrix
factorial bound and its concave interpolant phi0 live here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import digamma, gammaln, polygamma, xlogy

from .bethe import bethe_functional
from .errors import DomainError
from .matrix import as_matrix

__all__ = [
    "PsiFunction",
    "PsiConditionReport",
    "BregmanBound",
    "solve_root_a",
    "psi_eval",
    "orlicz_norm",
    "verify_psi_conditions",
    "upper_bound_orlicz",
    "min_row_constant",
    "bethe_upper_bound",
    "bregman_bound",
    "phi0_eval",
    "unit_extension_norm",
]

E_INV = 1.0 / math.e
# Lemma endpoint constant e^(1/e): arguments of psi_a in the row bound never
# exceed it relative to the row's Bethe weight.
E_TO_E_INV = math.exp(E_INV)


@lru_cache(maxsize=1)
def solve_root_a() -> float:
    """The unique a in [1, e] with (1 - ln a)/a = 1/e, approx 1.54.

    (1 - ln a)/a is strictly decreasing on [1, e^2], so plain bisection to
    an interval of 1e-14 suffices.
    """
    lo, hi = 1.0, math.e
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (1.0 - math.log(mid)) / mid - E_INV > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14:
            break
    return 0.5 * (lo + hi)


class PsiFunction:
    """One of three convex increasing bijections of [0,1] with derivative
    procedures: the a-parameterized family 1 - (1-x) a^x, plain powers x^p,
    and the inverse of the factorial interpolant phi0.

    Instances are immutable; evaluation is vectorized over numpy arrays.
    """

    def __init__(self, kind: str, param: float | None = None):
        if kind == "psi_a":
            param = solve_root_a() if param is None else float(param)
            if not 1.0 < param < math.e:
                raise DomainError("psi_a parameter must lie in (1, e)")
        elif kind == "power":
            if param is None or param < 1.0:
                raise DomainError("power kind needs exponent p >= 1")
            param = float(param)
        elif kind == "phi0_inverse":
            if param is not None:
                raise DomainError("phi0_inverse takes no parameter")
        else:
            raise DomainError(f"unknown psi kind {kind!r}")
        self.kind = kind
        self.param = param
        # coarse bracket table for inverting psi_a (no closed form)
        if kind == "psi_a":
            xs = np.linspace(0.0, 1.0, 257)
            self._inv_table = (xs, self._eval_raw(xs, 0))
        self._check_shape()

    def _check_shape(self):
        if abs(float(self._eval_raw(np.array(0.0), 0))) > 1e-12:
            raise DomainError("psi(0) must be 0")
        if abs(float(self._eval_raw(np.array(1.0), 0)) - 1.0) > 1e-12:
            raise DomainError("psi(1) must be 1")
        grid = np.linspace(0.0, 1.0, 257)
        vals = self._eval_raw(grid, 0)
        if np.any(np.diff(vals) < 0.0):
            raise DomainError("psi must be increasing on [0,1]")

    # -- evaluation ---------------------------------------------------

    def _eval_raw(self, x, order):
        x = np.asarray(x, dtype=float)
        if self.kind == "psi_a":
            b = math.log(self.param)
            ax = np.exp(b * x)
            if order == 0:
                return 1.0 - (1.0 - x) * ax
            if order == 1:
                return (1.0 - (1.0 - x) * b) * ax
            if order == 2:
                return b * (2.0 - (1.0 - x) * b) * ax
            return b * b * (3.0 - (1.0 - x) * b) * ax
        if self.kind == "power":
            p = self.param
            if order == 0:
                return x**p
            coef = p
            for i in range(1, order):
                coef *= p - i
            with np.errstate(divide="ignore"):
                return coef * x ** (p - order)
        return self._phi0_inverse_eval(x, order)

    def _phi0_inverse_eval(self, x, order):
        t = _invert_phi0(x)
        if order == 0:
            return t
        w = 1.0 + 1.0 / np.maximum(t, 1e-300)
        u1 = -gammaln(w) + digamma(w) / t
        u2 = -polygamma(1, w) / t**3
        u3 = polygamma(2, w) / t**5 + 3.0 * polygamma(1, w) / t**4
        phi = np.exp(-t * gammaln(w))
        d1 = phi * u1
        if order == 1:
            return 1.0 / d1
        d2 = phi * (u2 + u1**2)
        if order == 2:
            return -d2 / d1**3
        d3 = phi * (u3 + 3.0 * u1 * u2 + u1**3)
        return (3.0 * d2**2 - d1 * d3) / d1**5

    def __call__(self, x):
        return self._eval_raw(x, 0)

    def eval(self, x, order: int = 0):
        return self._eval_raw(x, order)

    def inverse(self, y):
        """phi = psi^{-1} on [0,1]; bisection where no closed form exists."""
        y = np.asarray(y, dtype=float)
        if np.any((y < -1e-12) | (y > 1.0 + 1e-12)):
            raise DomainError("inverse argument outside [0,1]")
        y = np.clip(y, 0.0, 1.0)
        if self.kind == "power":
            return y ** (1.0 / self.param)
        if self.kind == "phi0_inverse":
            return phi0_eval(np.maximum(y, 1e-300)) * (y > 0.0)
        xs, vals = self._inv_table
        idx = np.clip(np.searchsorted(vals, y), 1, len(xs) - 1)
        lo = xs[idx - 1]
        hi = xs[idx]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self._eval_raw(mid, 0) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def __repr__(self):
        if self.param is None:
            return f"PsiFunction({self.kind})"
        return f"PsiFunction({self.kind}, {self.param:.6g})"

    # -- constructors ---------------------------------------------------

    @classmethod
    def psi_a(cls, a: float | None = None) -> "PsiFunction":
        return cls("psi_a", a)

    @classmethod
    def power(cls, p: float) -> "PsiFunction":
        return cls("power", p)

    @classmethod
    def phi0_inverse(cls) -> "PsiFunction":
        return cls("phi0_inverse")


def _invert_phi0(y):
    """Solve phi0(t) = y for t in [0,1] by bisection (phi0 is increasing)."""
    y = np.asarray(y, dtype=float)
    lo = np.zeros_like(y)
    hi = np.ones_like(y)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        below = _phi0_raw(np.maximum(mid, 1e-300)) < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _phi0_raw(x):
    return np.exp(-x * gammaln(1.0 + 1.0 / x))


def phi0_eval(x):
    """phi0(x) = Gamma((1+x)/x)^(-x) on (0,1]; sends 1/r to (1/r!)^(1/r)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr > 1.0):
        raise DomainError("phi0 domain is (0, 1]")
    out = _phi0_raw(arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def psi_eval(f: PsiFunction, x, order: int = 0):
    """Evaluate psi or one of its first three derivatives on [0,1]."""
    if order not in (0, 1, 2, 3):
        raise DomainError("order must be 0..3")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
        raise DomainError("psi argument outside [0,1]")
    out = f.eval(np.clip(arr, 0.0, 1.0), order)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def orlicz_norm(v, f: PsiFunction, tol: float = 1e-12) -> float:
    """The scale s with sum_i psi(v_i / s) = 1, for a nonzero v >= 0.

    The sum is > 1 at s = max(v) unless a single entry carries everything,
    and psi <= identity on [0,1] puts it at <= 1 by s = sum(v); bisection
    between those brackets converges unconditionally.  Input is normalized
    by its maximum first, which makes homogeneity exact.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if np.any(v < 0.0):
        raise DomainError("norm argument must be nonnegative")
    vmax = float(v.max(initial=0.0))
    if vmax == 0.0:
        raise DomainError("norm of the zero vector is undefined")
    u = v / vmax

    def excess(s):
        return float(f(u / s).sum()) - 1.0

    lo, hi = 1.0, float(u.sum())
    if excess(lo) <= tol:
        return vmax
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        e = excess(mid)
        if abs(e) <= tol:
            return vmax * mid
        if e > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    return vmax * 0.5 * (lo + hi)


@dataclass(frozen=True)
class PsiConditionReport:
    """Grid-certified margins for the three norm-bound hypotheses.

    Margins are minima over the stated grids; nothing beyond grid
    resolution is claimed, and a margin may be negative (condition fails)
    or zero (boundary case, e.g. the constant ratio of plain powers).
    """

    cond1_min_margin: float
    cond2_min_margin: float
    cond3_min_margin: float
    grid_size: int

    def to_dict(self):
        return {
            "cond1_min_margin": self.cond1_min_margin,
            "cond2_min_margin": self.cond2_min_margin,
            "cond3_min_margin": self.cond3_min_margin,
            "grid_size": self.grid_size,
        }


def verify_psi_conditions(
    f: PsiFunction, grid: int = 100_000, r_max: float = 1.0
) -> PsiConditionReport:
    """Margin certificates for the three hypotheses of the row-norm bound.

    Conditions 1 and 2 ask the ratios x psi'/psi and x psi''/psi' to be
    increasing: the margin is the smallest forward difference over a
    uniform grid on the open interval (0,1).  Condition 3 is the pointwise
    inequality psi(e^{-r/e}) + psi(r e^{-r/e}) >= 1, scanned on [0, r_max];
    a margin on r_max = 1 suffices for the bound, and extending to
    r_max = e checks the interval the induction actually uses.
    """
    if grid < 100:
        raise DomainError("grid must be >= 100")
    xs = np.arange(1, grid + 1, dtype=float) / (grid + 1)
    ratio1 = xs * f.eval(xs, 1) / f.eval(xs, 0)
    ratio2 = xs * f.eval(xs, 2) / f.eval(xs, 1)
    rs = np.linspace(0.0, r_max, grid)
    damp = np.exp(-rs / math.e)
    cond3 = f(damp) + f(rs * damp) - 1.0
    return PsiConditionReport(
        cond1_min_margin=float(np.diff(ratio1).min()),
        cond2_min_margin=float(np.diff(ratio2).min()),
        cond3_min_margin=float(cond3.min()),
        grid_size=grid,
    )


def upper_bound_orlicz(b, f: PsiFunction | None = None) -> float:
    """Log upper bound sum_i ln ||row_i||_psi for a nonnegative matrix.

    Valid whenever f certifies nonnegative condition margins (the caller's
    obligation; see verify_psi_conditions).  A zero row has no norm and
    raises, mirroring the fact that the permanent is then zero anyway.
    """
    b = as_matrix(b)
    b.require_square("Orlicz permanent bound")
    if f is None:
        f = PsiFunction.psi_a()
    total = 0.0
    for i, row in enumerate(b.data):
        if not row.any():
            raise DomainError(f"row {i} is zero; permanent is 0, norm undefined")
        total += math.log(orlicz_norm(row, f))
    return total


def min_row_constant(x, f: PsiFunction | None = None) -> float:
    """Smallest C in [e^(1/e), 4] with sum_j psi_a(x_j / (C * W)) <= 1,
    where W = prod_k (1-x_k)^(1-x_k) of the stochastic vector x.

    The constraint sum is decreasing in C, so bisection applies; the lower
    endpoint already keeps every argument inside [0,1].  Values come out
    at most 2 on every stochastic vector (checked, not proved, here).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0.0):
        raise DomainError("stochastic vector must be nonnegative")
    if abs(float(x.sum()) - 1.0) > 1e-9:
        raise DomainError("vector must sum to 1 within 1e-9")
    if f is None:
        f = PsiFunction.psi_a()
    one_minus = np.clip(1.0 - x, 0.0, 1.0)
    weight = math.exp(float(xlogy(one_minus, one_minus).sum()))

    def excess(c):
        return float(f(x / (c * weight)).sum()) - 1.0

    lo, hi = E_TO_E_INV, 4.0
    if excess(lo) <= 0.0:
        return lo
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def bethe_upper_bound(a, tol: float = 1e-7) -> float:
    """n ln 2 plus the log Bethe functional: a log upper bound on the
    permanent of a row-stochastic matrix."""
    a = as_matrix(a)
    n = a.require_square("Bethe upper bound")
    row_dev = float(np.max(np.abs(a.data.sum(axis=1) - 1.0)))
    if row_dev > tol:
        raise DomainError(f"rows must be stochastic at {tol:g}, dev {row_dev:.3g}")
    return n * math.log(2.0) + bethe_functional(a, tol=tol)


@dataclass(frozen=True)
class BregmanBound:
    log_bound: float
    zero_permanent: bool


def bregman_bound(a) -> BregmanBound:
    """Log of prod_i (r_i!)^(1/r_i) for a 0/1 matrix with row sums r_i.

    Factorials go through log-gamma so large rows cannot overflow.  A zero
    row forces the permanent to zero; the bound degenerates to 0 and is
    flagged instead of raising.
    """
    a = as_matrix(a)
    a.require_square("factorial permanent bound")
    d = a.data
    if not np.all((d == 0.0) | (d == 1.0)):
        raise DomainError("bound applies to 0/1 matrices only")
    r = d.sum(axis=1)
    if np.any(r == 0.0):
        return BregmanBound(log_bound=0.0, zero_permanent=True)
    value = float((gammaln(r + 1.0) / r).sum())
    return BregmanBound(log_bound=value, zero_permanent=False)


def unit_extension_norm(r: float, f: PsiFunction | None = None) -> float:
    """psi-norm of the two-vector (1, r): the least norm of (y, r) over
    unit-norm nonnegative y, in any dimension."""
    if r < 0.0:
        raise DomainError("r must be nonnegative")
    if f is None:
        f = PsiFunction.psi_a()
    return orlicz_norm(np.array([1.0, r]), f)
