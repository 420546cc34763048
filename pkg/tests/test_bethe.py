import math

import numpy as np
import pytest

from permbounds import (
    DomainError,
    Matrix,
    approximate_permanent,
    bethe_functional,
    classify,
    cw_functional,
    cw_gradient,
    lower_bound_general,
    maximize_bethe,
    permanent_bruteforce,
    permanent_ryser,
    product_relaxation,
    relative_entropy_relaxation,
    schrijver_lower,
    sinkhorn_scale,
)
from permbounds.ensembles import block_a1, ds_random

LN2 = math.log(2.0)


def half_a1(n):
    return Matrix(0.5 * block_a1(n).data)


# ---------------------------------------------------------------- functional


def test_bethe_functional_identity():
    assert bethe_functional(np.eye(6)) == 0.0


def test_bethe_functional_uniform():
    assert bethe_functional(np.full((3, 3), 1 / 3)) == pytest.approx(
        6 * math.log(2 / 3), abs=1e-13
    )


def test_bethe_functional_half_block():
    # eight entries of 1/2; permanent is 1/4, ratio exactly 2^(n/2)
    a = half_a1(4)
    assert bethe_functional(a) == pytest.approx(4 * math.log(0.5), abs=1e-13)
    per = permanent_bruteforce(a)
    assert per.value == pytest.approx(0.25, rel=1e-12)
    assert per.log_value - bethe_functional(a) == pytest.approx(2 * LN2, abs=1e-12)


def test_bethe_functional_domain():
    with pytest.raises(DomainError):
        bethe_functional([[1.5, 0.0], [0.0, 1.0]])


def test_bethe_functional_invariances(rng):
    a = ds_random(5, rng)
    base = bethe_functional(a)
    p = rng.permutation(5)
    assert bethe_functional(a.data[p]) == pytest.approx(base, abs=1e-12)
    assert bethe_functional(a.data[:, p]) == pytest.approx(base, abs=1e-12)
    assert bethe_functional(a.data.T) == pytest.approx(base, abs=1e-12)


# ------------------------------------------------------------------ cw pair


def test_cw_reduces_to_functional_on_diagonal(ds6):
    assert cw_functional(ds6, ds6) == pytest.approx(bethe_functional(ds6), abs=1e-12)


def test_cw_identity_pair():
    assert cw_functional(np.eye(3), np.eye(3)) == 0.0


def test_cw_uniform_vs_identity():
    got = cw_functional(np.full((3, 3), 1 / 3), np.eye(3))
    assert got == pytest.approx(3 * math.log(1 / 3), abs=1e-12)


def test_cw_zero_support_mismatch():
    p = np.eye(2)
    q = np.full((2, 2), 0.5)
    assert cw_functional(p, q) == float("-inf")


def test_cw_gradient_closed_form():
    g = cw_gradient(np.full((2, 2), 0.5), np.full((2, 2), 0.5))
    assert np.allclose(g, -2.0 + LN2)


def test_cw_gradient_boundary_error():
    with pytest.raises(DomainError):
        cw_gradient(np.eye(2), np.eye(2))


def test_cw_gradient_matches_finite_differences(rng):
    p = rng.random((4, 4)) + 0.05
    q = ds_random(4, rng)
    g = cw_gradient(p, q)
    h = 1e-6
    for idx in ((0, 0), (1, 3), (2, 1), (3, 2)):
        qp = q.data.copy()
        qm = q.data.copy()
        qp[idx] += h
        qm[idx] -= h
        fd = (cw_functional(p, qp) - cw_functional(p, qm)) / (2 * h)
        assert fd == pytest.approx(g[idx], abs=1e-4)


def test_cw_concavity_along_segments(rng):
    p = rng.random((5, 5)) + 0.02
    for _ in range(20):
        q1 = ds_random(5, rng).data
        q2 = ds_random(5, rng).data
        mid = cw_functional(p, 0.5 * (q1 + q2))
        avg = 0.5 * (cw_functional(p, q1) + cw_functional(p, q2))
        assert mid >= avg - 1e-10


# ------------------------------------------------------------- lower bounds


def test_lower_bound_at_diagonal_recovers_functional(ds6):
    assert lower_bound_general(ds6, ds6) == pytest.approx(
        bethe_functional(ds6), abs=1e-12
    )


def test_lower_bound_requires_doubly_stochastic(rng):
    with pytest.raises(DomainError):
        lower_bound_general(rng.random((3, 3)), rng.random((3, 3)) + 1.0)


def test_lower_bound_schrijver_specialization(rng):
    # feeding the entry-wise map b(1-b) back in collapses to sum ln(1-b)
    for _ in range(5):
        b = ds_random(5, rng)
        transformed, bound = schrijver_lower(b)
        assert lower_bound_general(transformed, b) == pytest.approx(bound, abs=1e-10)


def test_lower_bound_below_log_permanent(rng):
    for _ in range(10):
        a = rng.random((5, 5)) + 0.01
        image = sinkhorn_scale(a).scaled
        assert lower_bound_general(a, image) <= permanent_ryser(a).log_value + 1e-8


def test_schrijver_identity_input():
    transformed, bound = schrijver_lower(np.eye(3))
    assert np.all(transformed.data == 0.0)
    assert bound == float("-inf")


def test_schrijver_half_block():
    transformed, bound = schrijver_lower(np.full((2, 2), 0.5))
    assert np.allclose(transformed.data, 0.25)
    assert bound == pytest.approx(4 * math.log(0.5), abs=1e-13)
    assert permanent_bruteforce(transformed).value == pytest.approx(1 / 8)
    assert bound <= math.log(1 / 8) + 1e-12


def test_schrijver_random_vs_oracle(rng):
    for _ in range(10):
        b = ds_random(6, rng)
        transformed, bound = schrijver_lower(b)
        assert bound <= permanent_ryser(transformed).log_value + 1e-8


# ------------------------------------------------------------ approximation


def test_approximate_on_doubly_stochastic(ds6):
    rep = approximate_permanent(ds6)
    assert rep.log_estimate == pytest.approx(bethe_functional(ds6), abs=1e-9)
    assert rep.scaling_residual <= 1e-9
    assert rep.log_upper - rep.log_lower == pytest.approx(6 * LN2, abs=1e-12)


def test_approximate_uniform_third():
    rep = approximate_permanent(np.full((3, 3), 1 / 3))
    per = math.log(2 / 9)
    assert rep.log_lower == pytest.approx(6 * math.log(2 / 3), abs=1e-12)
    assert rep.log_lower - 1e-9 <= per <= rep.log_upper + 1e-9


def test_approximate_half_block_ratio():
    a = half_a1(10)
    rep = approximate_permanent(a)
    per = permanent_ryser(a).log_value
    assert per - rep.log_estimate == pytest.approx(5 * LN2, abs=1e-9)
    assert per <= rep.log_upper + 1e-9


def test_approximate_degraded_flag():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    rep = approximate_permanent(a, tol=1e-12)
    assert rep.degraded
    assert rep.scaling_residual > 1e-12


def test_report_serialization(ds6):
    d = approximate_permanent(ds6).to_dict()
    assert d["log2_upper"] - d["log2_lower"] == pytest.approx(6.0, abs=1e-9)
    assert set(d) >= {
        "log_lower", "log_upper", "log_estimate", "log_exact",
        "scaling_residual", "n", "log2_lower", "log2_upper",
    }


# ------------------------------------------------------------- maximization


def test_maximize_fixed_point_at_uniform():
    a = np.full((4, 4), 0.25)
    sol = maximize_bethe(a)
    assert sol.iterations == 0
    assert np.allclose(sol.maximizer.data, 0.25, atol=1e-9)


def test_maximize_monotone_in_budget(rng):
    a = rng.random((4, 4)) + 0.05
    short = maximize_bethe(a, max_iter=5, gap_tol=1e-12)
    long = maximize_bethe(a, max_iter=200, gap_tol=1e-12)
    assert long.objective >= short.objective - 1e-12


def test_maximize_beats_scaling_point(rng):
    a = rng.random((5, 5)) + 0.05
    sol = maximize_bethe(a, max_iter=500)
    start = cw_functional(a, sinkhorn_scale(a).scaled)
    assert sol.objective >= start - 1e-7
    assert classify(sol.maximizer, 1e-7).is_doubly_stochastic


def test_maximize_below_log_permanent(rng):
    for _ in range(5):
        a = rng.random((6, 6)) + 0.02
        sol = maximize_bethe(a, max_iter=400)
        assert sol.objective <= permanent_ryser(a).log_value + 1e-6


def test_maximizer_gradient_has_line_structure(rng):
    # at an interior critical point the gradient splits as alpha_i + beta_j
    a = rng.random((5, 5)) + 0.1
    sol = maximize_bethe(a, max_iter=8000, gap_tol=1e-10)
    g = cw_gradient(a, sol.maximizer)
    n = 5
    rows = np.repeat(np.arange(n), n)
    cols = np.tile(np.arange(n), n)
    design = np.zeros((n * n, 2 * n))
    design[np.arange(n * n), rows] = 1.0
    design[np.arange(n * n), n + cols] = 1.0
    coef, *_ = np.linalg.lstsq(design, g.ravel(), rcond=None)
    residual = np.max(np.abs(design @ coef - g.ravel()))
    assert residual <= max(1e-4, 10 * sol.duality_gap_estimate)


# -------------------------------------------------------------- relaxations


def test_product_relaxation_doubly_stochastic(ds6):
    assert product_relaxation(ds6) == pytest.approx(0.0, abs=1e-7)


def test_product_relaxation_diagonal():
    assert product_relaxation(np.diag([2.0, 8.0])) == pytest.approx(
        math.log(16.0), abs=1e-9
    )


def test_three_way_agreement(rng):
    for _ in range(5):
        a = rng.random((5, 5)) + 0.01
        sc = sinkhorn_scale(a)
        target = -sc.log_factor_product
        assert product_relaxation(a) == pytest.approx(target, abs=1e-5)
        kld = relative_entropy_relaxation(a, gap_tol=1e-9)
        assert kld.objective == pytest.approx(target, abs=1e-5)
        assert kld.duality_gap_estimate <= 1e-6


def test_entropy_relaxation_from_cold_start(rng):
    # starting at the uniform matrix instead of the scaling image, the
    # maximization must still climb to the factor-product value
    a = rng.random((5, 5)) + 0.05
    target = -sinkhorn_scale(a).log_factor_product
    cold = relative_entropy_relaxation(
        a, max_iter=4000, gap_tol=1e-8, start=np.full((5, 5), 0.2)
    )
    assert cold.iterations > 0
    assert cold.objective == pytest.approx(target, abs=1e-4)


def test_maximize_bethe_start_validation(rng):
    a = rng.random((4, 4)) + 0.05
    with pytest.raises(DomainError):
        maximize_bethe(a, start=np.full((4, 4), 0.3))  # not doubly stochastic
    masked = a.copy()
    masked[0, 0] = 0.0
    with pytest.raises(DomainError):
        maximize_bethe(masked, start=np.full((4, 4), 0.25))  # off-support mass
    sol = maximize_bethe(a, max_iter=100, start=np.full((4, 4), 0.25))
    assert classify(sol.maximizer, 1e-7).is_doubly_stochastic


def test_sandwich_random_sizes(rng):
    for n in range(3, 13, 3):
        for _ in range(10):
            a = ds_random(n, rng)
            log_f = bethe_functional(a)
            log_per = permanent_ryser(a).log_value
            slack = 1e-8 + 10 * n * 1e-9
            assert log_f - slack <= log_per <= log_f + n * LN2 + slack
