import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permbounds import (
    DomainError,
    PermanentValue,
    SizeLimitError,
    per_m_direct,
    per_m_via_block,
    permanent_bruteforce,
    permanent_ryser,
)
from permbounds.ensembles import block_a1, cycle_a2


def test_permanent_value_marker():
    z = PermanentValue.zero()
    assert z.is_zero and z.log_value == float("-inf") and z.value == 0.0
    v = PermanentValue.from_log(0.0)
    assert not v.is_zero and v.value == 1.0
    with pytest.raises(DomainError):
        PermanentValue.from_log(float("-inf"))


def test_bruteforce_scalar():
    assert permanent_bruteforce([[2.5]]).value == pytest.approx(2.5)


def test_bruteforce_uniform_third():
    # n! / n^n at n = 3
    assert permanent_bruteforce(np.full((3, 3), 1 / 3)).value == pytest.approx(
        2 / 9, rel=1e-14
    )


def test_bruteforce_cycle_matrix():
    assert permanent_bruteforce(cycle_a2(8)).value == pytest.approx(2.0, rel=1e-12)


def test_bruteforce_zero():
    a = np.ones((3, 3))
    a[0] = 0.0
    assert permanent_bruteforce(a).is_zero


def test_ryser_identity_10():
    assert permanent_ryser(np.eye(10)).value == pytest.approx(1.0, rel=1e-12)


def test_ryser_block_diagonal():
    # n/2 independent 2x2 all-ones blocks multiply to 2^(n/2)
    assert permanent_ryser(block_a1(8)).value == pytest.approx(16.0, rel=1e-10)


def test_ryser_matches_bruteforce_random_suite(rng):
    for n in range(1, 9):
        for _ in range(8):
            a = rng.random((n, n))
            lhs = permanent_ryser(a)
            rhs = permanent_bruteforce(a)
            assert lhs.log_value == pytest.approx(rhs.log_value, abs=1e-10)


def test_ryser_zero_support():
    a = np.ones((4, 4))
    a[:, 0] = 0.0
    assert permanent_ryser(a).is_zero


def test_size_caps():
    with pytest.raises(SizeLimitError):
        permanent_bruteforce(np.eye(9))
    with pytest.raises(SizeLimitError):
        permanent_ryser(np.eye(25))
    with pytest.raises(SizeLimitError):
        per_m_via_block(np.eye(20), 10)


def test_permanent_invariances(rng):
    for n in (4, 7, 10):
        a = rng.random((n, n))
        base = permanent_ryser(a).log_value
        p = rng.permutation(n)
        assert permanent_ryser(a[p]).log_value == pytest.approx(base, abs=1e-9)
        assert permanent_ryser(a[:, p]).log_value == pytest.approx(base, abs=1e-9)
        assert permanent_ryser(a.T).log_value == pytest.approx(base, abs=1e-9)


@settings(max_examples=40, deadline=None, derandomize=True)
@given(
    st.integers(2, 6),
    st.integers(0, 5),
    st.floats(0.1, 50.0, allow_nan=False),
    st.integers(0, 2**31 - 1),
)
def test_row_scaling_multilinearity(n, row, c, seed):
    row = row % n
    a = np.random.default_rng(seed).random((n, n)) + 0.01
    b = a.copy()
    b[row] *= c
    shift = permanent_ryser(b).log_value - permanent_ryser(a).log_value
    assert shift == pytest.approx(math.log(c), abs=1e-9)


def test_per_m_entry_sum():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert per_m_direct(a, 1).value == pytest.approx(10.0, rel=1e-14)


def test_per_m_full_is_permanent(rng):
    a = rng.random((5, 5))
    assert per_m_direct(a, 5).log_value == pytest.approx(
        permanent_bruteforce(a).log_value, abs=1e-12
    )
    assert per_m_via_block(a, 5).log_value == pytest.approx(
        permanent_bruteforce(a).log_value, abs=1e-10
    )


def test_per_m_all_ones_pairs():
    # 9 submatrix pairs at m=2, each an all-ones 2x2 with permanent 2
    assert per_m_direct(np.ones((3, 3)), 2).value == pytest.approx(18.0)
    assert per_m_via_block(np.ones((3, 3)), 2).value == pytest.approx(18.0)


def test_per_m_routes_agree(rng):
    for n in range(2, 8):
        a = rng.random((n, n))
        for m in range(1, n + 1):
            d = per_m_direct(a, m)
            b = per_m_via_block(a, m)
            assert d.log_value == pytest.approx(b.log_value, abs=1e-8)


def test_per_m_argument_errors():
    with pytest.raises(DomainError):
        per_m_direct(np.eye(3), 0)
    with pytest.raises(DomainError):
        per_m_direct(np.eye(3), 4)
    with pytest.raises(DomainError):
        per_m_via_block(np.eye(3), 1.5)
