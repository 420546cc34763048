import itertools

import numpy as np
import pytest

from permbounds import (
    DimensionError,
    DomainError,
    Matrix,
    classify,
    format_matrix,
    parse_matrix,
    permanent_bruteforce,
    support_has_perfect_matching,
)


def test_construction_rejects_bad_entries():
    with pytest.raises(DomainError):
        Matrix([[1.0, -0.5], [0.0, 1.0]])
    with pytest.raises(DomainError):
        Matrix([[np.nan, 1.0], [0.0, 1.0]])
    with pytest.raises(DomainError):
        Matrix([[np.inf, 1.0], [0.0, 1.0]])
    with pytest.raises(DimensionError):
        Matrix(np.zeros((0, 3)))


def test_matrix_is_immutable():
    m = Matrix(np.eye(2))
    with pytest.raises(ValueError):
        m.data[0, 0] = 5.0


def test_classify_uniform_third():
    rep = classify(np.full((3, 3), 1 / 3), tol=1e-12)
    assert rep.is_doubly_stochastic


def test_classify_identity():
    assert classify(np.eye(5), tol=1e-15).is_doubly_stochastic


def test_classify_row_but_not_doubly():
    rep = classify([[0.6, 0.4], [0.6, 0.4]], tol=1e-9)
    assert rep.is_row_stochastic
    assert not rep.is_doubly_stochastic
    assert rep.col_sum_deviation == pytest.approx(0.2)


def test_classify_requires_square():
    with pytest.raises(DimensionError):
        classify(np.ones((2, 3)))


def test_classify_invariant_under_simultaneous_permutation(rng):
    a = rng.random((5, 5))
    perm = rng.permutation(5)
    b = a[np.ix_(perm, perm)]
    ra, rb = classify(a, 1e-9), classify(b, 1e-9)
    assert ra.is_row_stochastic == rb.is_row_stochastic
    assert ra.is_doubly_stochastic == rb.is_doubly_stochastic
    assert ra.row_sum_deviation == pytest.approx(rb.row_sum_deviation, abs=1e-13)
    assert ra.col_sum_deviation == pytest.approx(rb.col_sum_deviation, abs=1e-13)


def test_matching_identity_and_zero_row():
    assert support_has_perfect_matching(np.eye(4))
    a = np.ones((3, 3))
    a[1] = 0.0
    assert not support_has_perfect_matching(a)


def test_matching_structured_counterexample():
    # support {(0,0),(1,0),(2,1),(2,2)}: rows 0 and 1 compete for column 0
    a = np.zeros((3, 3))
    a[0, 0] = a[1, 0] = a[2, 1] = a[2, 2] = 1.0
    # exhaustive oracle over all 6 permutations
    assert not any(
        all(a[i, s[i]] > 0 for i in range(3))
        for s in itertools.permutations(range(3))
    )
    assert not support_has_perfect_matching(a)


def test_matching_agrees_with_positive_permanent(rng):
    for _ in range(60):
        n = int(rng.integers(1, 7))
        a = (rng.random((n, n)) < 0.4).astype(float) * rng.random((n, n))
        assert support_has_perfect_matching(a) == (not permanent_bruteforce(a).is_zero)


def test_text_round_trip(rng):
    a = Matrix(rng.random((3, 4)))
    for fmt in ("text", "csv"):
        back = parse_matrix(format_matrix(a, fmt))
        assert np.array_equal(back.data, a.data)


def test_text_header_mismatch():
    with pytest.raises(DomainError):
        parse_matrix("2 2\n1 0\n0 1\n0 0\n")
    with pytest.raises(DomainError):
        parse_matrix("1 0\n0 1 1\n")
    with pytest.raises(DomainError):
        parse_matrix("")


def test_seventeen_digit_round_trip():
    a = Matrix([[1 / 3, np.pi / 7], [2 / 3, 1e-17]])
    back = parse_matrix(format_matrix(a, "text"))
    assert np.array_equal(back.data, a.data)
