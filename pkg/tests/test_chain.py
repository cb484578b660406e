import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from arnagg import (
    DimensionMismatchError,
    InvalidRateError,
    ValidationError,
    check_distribution,
    check_generator_matrix,
    check_stochastic_matrix,
    disaggregate,
    inf_row_sum_norm,
    l1_norm,
    l2_norm,
    spmv_left,
    transient_naive,
    uniformise,
)
from helpers import random_distribution, random_stochastic


def csr(rows):
    return check_stochastic_matrix(sp.csr_array(np.array(rows, dtype=float)))


SWAP = csr([[0, 1], [1, 0]])


class TestSpmvLeft:
    def test_permutation_matrix(self):
        assert np.array_equal(spmv_left(np.array([1.0, 0.0]), SWAP), [0.0, 1.0])

    def test_stationary_vector(self):
        P = csr([[0.5, 0.5], [0.5, 0.5]])
        v = np.array([0.5, 0.5])
        np.testing.assert_allclose(spmv_left(v, P), v, rtol=0, atol=0)

    def test_matches_dense_product(self):
        rng = np.random.default_rng(7)
        P = random_stochastic(rng, 3)
        v = np.array([1.0, 0.0, 0.0])
        np.testing.assert_allclose(spmv_left(v, P), v @ P.toarray(), rtol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            spmv_left(np.ones(3), SWAP)

    @pytest.mark.parametrize("n", [2, 5, 17, 64])
    def test_agrees_with_dense_brute_force(self, n):
        rng = np.random.default_rng(n)
        P = random_stochastic(rng, n)
        v = random_distribution(rng, n)
        dense = v @ P.toarray()
        got = spmv_left(v, P)
        np.testing.assert_allclose(got, dense, rtol=1e-14, atol=1e-300)


class TestTransientNaive:
    def test_period_two_chain(self):
        p = transient_naive(np.array([1.0, 0.0]), SWAP, 3)
        np.testing.assert_array_equal(p, [0.0, 1.0])

    def test_identity_dynamics(self):
        I = check_stochastic_matrix(sp.eye_array(5, format="csr"))
        rng = np.random.default_rng(1)
        p0 = random_distribution(rng, 5)
        np.testing.assert_array_equal(transient_naive(p0, I, 123), p0)

    def test_matches_dense_matrix_power(self):
        # 4-state birth-death chain, k=10, dense P^k oracle
        P = csr([
            [0.5, 0.5, 0.0, 0.0],
            [0.3, 0.4, 0.3, 0.0],
            [0.0, 0.3, 0.4, 0.3],
            [0.0, 0.0, 0.5, 0.5],
        ])
        p0 = np.array([1.0, 0.0, 0.0, 0.0])
        expected = p0 @ np.linalg.matrix_power(P.toarray(), 10)
        np.testing.assert_allclose(transient_naive(p0, P, 10), expected, atol=1e-14)

    def test_zero_steps_returns_copy(self):
        p0 = np.array([0.25, 0.75])
        out = transient_naive(p0, SWAP, 0)
        np.testing.assert_array_equal(out, p0)
        assert out is not p0

    def test_negative_steps_rejected(self):
        with pytest.raises(ValueError):
            transient_naive(np.array([1.0, 0.0]), SWAP, -1)

    @pytest.mark.parametrize("a,b", [(0, 5), (3, 4), (7, 2)])
    def test_semigroup_property(self, a, b):
        rng = np.random.default_rng(42)
        P = random_stochastic(rng, 20)
        p0 = random_distribution(rng, 20)
        direct = transient_naive(p0, P, a + b)
        staged = transient_naive(transient_naive(p0, P, a), P, b)
        np.testing.assert_allclose(staged, direct, atol=1e-12, rtol=0)


class TestUniformise:
    def test_symmetric_two_state(self):
        Q = check_generator_matrix(sp.csr_array(np.array([[-1.0, 1.0], [1.0, -1.0]])))
        P, rate = uniformise(Q, 2.0)
        assert rate == 2.0
        np.testing.assert_allclose(P.toarray(), [[0.5, 0.5], [0.5, 0.5]])

    def test_zero_generator_gives_identity(self):
        Q = sp.csr_array((3, 3), dtype=float)
        P, rate = uniformise(Q, 1.0)
        np.testing.assert_array_equal(P.toarray(), np.eye(3))

    def test_three_state_cycle(self):
        # hand computation of I + Q/4 for cycle rates (2, 3, 4)
        Q = check_generator_matrix(sp.csr_array(np.array([
            [-2.0, 2.0, 0.0],
            [0.0, -3.0, 3.0],
            [4.0, 0.0, -4.0],
        ])))
        P, rate = uniformise(Q, 4.0)
        dense = P.toarray()
        np.testing.assert_allclose(dense.sum(axis=1), np.ones(3), atol=1e-15)
        assert dense[0, 1] == 0.5 and dense[1, 2] == 0.75 and dense[2, 0] == 1.0

    def test_default_rate_has_slack(self):
        Q = check_generator_matrix(sp.csr_array(np.array([[-1.0, 1.0], [1.0, -1.0]])))
        P, rate = uniformise(Q)
        assert rate == pytest.approx(1.001)
        assert P.diagonal().min() > 0.0

    def test_rate_below_exit_rejected(self):
        Q = check_generator_matrix(sp.csr_array(np.array([[-2.0, 2.0], [1.0, -1.0]])))
        with pytest.raises(InvalidRateError):
            uniformise(Q, 1.5)

    def test_row_sums_within_tolerance(self):
        rng = np.random.default_rng(3)
        n = 40
        R = rng.uniform(0, 1, size=(n, n))
        np.fill_diagonal(R, 0.0)
        Q = R - np.diag(R.sum(axis=1))
        P, _ = uniformise(check_generator_matrix(sp.csr_array(Q)))
        np.testing.assert_allclose(
            np.asarray(P.sum(axis=1)).ravel(), np.ones(n), atol=1e-12, rtol=0
        )


class TestNorms:
    def test_l1(self):
        assert l1_norm(np.array([1.0, -2.0, 3.0])) == 6.0

    def test_l2(self):
        assert l2_norm(np.array([3.0, 4.0])) == 5.0

    def test_inf_row_sum(self):
        assert inf_row_sum_norm(np.array([[1.0, -2.0], [0.5, 0.5]])) == 3.0

    def test_inf_row_sum_sparse(self):
        assert inf_row_sum_norm(SWAP) == 1.0


class TestDisaggregate:
    def test_single_row(self):
        out = disaggregate(np.array([1.0]), np.array([[0.2, 0.8]]))
        np.testing.assert_array_equal(out, [0.2, 0.8])

    def test_zero_vector(self):
        out = disaggregate(np.zeros(2), np.array([[0.2, 0.8], [1.0, 0.0]]))
        np.testing.assert_array_equal(out, [0.0, 0.0])

    def test_row_sum(self):
        A = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        np.testing.assert_array_equal(disaggregate(np.array([1.0, 1.0]), A), [1.0, 1.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            disaggregate(np.ones(3), np.ones((2, 4)))


class TestValidation:
    def test_distribution_accepts_valid(self):
        check_distribution(np.array([0.25, 0.75]))

    def test_distribution_rejects_negative(self):
        with pytest.raises(ValidationError):
            check_distribution(np.array([-0.1, 1.1]))

    def test_distribution_rejects_bad_sum(self):
        with pytest.raises(ValidationError):
            check_distribution(np.array([0.3, 0.3]))

    def test_stochastic_rejects_bad_rows(self):
        with pytest.raises(ValidationError):
            check_stochastic_matrix(sp.csr_array(np.array([[0.5, 0.4], [0.5, 0.5]])))

    def test_stochastic_rejects_negative(self):
        with pytest.raises(ValidationError):
            check_stochastic_matrix(sp.csr_array(np.array([[1.5, -0.5], [0.5, 0.5]])))

    def test_generator_rejects_positive_diagonal(self):
        with pytest.raises(ValidationError):
            check_generator_matrix(sp.csr_array(np.array([[1.0, -1.0], [1.0, -1.0]])))

    def test_nan_rejected(self):
        with pytest.raises(ValidationError):
            check_distribution(np.array([np.nan, 1.0]))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
def test_stochasticity_preservation(n, seed):
    # l1 norm stays 1 and entries stay essentially nonnegative after one step
    rng = np.random.default_rng(seed)
    P = random_stochastic(rng, n)
    p = random_distribution(rng, n)
    out = spmv_left(p, P)
    assert abs(l1_norm(out) - 1.0) <= 1e-10
    assert out.min() >= -1e-14


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 10), st.integers(0, 6), st.integers(0, 6), st.integers(0, 2**31 - 1))
def test_semigroup_hypothesis(n, a, b, seed):
    rng = np.random.default_rng(seed)
    P = random_stochastic(rng, n)
    p0 = random_distribution(rng, n)
    lhs = transient_naive(p0, P, a + b)
    rhs = transient_naive(transient_naive(p0, P, a), P, b)
    np.testing.assert_allclose(rhs, lhs, atol=1e-12, rtol=0)
