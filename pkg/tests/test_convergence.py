import numpy as np
import pytest
import scipy.sparse as sp

from arnagg import (
    ComplexRejection,
    CriterionConfig,
    DominantEigenvector,
    StopReason,
    ValidationError,
    build_aggregation,
    check_stochastic_matrix,
    criterion_value,
    dominant_eigenvector,
    lumpable_test_chain,
    run_adaptive,
    transient_error,
)
from arnagg.convergence import format_trace
from helpers import basis_vector, random_distribution, random_stochastic

CFG = CriterionConfig(epsilon=1e-12)


class TestDominantEigenvector:
    def test_scalar(self):
        ev = dominant_eigenvector(np.array([[1.0]]), CFG)
        assert isinstance(ev, DominantEigenvector)
        assert ev.eigenvalue == pytest.approx(1.0)

    def test_symmetric_swap(self):
        ev = dominant_eigenvector(np.array([[0.0, 1.0], [1.0, 0.0]]), CFG)
        assert ev.eigenvalue == pytest.approx(1.0)
        ratio = ev.vector[0] / ev.vector[1]
        assert ratio == pytest.approx(1.0, rel=1e-12)

    def test_matches_characteristic_polynomial_roots(self):
        # independent oracle: eigenvalue from the characteristic polynomial
        rng = np.random.default_rng(0)
        P = random_stochastic(rng, 8)
        agg = build_aggregation(random_distribution(rng, 8), P, 3)
        H = agg.step_matrix
        ev = dominant_eigenvector(H, CFG)
        roots = np.roots(np.poly(H.T))
        best = roots[np.argmin(np.abs(roots - 1.0))]
        assert ev.eigenvalue == pytest.approx(float(best.real), abs=1e-8)

    def test_eigenpair_residual_invariant(self):
        rng = np.random.default_rng(1)
        P = random_stochastic(rng, 30)
        agg = build_aggregation(random_distribution(rng, 30), P, 12)
        ev = dominant_eigenvector(agg.step_matrix, CFG, basis=agg.basis)
        H = agg.step_matrix
        resid = np.linalg.norm(ev.vector @ H - ev.eigenvalue * ev.vector)
        bound = 1e-8 * np.max(np.sum(np.abs(H), axis=1)) * np.linalg.norm(ev.vector)
        assert resid <= bound

    def test_normalisation_against_basis(self):
        rng = np.random.default_rng(2)
        P = random_stochastic(rng, 25)
        agg = build_aggregation(random_distribution(rng, 25), P, 10)
        ev = dominant_eigenvector(agg.step_matrix, CFG, basis=agg.basis)
        assert abs(np.abs(ev.vector @ agg.basis).sum() - 1.0) <= 1e-12
        assert ev.normalizer is not None and ev.normalizer > 0.0

    def test_complex_pair_rejected(self):
        # rotation block: the eigenvalues nearest 1 form a complex pair
        theta = np.pi / 6
        rot = 0.95 * np.array(
            [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
        )
        H = np.zeros((3, 3))
        H[:2, :2] = rot
        H[2, 2] = 0.3
        out = dominant_eigenvector(H, CFG)
        assert isinstance(out, ComplexRejection)
        assert out.imag_ratio > CFG.eig_tolerance

    def test_tie_breaks_prefer_larger_real_part(self):
        H = np.diag([0.75, 1.25])  # exactly representable tie at distance 0.25
        ev = dominant_eigenvector(H, CFG)
        assert ev.eigenvalue == pytest.approx(1.25)

    def test_iterative_path_matches_dense(self):
        rng = np.random.default_rng(3)
        P = random_stochastic(rng, 60)
        agg = build_aggregation(random_distribution(rng, 60), P, 40)
        dense = dominant_eigenvector(agg.step_matrix, CFG, basis=agg.basis)
        small_cutoff = CriterionConfig(epsilon=1e-12, dense_cutoff=16)
        iterative = dominant_eigenvector(agg.step_matrix, small_cutoff, basis=agg.basis)
        assert iterative.eigenvalue == pytest.approx(dense.eigenvalue, abs=1e-9)
        np.testing.assert_allclose(
            np.abs(iterative.vector), np.abs(dense.vector), atol=1e-8
        )


class TestCriterionValue:
    def test_zero_on_invariant_subspace(self):
        P = check_stochastic_matrix(sp.csr_array(np.array([[0.0, 1.0], [1.0, 0.0]])))
        agg = build_aggregation(np.array([1.0, 0.0]), P, 2)
        ev = dominant_eigenvector(agg.step_matrix, CFG, basis=agg.basis)
        value = criterion_value(ev, agg.step_matrix, agg.basis, P)
        assert value <= 1e-12

    def test_accepts_plain_vectors_and_matches_cached(self):
        rng = np.random.default_rng(4)
        P = random_stochastic(rng, 20)
        agg = build_aggregation(random_distribution(rng, 20), P, 8)
        ev = dominant_eigenvector(agg.step_matrix, CFG, basis=agg.basis)
        via_eig = criterion_value(ev, agg.step_matrix, agg.basis, P)
        via_vec = criterion_value(ev.vector, agg.step_matrix, agg.basis, P)
        assert via_eig == via_vec
        cached = float(np.dot(np.abs(ev.vector), agg.residual_row_norms))
        assert via_eig == cached

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            criterion_value(
                np.ones(3),
                np.eye(2),
                np.eye(2),
                check_stochastic_matrix(sp.eye_array(2, format="csr")),
            )


class TestRunAdaptive:
    def test_identity_stops_invariant_with_zero_criterion(self):
        I = check_stochastic_matrix(sp.eye_array(6, format="csr"))
        res = run_adaptive(basis_vector(6), I, CFG)
        assert res.stop_reason is StopReason.INVARIANT_SUBSPACE
        assert res.aggregation.dim == 1
        assert res.criterion <= 1e-12
        assert res.trace[-1].stop_reason == "invariant-subspace"

    def test_lumpable_stops_at_block_count(self):
        P, m, p0 = lumpable_test_chain([3, 5, 4], seed=7)
        res = run_adaptive(p0, P, CFG)
        assert res.aggregation.dim <= m
        assert res.converged
        assert transient_error(res.aggregation, p0, P, 100) <= 1e-10

    def test_cadence_contract_with_infinite_epsilon(self):
        rng = np.random.default_rng(5)
        P = random_stochastic(rng, 30)
        p0 = random_distribution(rng, 30)
        res = run_adaptive(p0, P, CriterionConfig(epsilon=float("inf"), check_every=4))
        assert res.stop_reason is StopReason.CRITERION_MET
        assert res.aggregation.dim == 4
        assert [row.dim for row in res.trace] == [4]

    def test_max_dimension_returns_not_converged(self):
        rng = np.random.default_rng(6)
        P = random_stochastic(rng, 40)
        p0 = random_distribution(rng, 40)
        cfg = CriterionConfig(epsilon=1e-300, check_every=10, max_dimension=7)
        res = run_adaptive(p0, P, cfg)
        assert res.stop_reason is StopReason.MAX_DIMENSION
        assert not res.converged
        assert res.aggregation.dim == 7
        assert res.trace[-1].dim == 7
        assert res.trace[-1].stop_reason == "max-dimension"

    def test_determinism(self):
        rng = np.random.default_rng(8)
        P = random_stochastic(rng, 35)
        p0 = random_distribution(rng, 35)
        cfg = CriterionConfig(epsilon=1e-13, check_every=5)
        a = run_adaptive(p0, P, cfg)
        b = run_adaptive(p0, P, cfg)
        assert [(r.dim, r.criterion, r.h_next, r.stop_reason) for r in a.trace] == [
            (r.dim, r.criterion, r.h_next, r.stop_reason) for r in b.trace
        ]
        np.testing.assert_array_equal(a.aggregation.step_matrix, b.aggregation.step_matrix)

    def test_criterion_decreases_to_epsilon_on_mixing_chain(self):
        rng = np.random.default_rng(9)
        P = random_stochastic(rng, 60)
        p0 = random_distribution(rng, 60)
        res = run_adaptive(p0, P, CriterionConfig(epsilon=1e-10, check_every=5))
        assert res.converged
        if res.stop_reason is StopReason.CRITERION_MET:
            assert res.criterion <= 1e-10
        err = transient_error(res.aggregation, p0, P, 1000)
        assert err <= 1e-6

    def test_trace_csv_schema(self):
        I = check_stochastic_matrix(sp.eye_array(3, format="csr"))
        res = run_adaptive(basis_vector(3), I, CFG)
        text = format_trace(res.trace)
        lines = text.strip().split("\n")
        assert lines[0].startswith("#")
        assert lines[1] == "j,criterion,h_next,elapsed_ns,stop_reason"
        assert lines[-1].endswith("invariant-subspace")


class TestConfig:
    def test_rejects_negative_epsilon(self):
        with pytest.raises(ValidationError):
            CriterionConfig(epsilon=-1.0)

    def test_rejects_zero_cadence(self):
        with pytest.raises(ValidationError):
            CriterionConfig(epsilon=1.0, check_every=0)

    def test_allows_zero_and_infinite_epsilon(self):
        CriterionConfig(epsilon=0.0)
        CriterionConfig(epsilon=float("inf"))
