"""Core Markov-chain primitives: validated sparse matrices, left products,
the naive transient-distribution oracle, and CTMC uniformisation.

Conventions
-----------
Distributions and transient vectors are row vectors: one step of the chain
is ``p_{k+1}^T = p_k^T P`` with ``P`` row-stochastic.  All vectors are plain
1-D float64 ``numpy`` arrays; sparse matrices are ``scipy.sparse`` CSR with
sorted indices.  Validation happens where objects enter the library (file
ingestion, model construction); inner loops trust their inputs.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, InvalidRateError, ValidationError

# Construction tolerances.  Inputs failing them are rejected, not repaired.
DISTRIBUTION_SUM_TOL = 1e-12
STOCHASTIC_ROW_SUM_TOL = 1e-12
GENERATOR_ROW_SUM_TOL = 1e-9

# Default uniformisation rate is this factor above the largest exit rate,
# which keeps every diagonal entry of P strictly positive.
UNIFORMISATION_SLACK = 1.001


def as_dense_vector(v, n: int | None = None) -> np.ndarray:
    """Return ``v`` as a finite 1-D float64 array, optionally of length ``n``."""
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"expected a nonempty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("vector contains NaN or Inf entries")
    if n is not None and arr.size != n:
        raise DimensionMismatchError(f"expected length {n}, got {arr.size}")
    return arr


def check_distribution(p, n: int | None = None, tol: float = DISTRIBUTION_SUM_TOL) -> np.ndarray:
    """Validate a probability vector: entries >= 0, sum == 1 within ``tol``."""
    arr = as_dense_vector(p, n)
    if np.any(arr < 0.0):
        raise ValidationError("distribution has negative entries")
    s = float(arr.sum())
    if abs(s - 1.0) > tol:
        raise ValidationError(f"distribution sums to {s!r}, outside 1 +/- {tol}")
    return arr


def _canonical_csr(M) -> sp.csr_array:
    A = sp.csr_array(M, dtype=np.float64)
    A.sum_duplicates()
    A.sort_indices()
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A.data)):
        raise ValidationError("matrix contains NaN or Inf entries")
    return A


def check_stochastic_matrix(M, tol: float = STOCHASTIC_ROW_SUM_TOL) -> sp.csr_array:
    """Validate a row-stochastic matrix and return it in canonical CSR form.

    Stored values must be nonnegative and every row must sum to 1 within
    ``tol``.  Inputs failing the check are rejected rather than renormalised
    so that bad model files surface immediately.
    """
    A = _canonical_csr(M)
    if A.nnz and float(A.data.min()) < 0.0:
        raise ValidationError("stochastic matrix has negative entries")
    rows = A.sum(axis=1)
    worst = float(np.max(np.abs(rows - 1.0))) if rows.size else 0.0
    if worst > tol:
        raise ValidationError(f"row sums deviate from 1 by {worst:.3e} (tol {tol})")
    return A


def check_generator_matrix(M, tol: float = GENERATOR_ROW_SUM_TOL) -> sp.csr_array:
    """Validate a CTMC generator: nonnegative off-diagonals, nonpositive
    diagonal, rows summing to 0 within ``tol``."""
    A = _canonical_csr(M)
    n = A.shape[0]
    diag = A.diagonal()
    if np.any(diag > 0.0):
        raise ValidationError("generator has a positive diagonal entry")
    coo = A.tocoo()
    off = coo.row != coo.col
    if np.any(coo.data[off] < 0.0):
        raise ValidationError("generator has a negative off-diagonal entry")
    rows = A.sum(axis=1)
    worst = float(np.max(np.abs(rows))) if n else 0.0
    if worst > tol:
        raise ValidationError(f"generator row sums deviate from 0 by {worst:.3e} (tol {tol})")
    return A


def l1_norm(v) -> float:
    return float(np.sum(np.abs(v)))


def l2_norm(v) -> float:
    return float(np.linalg.norm(v))


def inf_row_sum_norm(M) -> float:
    """Maximum absolute row sum, for dense or sparse ``M``."""
    if sp.issparse(M):
        return float(np.max(abs(M).sum(axis=1))) if M.shape[0] else 0.0
    A = np.asarray(M, dtype=np.float64)
    if A.ndim == 1:
        A = A[None, :]
    return float(np.max(np.sum(np.abs(A), axis=1)))


def spmv_left(v: np.ndarray, P) -> np.ndarray:
    """Left product ``v^T P`` with sparsity-respecting accumulation.

    The accumulation visits stored entries row-major, which is deterministic
    for a fixed CSR layout.
    """
    if v.shape[0] != P.shape[0]:
        raise DimensionMismatchError(
            f"vector of length {v.shape[0]} against matrix of shape {P.shape}"
        )
    return v @ P


def transient_naive(p0: np.ndarray, P, k: int) -> np.ndarray:
    """Transient row vector after ``k`` steps: ``p_k^T = p_0^T P^k``.

    Computed by ``k`` successive left products; ``k == 0`` returns ``p0``
    unchanged (a copy).
    """
    if k < 0:
        raise ValueError(f"step count must be >= 0, got {k}")
    if p0.shape[0] != P.shape[0]:
        raise DimensionMismatchError(
            f"p0 of length {p0.shape[0]} against matrix of shape {P.shape}"
        )
    p = np.array(p0, dtype=np.float64, copy=True)
    for _ in range(k):
        p = p @ P
    return p


def uniformise(Q, rate: float | None = None) -> tuple[sp.csr_array, float]:
    """Embed a CTMC generator into a DTMC: ``P = I + Q / rate``.

    Parameters
    ----------
    Q : sparse generator matrix (validated by the caller or via
        :func:`check_generator_matrix`).
    rate : uniformisation rate.  Must be at least the largest exit rate
        ``max_i |Q(i,i)|``; when omitted it defaults to ``1.001`` times that
        maximum (and to 1.0 for the all-zero generator).

    Returns
    -------
    (P, rate) : the row-stochastic matrix actually built and the rate used.
    """
    n = Q.shape[0]
    max_exit = float(np.max(np.abs(Q.diagonal()))) if n else 0.0
    if rate is None:
        rate = UNIFORMISATION_SLACK * max_exit if max_exit > 0.0 else 1.0
    rate = float(rate)
    if rate <= 0.0 or rate < max_exit:
        raise InvalidRateError(
            f"rate {rate!r} below largest exit rate {max_exit!r}"
        )
    P = sp.eye_array(n, format="csr") + sp.csr_array(Q) * (1.0 / rate)
    P = sp.csr_array(P)
    P.eliminate_zeros()
    P.sort_indices()
    return check_stochastic_matrix(P), rate


def disaggregate(pi: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Map an aggregated row vector back to the full space: ``pi^T A``.

    The result is generally not a probability vector; the reduced system is
    not a Markov chain and may produce negative entries.
    """
    if pi.shape[0] != A.shape[0]:
        raise DimensionMismatchError(
            f"aggregated vector of length {pi.shape[0]} against basis of shape {A.shape}"
        )
    return pi @ A
