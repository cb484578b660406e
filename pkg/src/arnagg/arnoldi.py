"""Arnoldi iteration on row vectors and the aggregations built from it.

The iteration orthonormalises the Krylov rows ``p0^T, p0^T P, p0^T P^2, ...``
with sequentially deflated Gram-Schmidt.  After ``j`` passes it holds, up to
rounding, the row-form Arnoldi relation

    H @ Q + h_next * outer(e_j, q_next) = Q @ P

with ``Q`` the ``(j, n)`` matrix of orthonormal basis rows and ``H`` the
``(j, j)`` step matrix.  Row ``i`` of ``H`` stores the projection
coefficients of ``q_i^T P`` onto ``q_1 .. q_{i+1}``; entries above the first
superdiagonal are exactly zero.  ``h_next`` is the norm of the current
boundary residual; it vanishes exactly when the Krylov subspace has become
invariant under ``P``.

An aggregation of size ``j`` is the triple ``(H, Q, pi0)`` with
``pi0 = (||p0||_2, 0, ..., 0)``.  Its reduced evolution
``pi_k^T = pi0^T H^k`` reproduces the true transient distributions exactly
for the first ``j - 1`` steps and, for invariant subspaces, for all steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .chain import l1_norm, l2_norm, inf_row_sum_norm, spmv_left, transient_naive
from .errors import (
    DimensionMismatchError,
    InvariantSubspaceError,
    ValidationError,
)

# h_next at the Gram-Schmidt noise floor counts as an invariant subspace;
# floating point never produces an exact zero here.  The floor grows with
# sqrt(n), so a fixed cutoff would miss genuine invariance on larger chains.
def _invariance_threshold(n: int, p_norm: float) -> float:
    return max(1e-14, 64.0 * np.finfo(np.float64).eps * np.sqrt(n)) * p_norm


class NaiveCriteria(NamedTuple):
    """The three intuitive exactness measurements (diagnostics only)."""

    residual_l1: float      # ||r_{j+1}||_1, reconstructed as h_next * ||q_next||_1
    boundary_abs: float     # |h_next|
    relation_inf: float     # ||H Q - Q P||_inf


class ArnoldiState:
    """In-progress Arnoldi iteration.

    Construction is sequential: each :meth:`expand` appends one basis row and
    one step-matrix row.  Prefixes are immutable, so a longer run contains
    every shorter aggregation as an exact leading sub-block.

    Alongside the factors, the state records per-row l1 norms of the
    relation residual; they feed the convergence criterion and the error
    bound without ever re-forming ``H Q - Q P``.
    """

    def __init__(self, p0: np.ndarray, P, reorthogonalize: bool = False):
        n = P.shape[0]
        p0 = np.ascontiguousarray(p0, dtype=np.float64)
        if p0.shape != (n,):
            raise DimensionMismatchError(
                f"initial vector of shape {p0.shape} against matrix of shape {P.shape}"
            )
        if not np.all(np.isfinite(p0)):
            raise ValidationError("initial vector contains NaN or Inf")
        nrm = l2_norm(p0)
        if nrm == 0.0:
            raise ValidationError("initial vector is zero")
        self.n = n
        self.source_norm = nrm
        self.reorthogonalize = reorthogonalize
        self._invariance_threshold = _invariance_threshold(n, inf_row_sum_norm(P))
        self._Q = np.empty((8, n))
        self._Q[0] = p0 / nrm
        self.dim = 1
        self._hrows: list[np.ndarray] = []
        self._drift_norms: list[float] = []    # rows of H Q - Q P incl. boundary term
        self._lastrow_norms: list[float] = []  # same rows without the boundary term
        self.h_next = 0.0
        self.q_next: np.ndarray | None = None
        self._advance(P)

    # -- iteration ---------------------------------------------------------

    @classmethod
    def initialize(cls, p0: np.ndarray, P, reorthogonalize: bool = False) -> "ArnoldiState":
        """Start the iteration from ``q_1 = p0 / ||p0||_2`` and run one pass."""
        return cls(p0, P, reorthogonalize=reorthogonalize)

    @property
    def invariant(self) -> bool:
        return self.q_next is None

    def expand(self, P) -> "ArnoldiState":
        """Append the boundary vector as a new basis row and run one pass.

        Raises :class:`InvariantSubspaceError` when the subspace is already
        invariant; that signal means the aggregation is exact and the caller
        must stop expanding.
        """
        if self.invariant:
            raise InvariantSubspaceError(
                f"Krylov subspace invariant at dimension {self.dim}"
            )
        if self.dim >= self.n:
            raise InvariantSubspaceError(
                f"dimension {self.dim} already spans the full space"
            )
        if self.dim == self._Q.shape[0]:
            grown = np.empty((min(2 * self.dim, self.n), self.n))
            grown[: self.dim] = self._Q[: self.dim]
            self._Q = grown
        self._Q[self.dim] = self.q_next
        self.dim += 1
        self._advance(P)
        return self

    def _advance(self, P) -> None:
        # One outer pass for the newest row: deflate q_j^T P against all
        # current basis rows, record coefficients and residual norms.
        j = self.dim
        qp = spmv_left(self._Q[j - 1], P)
        r = qp.copy()
        coeffs = np.empty(j + 1)
        for i in range(j):
            h = float(np.dot(r, self._Q[i]))
            coeffs[i] = h
            r -= h * self._Q[i]
        if self.reorthogonalize:
            for i in range(j):
                c = float(np.dot(r, self._Q[i]))
                coeffs[i] += c
                r -= c * self._Q[i]
        h_next = float(np.linalg.norm(r))
        d = coeffs[:j] @ self._Q[:j] - qp
        lastrow = float(np.sum(np.abs(d)))
        if h_next <= self._invariance_threshold:
            coeffs[j] = 0.0
            self.h_next = 0.0
            self.q_next = None
            drift = lastrow
        else:
            coeffs[j] = h_next
            self.h_next = h_next
            self.q_next = r / h_next
            d += h_next * self.q_next
            drift = float(np.sum(np.abs(d)))
        self._hrows.append(coeffs)
        self._lastrow_norms.append(lastrow)
        self._drift_norms.append(drift)

    # -- views and snapshots -----------------------------------------------

    def _check_dim(self, dim: int | None) -> int:
        j = self.dim if dim is None else int(dim)
        if not 1 <= j <= self.dim:
            raise ValueError(f"snapshot dimension {dim} outside 1..{self.dim}")
        return j

    def hessenberg(self, dim: int | None = None) -> np.ndarray:
        """Dense step matrix ``H`` of the (prefix) iteration."""
        j = self._check_dim(dim)
        H = np.zeros((j, j))
        for i in range(j):
            row = self._hrows[i]
            m = min(row.size, j)
            H[i, :m] = row[:m]
        return H

    def basis_view(self, dim: int | None = None) -> np.ndarray:
        """Read-only view of the first ``dim`` basis rows."""
        return self._Q[: self._check_dim(dim)]

    def residual_row_sums(self, dim: int | None = None) -> np.ndarray:
        """l1 norms of the rows of ``H Q - Q P`` at the given dimension."""
        j = self._check_dim(dim)
        b = np.array(self._drift_norms[:j])
        b[j - 1] = self._lastrow_norms[j - 1]
        return b

    def relation_residual(self, dim: int | None = None) -> float:
        """Max row-sum residual of the Arnoldi relation (boundary included)."""
        j = self._check_dim(dim)
        return max(self._drift_norms[:j])

    def boundary(self, dim: int | None = None) -> tuple[float, np.ndarray | None]:
        """Boundary coefficient and vector closing the relation at ``dim``."""
        j = self._check_dim(dim)
        if j == self.dim:
            return self.h_next, None if self.q_next is None else self.q_next.copy()
        return float(self._hrows[j - 1][j]), self._Q[j].copy()

    def aggregation(self, dim: int | None = None) -> "ArnoldiAggregation":
        """Freeze the (prefix) iteration into an immutable aggregation."""
        j = self._check_dim(dim)
        h, q = self.boundary(j)
        pi0 = np.zeros(j)
        pi0[0] = self.source_norm
        return ArnoldiAggregation(
            step_matrix=self.hessenberg(j),
            basis=self._Q[:j].copy(),
            pi0=pi0,
            boundary_coefficient=h,
            boundary_vector=q,
            source_norm=self.source_norm,
            invariant=h == 0.0,
            residual_row_norms=self.residual_row_sums(j),
        )


@dataclass(frozen=True)
class ArnoldiAggregation:
    """Finished reduced system ``(step_matrix, basis, pi0)`` plus boundary data.

    ``basis`` doubles as the disaggregation map: approximate transients are
    ``pi0^T step_matrix^k basis``.  ``residual_row_norms`` caches the l1 row
    sums of ``step_matrix @ basis - basis @ P`` for the matrix the
    aggregation was built from; aggregations loaded from disk carry ``None``
    and the consumers recompute on demand.
    """

    step_matrix: np.ndarray
    basis: np.ndarray
    pi0: np.ndarray
    boundary_coefficient: float
    boundary_vector: np.ndarray | None
    source_norm: float
    invariant: bool
    residual_row_norms: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.pi0.shape[0]

    @property
    def n(self) -> int:
        return self.basis.shape[1]


def arnoldi_expand(state: ArnoldiState, P) -> ArnoldiState:
    """One outer-loop pass; grows the state dimension by one."""
    return state.expand(P)


def build_aggregation(
    p0: np.ndarray, P, dim: int, reorthogonalize: bool = False
) -> ArnoldiAggregation:
    """Run the iteration to the requested dimension and freeze the result.

    Stops early when the Krylov subspace becomes invariant; the returned
    aggregation then has the invariance index as its dimension and is exact.
    """
    n = P.shape[0]
    if not 1 <= dim <= n:
        raise ValueError(f"target dimension {dim} outside 1..{n}")
    state = ArnoldiState.initialize(p0, P, reorthogonalize=reorthogonalize)
    while state.dim < dim and not state.invariant:
        state.expand(P)
    return state.aggregation()


def aggregated_transient(agg: ArnoldiAggregation, k: int) -> np.ndarray:
    """Reduced transient vector ``pi_k^T = pi0^T H^k`` via k dense products."""
    if k < 0:
        raise ValueError(f"step count must be >= 0, got {k}")
    pi = agg.pi0.copy()
    H = agg.step_matrix
    for _ in range(k):
        pi = pi @ H
    return pi


def approx_transient(agg: ArnoldiAggregation, k: int) -> np.ndarray:
    """Approximate transient distribution ``pi_k^T basis``.

    May contain negative entries and need not sum to 1.  For ``k == 0`` it
    reproduces ``p0`` up to rounding.
    """
    return aggregated_transient(agg, k) @ agg.basis


def transient_error(agg: ArnoldiAggregation, p0: np.ndarray, P, k: int) -> float:
    """l1 distance between the approximate and the exact transient at step k."""
    if agg.n != P.shape[0]:
        raise DimensionMismatchError(
            f"aggregation over {agg.n} states against matrix of shape {P.shape}"
        )
    return l1_norm(approx_transient(agg, k) - transient_naive(p0, P, k))


def residual_row_sums(step_matrix: np.ndarray, basis: np.ndarray, P) -> np.ndarray:
    """l1 norms of the rows of ``step_matrix @ basis - basis @ P``.

    Works one row at a time; the full difference matrix is never formed.
    Mirrors the operation order used by :class:`ArnoldiState` so recomputed
    values match the cached ones bit for bit.
    """
    j = basis.shape[0]
    if step_matrix.shape != (j, j) or basis.shape[1] != P.shape[0]:
        raise DimensionMismatchError(
            f"step {step_matrix.shape}, basis {basis.shape}, matrix {P.shape}"
        )
    b = np.empty(j)
    for i in range(j):
        d = step_matrix[i, : i + 1] @ basis[: i + 1] - spmv_left(basis[i], P)
        if i + 1 < j:
            d += step_matrix[i, i + 1] * basis[i + 1]
        b[i] = np.sum(np.abs(d))
    return b


def aggregation_residual_row_sums(agg: ArnoldiAggregation, P) -> np.ndarray:
    """Cached residual row sums, or a recomputation for loaded aggregations."""
    if agg.residual_row_norms is not None:
        return agg.residual_row_norms
    return residual_row_sums(agg.step_matrix, agg.basis, P)


def relation_residual(agg: ArnoldiAggregation, P) -> float:
    """Max row-sum residual of the Arnoldi relation for a frozen aggregation.

    Uses the boundary pair to close the relation on the last row; with a
    zero boundary coefficient this is the residual of ``H Q = Q P``.
    """
    b = aggregation_residual_row_sums(agg, P).copy()
    i = agg.dim - 1
    d = agg.step_matrix[i] @ agg.basis - spmv_left(agg.basis[i], P)
    if agg.boundary_coefficient > 0.0:
        if agg.boundary_vector is None:
            raise ValidationError("aggregation lacks its boundary vector")
        d += agg.boundary_coefficient * agg.boundary_vector
    b[i] = np.sum(np.abs(d))
    return float(np.max(b))


def closed_form_error(agg: ArnoldiAggregation, P, k: int) -> float:
    """Exact transient error at step ``k`` evaluated in closed form.

    Accumulates the boundary leakage ``sum_i pi_i[-1] * h * q_next^T P^...``
    with one propagated n-vector; no matrix powers are formed.  Returns 0
    exactly for ``k <= dim - 1`` (empty sum) and for invariant aggregations.
    Cost is O(k (nnz(P) + dim^2)).
    """
    if k < 0:
        raise ValueError(f"step count must be >= 0, got {k}")
    j = agg.dim
    h = agg.boundary_coefficient
    if h == 0.0 or k <= j - 1:
        return 0.0
    if agg.boundary_vector is None:
        raise ValidationError("aggregation lacks its boundary vector")
    H = agg.step_matrix
    q = agg.boundary_vector
    pi = agg.pi0.copy()
    acc: np.ndarray | None = None
    for _ in range(k):
        s = float(pi[-1])
        if acc is not None:
            acc = spmv_left(acc, P)
        if s != 0.0:
            if acc is None:
                acc = np.zeros(agg.n)
            acc += (h * s) * q
        pi = pi @ H
    return 0.0 if acc is None else l1_norm(acc)


def error_bound(agg: ArnoldiAggregation, P, k: int) -> float:
    """Upper bound on the transient error after ``k`` steps.

    Accumulates ``<|pi_i|, b>`` for ``i < k`` where ``b`` holds the l1 row
    sums of ``step_matrix @ basis - basis @ P`` (computed once and reused).
    Zero for invariant aggregations and for ``k == 0``.
    """
    if k < 0:
        raise ValueError(f"step count must be >= 0, got {k}")
    b = aggregation_residual_row_sums(agg, P)
    pi = agg.pi0.copy()
    H = agg.step_matrix
    total = 0.0
    for _ in range(k):
        total += float(np.dot(np.abs(pi), b))
        pi = pi @ H
    return total


def naive_criteria(obj: ArnoldiState | ArnoldiAggregation, P) -> NaiveCriteria:
    """The three naive exactness measurements for a state or aggregation.

    All three are zero exactly when the Krylov subspace is invariant; away
    from invariance they carry no usable convergence signal and are exposed
    for diagnostics only.
    """
    if isinstance(obj, ArnoldiState):
        h = obj.h_next
        qn = obj.q_next
        b = obj.residual_row_sums()
    else:
        h = obj.boundary_coefficient
        qn = obj.boundary_vector
        b = aggregation_residual_row_sums(obj, P)
    res1 = h * l1_norm(qn) if h > 0.0 and qn is not None else 0.0
    return NaiveCriteria(res1, abs(h), float(np.max(b)))
