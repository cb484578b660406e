"""Adaptive stopping for the Arnoldi iteration.

The naive exactness measurements (boundary norms, relation residual) carry
no usable signal in floating point, so expansion is stopped instead when

    <|pi|, |H Q - Q P| . 1>  <=  epsilon

where ``pi`` is the left eigenvector of ``H`` whose eigenvalue lies closest
to one, scaled so that ``||pi^T Q||_1 = 1``.  The criterion is checked every
``check_every`` expansions; an eigenvector with genuinely complex entries
signals improper convergence and expansion simply continues.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .arnoldi import ArnoldiAggregation, ArnoldiState, residual_row_sums
from .chain import l1_norm, l2_norm
from .errors import EigenSolverError, ValidationError


@dataclass(frozen=True)
class CriterionConfig:
    """Tuning knobs for the adaptive run.

    epsilon has no universal default; pick it against the intended horizon
    (a few orders above machine epsilon times the horizon is a reasonable
    starting point).
    """

    epsilon: float
    check_every: int = 10
    max_dimension: int | None = None
    eig_tolerance: float = 1e-10   # relative imaginary dust allowed in pi
    seed: int = 0                  # seeds iterative eigensolver start vectors
    dense_cutoff: int = 512        # largest dimension solved densely

    def __post_init__(self):
        if not self.epsilon >= 0.0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if self.check_every < 1:
            raise ValidationError(f"check_every must be >= 1, got {self.check_every}")
        if self.max_dimension is not None and self.max_dimension < 1:
            raise ValidationError(f"max_dimension must be >= 1, got {self.max_dimension}")
        if self.eig_tolerance < 0.0:
            raise ValidationError("eig_tolerance must be >= 0")


@dataclass(frozen=True)
class DominantEigenvector:
    """Real left eigenpair of the step matrix, criterion-normalised."""

    vector: np.ndarray        # pi with ||pi^T Q||_1 == 1 when a basis was given
    eigenvalue: float
    is_real: bool = True
    normalizer: float | None = None  # ||pi_raw^T Q||_1 used for the scaling


@dataclass(frozen=True)
class ComplexRejection:
    """The selected eigenvector has genuinely complex entries."""

    eigenvalue: complex
    imag_ratio: float


class StopReason(enum.Enum):
    CRITERION_MET = "criterion-met"
    INVARIANT_SUBSPACE = "invariant-subspace"
    MAX_DIMENSION = "max-dimension"


@dataclass
class TraceRow:
    dim: int
    criterion: float          # NaN when the eigenvector was complex-rejected
    h_next: float
    elapsed_ns: int
    stop_reason: str = ""


@dataclass
class AdaptiveResult:
    aggregation: ArnoldiAggregation
    eigenvector: DominantEigenvector | None
    trace: list[TraceRow]
    stop_reason: StopReason
    criterion: float
    check_time_ns: int
    total_time_ns: int

    @property
    def converged(self) -> bool:
        return self.stop_reason is not StopReason.MAX_DIMENSION


def _select_eigenpair(values: np.ndarray, vectors: np.ndarray):
    # closest to one in the complex plane; ties broken by larger real part,
    # then by smaller index.
    dist = np.abs(values - 1.0)
    order = np.lexsort((np.arange(values.size), -values.real, dist))
    pick = int(order[0])
    return values[pick], vectors[:, pick]


def _finish_eigenpair(lam, vec, H, cfg, basis):
    scale = float(np.max(np.abs(vec)))
    if scale == 0.0:
        raise EigenSolverError("eigensolver returned a zero vector")
    if np.iscomplexobj(vec):
        ratio = float(np.max(np.abs(vec.imag))) / scale
        if ratio > cfg.eig_tolerance:
            return ComplexRejection(complex(lam), ratio)
        vec = np.ascontiguousarray(vec.real)
    else:
        vec = np.ascontiguousarray(vec, dtype=np.float64)
    lam = float(np.real(lam))
    # fixed sign for reproducibility: largest-magnitude entry positive
    if vec[int(np.argmax(np.abs(vec)))] < 0.0:
        vec = -vec
    resid = l2_norm(vec @ H - lam * vec)
    bound = 1e-8 * max(np.max(np.sum(np.abs(H), axis=1)), np.finfo(float).tiny) * l2_norm(vec)
    if resid > bound:
        raise EigenSolverError(
            f"eigenpair residual {resid:.3e} exceeds {bound:.3e}"
        )
    if basis is not None:
        nrm = l1_norm(vec @ basis)
        if nrm == 0.0:
            raise EigenSolverError("eigenvector maps to zero through the basis")
        return DominantEigenvector(vec / nrm, lam, True, nrm)
    return DominantEigenvector(vec / l2_norm(vec), lam, True, None)


def dominant_eigenvector(
    H: np.ndarray, cfg: CriterionConfig, basis: np.ndarray | None = None
) -> DominantEigenvector | ComplexRejection:
    """Left eigenvector of ``H`` whose eigenvalue is numerically closest to 1.

    Solves the right eigenproblem of ``H^T``.  Dimensions up to
    ``cfg.dense_cutoff`` use a dense decomposition (bit-reproducible and
    robust at this scale); larger ones an implicitly restarted scheme in
    shift-invert mode around 1 with a seeded start vector, falling back to
    dense if the factorisation fails.  When ``basis`` is given the vector is
    scaled so that ``||pi^T basis||_1 = 1``.

    Returns :class:`ComplexRejection` when the selected eigenvector carries
    more relative imaginary mass than ``cfg.eig_tolerance``; raises
    :class:`EigenSolverError` if the iterative solver does not converge.
    """
    j = H.shape[0]
    if j == 0 or H.shape != (j, j):
        raise ValidationError(f"step matrix must be square and nonempty, got {H.shape}")
    if j <= cfg.dense_cutoff:
        values, vectors = np.linalg.eig(H.T)
    else:
        k = min(6, j - 2)
        v0 = np.random.default_rng(cfg.seed).standard_normal(j)
        try:
            values, vectors = scipy.sparse.linalg.eigs(H.T, k=k, sigma=1.0, v0=v0)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise EigenSolverError(f"iterative eigensolver did not converge: {exc}") from exc
        except (RuntimeError, ValueError, np.linalg.LinAlgError):
            values, vectors = np.linalg.eig(H.T)
    lam, vec = _select_eigenpair(values, vectors)
    return _finish_eigenpair(lam, vec, H, cfg, basis)


def criterion_value(pi, H: np.ndarray, Q: np.ndarray, P) -> float:
    """Stopping-criterion value ``<|pi|, b>`` with ``b`` the l1 row sums of
    ``H Q - Q P``.  The difference is never materialised beyond one row."""
    vec = pi.vector if isinstance(pi, DominantEigenvector) else np.asarray(pi)
    b = residual_row_sums(H, Q, P)
    if vec.shape[0] != b.shape[0]:
        raise ValidationError(
            f"eigenvector of length {vec.shape[0]} against {b.shape[0]} rows"
        )
    return float(np.dot(np.abs(vec), b))


def run_adaptive(
    p0: np.ndarray,
    P,
    cfg: CriterionConfig,
    reorthogonalize: bool = False,
) -> AdaptiveResult:
    """Expand until the criterion falls below ``cfg.epsilon``.

    Every ``cfg.check_every`` expansions the dominant eigenvector of the
    current step matrix is computed; complex-rejected checks are recorded
    with a NaN criterion and expansion continues.  The run also stops when
    the subspace becomes invariant (exact aggregation) or at
    ``cfg.max_dimension`` (returned as not-converged; inspect
    ``stop_reason``).  A final check is always performed at the stopping
    dimension so the trace ends with a meaningful row.
    """
    t0 = time.perf_counter_ns()
    check_ns = 0
    n = P.shape[0]
    maxdim = n if cfg.max_dimension is None else min(cfg.max_dimension, n)
    state = ArnoldiState.initialize(p0, P, reorthogonalize=reorthogonalize)
    trace: list[TraceRow] = []
    last_eig: DominantEigenvector | None = None
    last_crit = float("nan")
    stop: StopReason | None = None

    while True:
        j = state.dim
        forced = state.invariant or j >= maxdim
        crit_met = False
        if forced or j % cfg.check_every == 0:
            tc = time.perf_counter_ns()
            ev = dominant_eigenvector(state.hessenberg(), cfg, basis=state.basis_view())
            if isinstance(ev, DominantEigenvector):
                crit = float(np.dot(np.abs(ev.vector), state.residual_row_sums()))
                last_eig, last_crit = ev, crit
                crit_met = crit <= cfg.epsilon
            else:
                crit = float("nan")
                last_crit = crit
            check_ns += time.perf_counter_ns() - tc
            trace.append(TraceRow(j, crit, state.h_next, time.perf_counter_ns() - t0))
        if state.invariant:
            stop = StopReason.INVARIANT_SUBSPACE
        elif crit_met:
            stop = StopReason.CRITERION_MET
        elif j >= maxdim:
            stop = StopReason.MAX_DIMENSION
        if stop is not None:
            break
        state.expand(P)

    trace[-1].stop_reason = stop.value
    return AdaptiveResult(
        aggregation=state.aggregation(),
        eigenvector=last_eig,
        trace=trace,
        stop_reason=stop,
        criterion=last_crit,
        check_time_ns=check_ns,
        total_time_ns=time.perf_counter_ns() - t0,
    )


TRACE_SCHEMA = "j,criterion,h_next,elapsed_ns,stop_reason"


def format_trace(trace: list[TraceRow]) -> str:
    """Render trace rows as CSV (schema v1), stop reason on the last row."""
    lines = ["# arnagg trace schema v1", TRACE_SCHEMA]
    for row in trace:
        lines.append(
            f"{row.dim},{row.criterion!r},{row.h_next!r},{row.elapsed_ns},{row.stop_reason}"
        )
    return "\n".join(lines) + "\n"
