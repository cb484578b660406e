"""File formats: MatrixMarket matrices, plain-text vectors, and the
aggregation directory layout (H.mtx, Q.mtx, pi0.txt, meta.json, plus
boundary.txt when the boundary vector exists)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .arnoldi import ArnoldiAggregation
from .chain import check_generator_matrix, check_stochastic_matrix
from .errors import ValidationError
from .models import BuiltinModel, detect_matrix_kind


def write_matrix(path, M, comment: str = "") -> None:
    """Write a matrix in MatrixMarket format: coordinate for sparse input
    (1-based indices), array for dense input."""
    scipy.io.mmwrite(str(path), M, comment=comment, precision=17)


def read_matrix(path):
    """Read a MatrixMarket file; sparse files come back as canonical CSR."""
    M = scipy.io.mmread(str(path))
    if sp.issparse(M):
        A = sp.csr_array(M)
        A.sum_duplicates()
        A.sort_indices()
        return A
    return np.asarray(M, dtype=np.float64)


def read_stochastic_matrix(path) -> sp.csr_array:
    return check_stochastic_matrix(read_matrix(path))


def read_generator_matrix(path) -> sp.csr_array:
    return check_generator_matrix(read_matrix(path))


def write_vector(path, v) -> None:
    """One float per line, full double precision."""
    np.savetxt(str(path), np.asarray(v, dtype=np.float64), fmt="%.17g")


def read_vector(path) -> np.ndarray:
    v = np.loadtxt(str(path), dtype=np.float64, ndmin=1)
    if v.ndim != 1:
        raise ValidationError(f"{path}: expected one value per line")
    return v


def save_aggregation(directory, agg: ArnoldiAggregation) -> Path:
    """Serialize an aggregation to a directory (created if missing)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "H.mtx", agg.step_matrix)
    write_matrix(d / "Q.mtx", agg.basis)
    write_vector(d / "pi0.txt", agg.pi0)
    if agg.boundary_vector is not None:
        write_vector(d / "boundary.txt", agg.boundary_vector)
    meta = {
        "dimension": agg.dim,
        "source_norm": agg.source_norm,
        "boundary_coefficient": agg.boundary_coefficient,
        "invariant": agg.invariant,
    }
    (d / "meta.json").write_text(json.dumps(meta, indent=1) + "\n")
    return d


def load_aggregation(directory) -> ArnoldiAggregation:
    """Load an aggregation directory written by :func:`save_aggregation`.

    Residual row sums are not stored; consumers recompute them on demand.
    """
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    H = np.atleast_2d(np.asarray(read_matrix(d / "H.mtx"), dtype=np.float64))
    Q = np.atleast_2d(np.asarray(read_matrix(d / "Q.mtx"), dtype=np.float64))
    pi0 = read_vector(d / "pi0.txt")
    j = int(meta["dimension"])
    if H.shape != (j, j) or Q.shape[0] != j or pi0.shape[0] != j:
        raise ValidationError(f"{d}: inconsistent aggregation dimensions")
    boundary = d / "boundary.txt"
    q_next = read_vector(boundary) if boundary.exists() else None
    return ArnoldiAggregation(
        step_matrix=H,
        basis=Q,
        pi0=pi0,
        boundary_coefficient=float(meta["boundary_coefficient"]),
        boundary_vector=q_next,
        source_norm=float(meta["source_norm"]),
        invariant=bool(meta["invariant"]),
        residual_row_norms=None,
    )


def save_model(directory, model: BuiltinModel) -> Path:
    """Export a catalog model: P.mtx, generator.mtx (when generated),
    descriptor.json, and the point-mass initial distribution p0.txt."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "P.mtx", model.transition_matrix)
    if model.generator is not None:
        write_matrix(d / "generator.mtx", model.generator)
    desc = model.descriptor
    (d / "descriptor.json").write_text(
        json.dumps(
            {
                "name": desc.name,
                "state_count": desc.state_count,
                "uniformisation_rate": desc.uniformisation_rate,
                "initial_state": desc.initial_state,
                "note": desc.note,
                "kind": "stochastic",
            },
            indent=1,
        )
        + "\n"
    )
    write_vector(d / "p0.txt", model.initial_distribution())
    return d


def ingest_matrix(path, descriptor_path=None):
    """Read a matrix for ingestion, resolving its kind and optional rate.

    The optional JSON descriptor may carry ``kind`` ('generator' or
    'stochastic') and ``uniformisation_rate``; without it the kind is
    detected from row sums and validated by the corresponding check.
    """
    M = read_matrix(path)
    kind = None
    rate = None
    if descriptor_path is not None:
        meta = json.loads(Path(descriptor_path).read_text())
        kind = meta.get("kind")
        rate = meta.get("uniformisation_rate")
    if kind is None:
        kind = detect_matrix_kind(M)
    return M, kind, rate
