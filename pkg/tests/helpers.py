"""Shared fixtures: seeded random chains, distributions, and dense oracles."""

import numpy as np
import scipy.sparse as sp

from arnagg import check_stochastic_matrix


def random_stochastic(rng, n, extra_per_row=4):
    """Sparse row-stochastic matrix: a positive diagonal plus a few random
    off-diagonal entries per row (irreducible-ish, well scaled)."""
    rows, cols, vals = [], [], []
    for i in range(n):
        k = min(n - 1, 1 + int(rng.integers(1, extra_per_row + 1)))
        targets = rng.choice(n, size=k, replace=False)
        weights = rng.uniform(0.1, 1.0, size=k)
        rows.extend([i] * k)
        cols.extend(int(t) for t in targets)
        vals.extend(weights)
        rows.append(i)
        cols.append(i)
        vals.append(rng.uniform(0.5, 1.5))
    M = sp.csr_array(sp.coo_array((vals, (rows, cols)), shape=(n, n)))
    M.sum_duplicates()
    dense = M.toarray()
    dense /= dense.sum(axis=1, keepdims=True)
    return check_stochastic_matrix(sp.csr_array(dense))


def random_dense_mixing(rng, n):
    """Dense strictly positive stochastic matrix (fast mixing, benign)."""
    M = rng.uniform(0.1, 1.0, size=(n, n))
    M /= M.sum(axis=1, keepdims=True)
    return check_stochastic_matrix(sp.csr_array(M))


def random_low_rank_stochastic(rng, n, rank):
    """Stochastic matrix of rank <= rank: positive mixture of few profiles."""
    W = rng.uniform(0.1, 1.0, size=(n, rank))
    V = rng.uniform(0.1, 1.0, size=(rank, n))
    M = W @ V
    M /= M.sum(axis=1, keepdims=True)
    return check_stochastic_matrix(sp.csr_array(M))


def random_distribution(rng, n):
    p = rng.uniform(0.05, 1.0, size=n)
    p /= p.sum()
    p[-1] = 1.0 - p[:-1].sum()
    return p


def basis_vector(n, i=0):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def cyclic_block_chain(block_sizes):
    """Block-uniform chain whose quotient is a cycle: Krylov directions stay
    O(1) until the subspace closes at exactly len(block_sizes)."""
    m = len(block_sizes)
    n = sum(block_sizes)
    offsets = np.concatenate(([0], np.cumsum(block_sizes)))
    P = np.zeros((n, n))
    for b in range(m):
        c = (b + 1) % m
        P[offsets[b]:offsets[b + 1], offsets[c]:offsets[c + 1]] = 1.0 / block_sizes[c]
    p0 = np.zeros(n)
    p0[: block_sizes[0]] = 1.0 / block_sizes[0]
    return check_stochastic_matrix(sp.csr_array(P)), m, p0


def krylov_rows(p0, P, count):
    """Stack [p0^T; p0^T P; ...; p0^T P^{count-1}] densely (test oracle)."""
    rows = np.empty((count, p0.shape[0]))
    v = np.array(p0, dtype=float)
    for i in range(count):
        rows[i] = v
        v = v @ P
    return rows


def dense_relation_residual(agg, P):
    """Independent dense evaluation of the Arnoldi relation residual."""
    Pd = P.toarray() if sp.issparse(P) else np.asarray(P)
    R = agg.step_matrix @ agg.basis - agg.basis @ Pd
    if agg.boundary_coefficient > 0.0:
        R[-1] += agg.boundary_coefficient * agg.boundary_vector
    return float(np.max(np.sum(np.abs(R), axis=1)))
