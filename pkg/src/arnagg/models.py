"""Benchmark model catalog.

Reaction networks are enumerated into finite CTMCs with per-species
population caps: a reaction that would push any population beyond its cap is
blocked in that state (reflecting boundary).  The two-cluster availability
model is built directly from its transition structure because its shared
repair unit does not fit mass-action form.  Lumpable fixtures provide chains
with a known exact aggregation size for convergence tests.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .chain import check_generator_matrix, check_stochastic_matrix, uniformise
from .errors import StateSpaceOverflowError, ValidationError

DEFAULT_STATE_LIMIT = 1_000_000

BUILTIN_NAMES = ("lotka-volterra", "workstation-cluster", "gene-expression", "rsvp-ingest")


@dataclass(frozen=True)
class Reaction:
    """Mass-action reaction: input/output stoichiometry and a rate constant."""

    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    rate: float
    name: str = ""


@dataclass(frozen=True)
class ReactionNetwork:
    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    caps: tuple[int, ...]

    def __post_init__(self):
        s = len(self.species)
        if s == 0:
            raise ValidationError("network needs at least one species")
        if any(c < 1 for c in self.caps) or len(self.caps) != s:
            raise ValidationError("population caps must be >= 1, one per species")
        for r in self.reactions:
            if len(r.inputs) != s or len(r.outputs) != s:
                raise ValidationError(f"stoichiometry length mismatch in {r.name!r}")
            if any(v < 0 for v in r.inputs) or any(v < 0 for v in r.outputs):
                raise ValidationError(f"negative stoichiometry in {r.name!r}")
            if not r.rate > 0.0:
                raise ValidationError(f"rate constant must be > 0 in {r.name!r}")


@dataclass
class StateSpace:
    """Deterministically ordered reachable states with a population→index map."""

    states: np.ndarray            # (N, s) int64 population vectors
    index: dict[tuple[int, ...], int]

    def __len__(self) -> int:
        return self.states.shape[0]


@dataclass(frozen=True)
class ModelDescriptor:
    name: str
    state_count: int
    uniformisation_rate: float
    initial_state: int
    note: str = ""


@dataclass
class BuiltinModel:
    """A catalog entry: generator, uniformised chain, and metadata."""

    descriptor: ModelDescriptor
    transition_matrix: sp.csr_array
    generator: sp.csr_array | None = None
    network: ReactionNetwork | None = None
    state_space: StateSpace | None = None

    @property
    def n(self) -> int:
        return self.transition_matrix.shape[0]

    def initial_distribution(self) -> np.ndarray:
        p0 = np.zeros(self.n)
        p0[self.descriptor.initial_state] = 1.0
        return p0


def enumerate_state_space(
    net: ReactionNetwork,
    initial,
    hard_limit: int = DEFAULT_STATE_LIMIT,
) -> StateSpace:
    """Breadth-first closure of ``initial`` under all non-blocked reactions.

    Enumeration order is deterministic: BFS layer by layer, reactions in
    declaration order.  Raises :class:`StateSpaceOverflowError` beyond
    ``hard_limit`` states.
    """
    s = len(net.species)
    init = tuple(int(x) for x in initial)
    if len(init) != s:
        raise ValidationError(f"initial state has {len(init)} species, expected {s}")
    if any(not 0 <= init[i] <= net.caps[i] for i in range(s)):
        raise ValidationError("initial state outside population caps")
    moves = [(r.inputs, tuple(o - i for i, o in zip(r.inputs, r.outputs))) for r in net.reactions]
    caps = net.caps
    index = {init: 0}
    order = [init]
    queue = deque([init])
    while queue:
        state = queue.popleft()
        for inputs, delta in moves:
            ok = True
            for i in range(s):
                if state[i] < inputs[i]:
                    ok = False
                    break
            if not ok:
                continue
            target = tuple(state[i] + delta[i] for i in range(s))
            blocked = False
            for i in range(s):
                if target[i] > caps[i]:
                    blocked = True
                    break
            if blocked or target in index:
                continue
            if len(index) >= hard_limit:
                raise StateSpaceOverflowError(
                    f"state space exceeds the hard limit of {hard_limit}"
                )
            index[target] = len(order)
            order.append(target)
            queue.append(target)
    return StateSpace(np.array(order, dtype=np.int64), index)


def _propensity(rate: float, state, inputs) -> float:
    # mass action: rate * prod_i falling_factorial(population_i, stoich_i)
    p = rate
    for pop, need in zip(state, inputs):
        for k in range(need):
            p *= pop - k
    return p


def build_generator(net: ReactionNetwork, space: StateSpace) -> sp.csr_array:
    """Assemble the CTMC generator over an enumerated state space.

    Off-diagonal rates are summed mass-action propensities of the reactions
    mapping one state to another; diagonals are negative row sums.
    """
    s = len(net.species)
    moves = [
        (r.inputs, tuple(o - i for i, o in zip(r.inputs, r.outputs)), r.rate)
        for r in net.reactions
    ]
    caps = net.caps
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for si, state in enumerate(map(tuple, space.states)):
        for inputs, delta, rate in moves:
            prop = _propensity(rate, state, inputs)
            if prop <= 0.0:
                continue
            target = tuple(state[i] + delta[i] for i in range(s))
            if any(target[i] > caps[i] for i in range(s)):
                continue  # blocked at the reflecting boundary
            rows.append(si)
            cols.append(space.index[target])
            vals.append(prop)
    n = len(space)
    Q = sp.csr_array(
        sp.coo_array((vals, (rows, cols)), shape=(n, n), dtype=np.float64)
    )
    Q.sum_duplicates()
    diag = -np.asarray(Q.sum(axis=1)).ravel()
    Q = sp.csr_array(Q + sp.dia_array((diag[None, :], [0]), shape=(n, n)))
    Q.sort_indices()
    return check_generator_matrix(Q)


# -- catalog models ----------------------------------------------------------


def lotka_volterra_network(cap: int = 100) -> tuple[ReactionNetwork, tuple[int, int]]:
    """Predator-prey birth/predation/death system with reflecting caps.

    The classic stochastic parameterisation (prey birth 10, predation 0.01,
    predator death 10).  With the default cap of 100 per species the
    reachable space is the full (cap+1)^2 grid of 10,201 states and the
    largest exit rate is 2078.01, matching the published uniformisation
    rate of the benchmark.
    """
    if cap < 2:
        raise ValidationError("cap must be >= 2")
    net = ReactionNetwork(
        species=("prey", "predator"),
        reactions=(
            Reaction((1, 0), (2, 0), 10.0, "prey-birth"),
            Reaction((1, 1), (0, 2), 0.01, "predation"),
            Reaction((0, 1), (0, 0), 10.0, "predator-death"),
        ),
        caps=(cap, cap),
    )
    return net, (cap // 2, cap // 2)


def gene_expression_network() -> tuple[ReactionNetwork, tuple[int, ...]]:
    """Single-copy prokaryotic gene with explicit expression machinery.

    Transcription: polymerase binds the promoter, forms a closed complex,
    clears into elongation; the ribosome binding site of the nascent
    transcript becomes available while the polymerase is still elongating.
    Translation: ribosomes bind the site, clear it, elongate, and release
    the finished protein.  RNA polymerase and ribosome pools are folded into
    the rate constants; molecule counts are capped at five.  The published
    uniformisation rate of 16.78 pins the constants' scale.
    """
    # species: promoter (free), closed complex, elongating pol (pre/post RBS),
    # free RBS, ribosome-bound RBS, elongating ribosome, protein
    species = ("promoter", "closed-complex", "pol-pre-rbs", "pol-post-rbs",
               "rbs", "rbs-ribosome", "elongating-ribosome", "protein")
    z = (0,) * 8

    def stoich(**kw):
        v = list(z)
        for name, val in kw.items():
            v[species.index(name.replace("_", "-"))] = val
        return tuple(v)

    net = ReactionNetwork(
        species=species,
        reactions=(
            Reaction(stoich(promoter=1), stoich(closed_complex=1), 0.1, "pol-binding"),
            Reaction(stoich(closed_complex=1), stoich(promoter=1), 10.0, "pol-dissociation"),
            Reaction(stoich(closed_complex=1), stoich(promoter=1, pol_pre_rbs=1), 1.0,
                     "promoter-clearance"),
            Reaction(stoich(pol_pre_rbs=1), stoich(pol_post_rbs=1, rbs=1), 0.4,
                     "rbs-release"),
            Reaction(stoich(pol_post_rbs=1), z, 0.4, "termination"),
            Reaction(stoich(rbs=1), stoich(rbs_ribosome=1), 0.4, "ribosome-binding"),
            Reaction(stoich(rbs_ribosome=1), stoich(rbs=1, elongating_ribosome=1), 0.19,
                     "translation-clearance"),
            Reaction(stoich(elongating_ribosome=1), stoich(protein=1), 0.05,
                     "protein-completion"),
            Reaction(stoich(rbs=1), z, 0.0045, "transcript-decay"),
            Reaction(stoich(protein=1), z, 0.0005, "protein-decay"),
        ),
        caps=(1, 1, 5, 5, 5, 5, 5, 5),
    )
    return net, (1, 0, 0, 0, 0, 0, 0, 0)


# two-cluster availability model: failure/repair rates per hour
_WS_FAIL = 1.0 / 500
_SWITCH_FAIL = 1.0 / 4000
_LINE_FAIL = 1.0 / 5000
_INSPECT = 10.0
_WS_REPAIR = 2.0
_SWITCH_REPAIR = 0.25
_LINE_REPAIR = 0.125

# component currently held by the repair unit
_REP_NONE, _REP_L, _REP_R, _REP_LINE, _REP_TL, _REP_TR = range(6)


def _cluster_transitions(state, n_ws: int):
    left, right, line, tl, tr, rep = state
    out = []
    if left > 0:
        out.append(((left - 1, right, line, tl, tr, rep), left * _WS_FAIL))
    if right > 0:
        out.append(((left, right - 1, line, tl, tr, rep), right * _WS_FAIL))
    if line:
        out.append(((left, right, 0, tl, tr, rep), _LINE_FAIL))
    if tl:
        out.append(((left, right, line, 0, tr, rep), _SWITCH_FAIL))
    if tr:
        out.append(((left, right, line, tl, 0, rep), _SWITCH_FAIL))
    if rep == _REP_NONE:
        # the single repair unit inspects a failed component before repairing
        if left < n_ws:
            out.append(((left, right, line, tl, tr, _REP_L), _INSPECT))
        if right < n_ws:
            out.append(((left, right, line, tl, tr, _REP_R), _INSPECT))
        if not line:
            out.append(((left, right, line, tl, tr, _REP_LINE), _INSPECT))
        if not tl:
            out.append(((left, right, line, tl, tr, _REP_TL), _INSPECT))
        if not tr:
            out.append(((left, right, line, tl, tr, _REP_TR), _INSPECT))
    elif rep == _REP_L:
        out.append(((left + 1, right, line, tl, tr, _REP_NONE), _WS_REPAIR))
    elif rep == _REP_R:
        out.append(((left, right + 1, line, tl, tr, _REP_NONE), _WS_REPAIR))
    elif rep == _REP_LINE:
        out.append(((left, right, 1, tl, tr, _REP_NONE), _LINE_REPAIR))
    elif rep == _REP_TL:
        out.append(((left, right, line, 1, tr, _REP_NONE), _SWITCH_REPAIR))
    else:
        out.append(((left, right, line, tl, 1, _REP_NONE), _SWITCH_REPAIR))
    return out


def build_from_transitions(initial, transition_fn, hard_limit: int = DEFAULT_STATE_LIMIT):
    """BFS closure of an explicit transition function; returns (space, Q)."""
    index = {initial: 0}
    order = [initial]
    queue = deque([initial])
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    while queue:
        state = queue.popleft()
        si = index[state]
        for target, rate in transition_fn(state):
            ti = index.get(target)
            if ti is None:
                if len(index) >= hard_limit:
                    raise StateSpaceOverflowError(
                        f"state space exceeds the hard limit of {hard_limit}"
                    )
                ti = len(order)
                index[target] = ti
                order.append(target)
                queue.append(target)
            rows.append(si)
            cols.append(ti)
            vals.append(rate)
    n = len(order)
    Q = sp.csr_array(sp.coo_array((vals, (rows, cols)), shape=(n, n), dtype=np.float64))
    Q.sum_duplicates()
    diag = -np.asarray(Q.sum(axis=1)).ravel()
    Q = sp.csr_array(Q + sp.dia_array((diag[None, :], [0]), shape=(n, n)))
    Q.sort_indices()
    space = StateSpace(np.array(order, dtype=np.int64), index)
    return space, check_generator_matrix(Q)


def workstation_cluster(n_ws: int = 20) -> tuple[StateSpace, sp.csr_array]:
    """Two clusters of ``n_ws`` workstations, two switches, one backbone,
    repaired one at a time by a shared unit (rate-10 inspection, then repair).
    For ``n_ws = 20`` the reachable space has 15,540 states."""
    initial = (n_ws, n_ws, 1, 1, 1, _REP_NONE)
    return build_from_transitions(initial, lambda s: _cluster_transitions(s, n_ws))


def detect_matrix_kind(M) -> str:
    """Classify a square matrix as 'stochastic' or 'generator' by row sums."""
    rows = np.asarray(M.sum(axis=1)).ravel()
    if rows.size and np.max(np.abs(rows - 1.0)) <= 1e-9:
        return "stochastic"
    if rows.size and np.max(np.abs(rows)) <= 1e-6:
        return "generator"
    raise ValidationError("matrix rows sum neither to 1 (chain) nor to 0 (generator)")


def builtin(
    name: str,
    *,
    cap: int | None = None,
    matrix=None,
    kind: str | None = None,
    rate: float | None = None,
    hard_limit: int = DEFAULT_STATE_LIMIT,
) -> BuiltinModel:
    """Build a catalog model by name.

    ``lotka-volterra`` (optional ``cap``, default 100), ``gene-expression``
    and ``workstation-cluster`` are generated; ``rsvp-ingest`` wraps a
    user-supplied matrix (the RSVP chain cannot be generated here) passed as
    ``matrix`` with an optional ``kind`` ('generator' or 'stochastic',
    detected from row sums when omitted) and uniformisation ``rate``.
    """
    if name == "lotka-volterra":
        net, init = lotka_volterra_network(100 if cap is None else cap)
        space = enumerate_state_space(net, init, hard_limit)
        Q = build_generator(net, space)
        max_exit = float(np.max(np.abs(Q.diagonal())))
        P, used = uniformise(Q, rate if rate is not None else max_exit)
        desc = ModelDescriptor(
            name, len(space), used, space.index[init],
            note="predator-prey dynamics with reflecting population caps",
        )
        return BuiltinModel(desc, P, Q, net, space)
    if name == "gene-expression":
        net, init = gene_expression_network()
        space = enumerate_state_space(net, init, hard_limit)
        Q = build_generator(net, space)
        max_exit = float(np.max(np.abs(Q.diagonal())))
        P, used = uniformise(Q, rate if rate is not None else max_exit)
        desc = ModelDescriptor(
            name, len(space), used, space.index[init],
            note="single-copy prokaryotic gene expression, pooled machinery",
        )
        return BuiltinModel(desc, P, Q, net, space)
    if name == "workstation-cluster":
        space, Q = workstation_cluster(20 if cap is None else cap)
        max_exit = float(np.max(np.abs(Q.diagonal())))
        P, used = uniformise(Q, rate if rate is not None else max_exit)
        desc = ModelDescriptor(
            name, len(space), used, 0,
            note="two workstation clusters with switches, backbone and a shared repair unit",
        )
        return BuiltinModel(desc, P, Q, None, space)
    if name == "rsvp-ingest":
        if matrix is None:
            raise ValidationError("rsvp-ingest needs an ingested matrix")
        mk = kind or detect_matrix_kind(matrix)
        if mk == "generator":
            Q = check_generator_matrix(matrix)
            P, used = uniformise(Q, rate)
        elif mk == "stochastic":
            Q = None
            P = check_stochastic_matrix(matrix)
            used = float("nan") if rate is None else float(rate)
        else:
            raise ValidationError(f"unknown matrix kind {mk!r}")
        desc = ModelDescriptor(
            name, P.shape[0], used, 0, note="ingested connection-management chain"
        )
        return BuiltinModel(desc, P, Q, None, None)
    raise ValidationError(f"unknown builtin model {name!r}; choose from {BUILTIN_NAMES}")


def lumpable_test_chain(
    block_sizes, seed: int = 0
) -> tuple[sp.csr_array, int, np.ndarray]:
    """Chain with a known exact aggregation size, for convergence fixtures.

    States are partitioned into blocks; every state in a block spreads the
    same aggregate probability uniformly over each target block, so the
    chain is lumpable with respect to the partition in both the row and the
    column sense.  Started block-uniformly, the Krylov subspace is invariant
    at a dimension no larger than the number of blocks.

    Returns ``(P, exact_size, p0)`` with ``exact_size = len(block_sizes)``
    and ``p0`` uniform on the first block.
    """
    sizes = [int(b) for b in block_sizes]
    if not sizes or any(b < 1 for b in sizes):
        raise ValidationError("block sizes must be a nonempty list of positive ints")
    m = len(sizes)
    n = sum(sizes)
    rng = np.random.default_rng(seed)
    S = rng.uniform(0.5, 1.5, size=(m, m))
    S /= S.sum(axis=1, keepdims=True)
    S[:, -1] = 1.0 - S[:, :-1].sum(axis=1)  # exact unit row sums
    P = np.empty((n, n))
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    for b in range(m):
        row = np.empty(n)
        for c in range(m):
            row[offsets[c]:offsets[c + 1]] = S[b, c] / sizes[c]
        P[offsets[b]:offsets[b + 1], :] = row
    p0 = np.zeros(n)
    p0[: sizes[0]] = 1.0 / sizes[0]
    return check_stochastic_matrix(sp.csr_array(P)), m, p0
