"""Command-line front end.

Verbs: ``aggregate`` (adaptive build), ``sweep`` (error/criterion sweep over
dimensions), ``transient`` (naive and/or aggregated transient vectors),
``bench`` (wall-clock timings), ``model`` (catalog export/describe).  All
options may also come from a JSON config file (``--config``); explicit flags
override file values.

Exit codes: 0 success, 2 bad input, 3 aggregation did not converge,
4 state-space overflow.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import io as aio
from .arnoldi import (
    ArnoldiState,
    approx_transient,
    build_aggregation,
    closed_form_error,
    naive_criteria,
)
from .chain import check_distribution, l1_norm, transient_naive
from .convergence import (
    ComplexRejection,
    CriterionConfig,
    dominant_eigenvector,
    format_trace,
    run_adaptive,
)
from .errors import ArnaggError, StateSpaceOverflowError, ValidationError
from .models import BUILTIN_NAMES, BuiltinModel, builtin

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_OVERFLOW = 4

SWEEP_SCHEMA_COMMENT = "# arnagg sweep schema v1"
BENCH_SCHEMA_COMMENT = "# arnagg bench schema v1"


@dataclass
class RunConfig:
    """Merged CLI/JSON options driving a run."""

    model: str | None = None
    matrix: str | None = None
    matrix_descriptor: str | None = None
    cap: int | None = None
    rate: float | None = None
    p0: str | None = None          # index:i | uniform | random | file:PATH
    epsilon: float | None = None
    check_every: int = 10
    max_dim: int | None = None
    horizons: tuple[int, ...] = (10_000,)
    dims: tuple[int, ...] = ()
    seed: int = 0
    out: str = "arnagg-out"
    reps: int = 5
    steps: int | None = None
    agg: str | None = None
    naive: bool = False

    def criterion_config(self) -> CriterionConfig:
        if self.epsilon is None:
            raise ValidationError("epsilon is required (no universal default exists)")
        return CriterionConfig(
            epsilon=self.epsilon,
            check_every=self.check_every,
            max_dimension=self.max_dim,
            seed=self.seed,
        )


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _merge_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    file_values = {}
    if getattr(args, "config", None):
        file_values = json.loads(Path(args.config).read_text())
    for f in fields(RunConfig):
        if f.name in file_values and file_values[f.name] is not None:
            value = file_values[f.name]
            if f.name in ("horizons", "dims"):
                value = tuple(int(x) for x in value)
            setattr(cfg, f.name, value)
        flag = getattr(args, f.name, None)
        if flag is not None and flag is not False:
            setattr(cfg, f.name, flag)
    if not cfg.horizons or any(k < 0 for k in cfg.horizons):
        raise ValidationError("horizons must be a nonempty list of step counts >= 0")
    return cfg


def _load_model(cfg: RunConfig) -> BuiltinModel:
    if cfg.matrix is not None:
        M, kind, rate = aio.ingest_matrix(cfg.matrix, cfg.matrix_descriptor)
        return builtin(
            "rsvp-ingest", matrix=M, kind=kind, rate=cfg.rate if cfg.rate is not None else rate
        )
    if cfg.model is None:
        raise ValidationError(f"need --model (one of {BUILTIN_NAMES}) or --matrix FILE")
    return builtin(cfg.model, cap=cfg.cap, rate=cfg.rate)


def _resolve_p0(cfg: RunConfig, model: BuiltinModel) -> np.ndarray:
    n = model.n
    spec = cfg.p0 or f"index:{model.descriptor.initial_state}"
    if spec.startswith("index:"):
        i = int(spec.split(":", 1)[1])
        if not 0 <= i < n:
            raise ValidationError(f"p0 index {i} outside 0..{n - 1}")
        p0 = np.zeros(n)
        p0[i] = 1.0
        return p0
    if spec == "uniform":
        return np.full(n, 1.0 / n)
    if spec == "random":
        rng = np.random.default_rng(cfg.seed)
        p0 = rng.random(n)
        p0 /= p0.sum()
        p0[-1] = 1.0 - p0[:-1].sum()
        return check_distribution(p0)
    if spec.startswith("file:"):
        return check_distribution(aio.read_vector(spec.split(":", 1)[1]), n)
    raise ValidationError(f"unknown p0 spec {spec!r}")


def _outdir(cfg: RunConfig) -> Path:
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_aggregate(cfg: RunConfig) -> int:
    model = _load_model(cfg)
    p0 = _resolve_p0(cfg, model)
    result = run_adaptive(p0, model.transition_matrix, cfg.criterion_config())
    out = _outdir(cfg)
    aio.save_aggregation(out / "aggregation", result.aggregation)
    (out / "trace.csv").write_text(format_trace(result.trace))
    print(f"stop_reason={result.stop_reason.value}")
    print(f"dimension={result.aggregation.dim}")
    print(f"criterion={result.criterion!r}")
    print(f"artifacts={out}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.dims:
        raise ValidationError("sweep needs --dims j1,j2,...")
    dims = tuple(sorted(cfg.dims))
    if any(j < 1 for j in dims):
        raise ValidationError("dimensions must be >= 1")
    model = _load_model(cfg)
    n = model.n
    P = model.transition_matrix
    p0 = _resolve_p0(cfg, model)
    usable = [j for j in dims if j <= n]
    for j in dims:
        if j > n:
            print(f"warning: dimension {j} exceeds state count {n}, skipped", file=sys.stderr)

    # one run to the largest requested dimension; prefixes are snapshots
    t0 = time.perf_counter_ns()
    state = ArnoldiState.initialize(p0, P)
    build_ns = {1: time.perf_counter_ns() - t0}
    target = max(usable) if usable else 0
    while state.dim < target and not state.invariant:
        state.expand(P)
        build_ns[state.dim] = time.perf_counter_ns() - t0

    horizons = tuple(sorted(cfg.horizons))
    naive = {k: transient_naive(p0, P, k) for k in horizons}
    eig_cfg = CriterionConfig(epsilon=float("inf"), seed=cfg.seed)

    header = ["j"]
    for k in horizons:
        header += [f"err_k{k}", f"cfe_k{k}"]
    header += ["criterion", "res_l1", "h_abs", "res_inf", "build_ns", "eval_ns"]
    lines = [SWEEP_SCHEMA_COMMENT, ",".join(header)]
    for j in usable:
        if j > state.dim:
            print(
                f"warning: subspace invariant at {state.dim}, dimension {j} skipped",
                file=sys.stderr,
            )
            continue
        agg = state.aggregation(j)
        te = time.perf_counter_ns()
        cells = [str(j)]
        for k in horizons:
            err = l1_norm(approx_transient(agg, k) - naive[k])
            cfe = closed_form_error(agg, P, k)
            cells += [repr(err), repr(cfe)]
        eval_ns = time.perf_counter_ns() - te
        ev = dominant_eigenvector(agg.step_matrix, eig_cfg, basis=agg.basis)
        if isinstance(ev, ComplexRejection):
            crit = float("nan")
        else:
            crit = float(np.dot(np.abs(ev.vector), state.residual_row_sums(j)))
        nc = naive_criteria(agg, P)
        cells += [repr(crit), repr(nc.residual_l1), repr(nc.boundary_abs),
                  repr(nc.relation_inf), str(build_ns[j]), str(eval_ns)]
        lines.append(",".join(cells))
    out = _outdir(cfg)
    path = out / "sweep.csv"
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_transient(cfg: RunConfig) -> int:
    if cfg.steps is None:
        raise ValidationError("transient needs --steps K")
    k = cfg.steps
    if k < 0:
        raise ValidationError("steps must be >= 0")
    if not cfg.naive and cfg.agg is None:
        raise ValidationError("transient needs --naive and/or --agg DIR")
    model = _load_model(cfg)
    P = model.transition_matrix
    p0 = _resolve_p0(cfg, model)
    out = _outdir(cfg)
    p_naive = p_approx = None
    if cfg.naive:
        p_naive = transient_naive(p0, P, k)
        aio.write_vector(out / f"p_naive_{k}.txt", p_naive)
        print(f"wrote {out / f'p_naive_{k}.txt'}")
    if cfg.agg is not None:
        agg_dir = Path(cfg.agg)
        if not (agg_dir / "meta.json").exists():
            raise ValidationError(f"no aggregation artifacts under {agg_dir}")
        agg = aio.load_aggregation(agg_dir)
        if agg.n != model.n:
            raise ValidationError(
                f"aggregation over {agg.n} states does not match model with {model.n}"
            )
        p_approx = approx_transient(agg, k)
        aio.write_vector(out / f"p_approx_{k}.txt", p_approx)
        print(f"wrote {out / f'p_approx_{k}.txt'}")
    if p_naive is not None and p_approx is not None:
        diff = l1_norm(p_approx - p_naive)
        (out / f"l1_error_{k}.txt").write_text(f"{diff!r}\n")
        print(f"l1_error={diff!r}")
    return EXIT_OK


def _median_ns(fn, reps: int) -> int:
    samples = []
    for _ in range(max(1, reps)):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    return int(np.median(samples))


def cmd_bench(cfg: RunConfig) -> int:
    model = _load_model(cfg)
    P = model.transition_matrix
    p0 = _resolve_p0(cfg, model)
    n = model.n
    reps = max(1, cfg.reps)
    note = "low-confidence" if reps == 1 else ""
    rows = [BENCH_SCHEMA_COMMENT, "metric,j,k,reps,value,unit,note"]

    def add(metric, j, k, value, unit):
        rows.append(f"{metric},{j},{k},{reps},{value!r},{unit},{note}")

    for k in cfg.horizons:
        ns = _median_ns(lambda: transient_naive(p0, P, k), reps)
        add("naive_transient", "", k, ns, "ns")
        print(f"naive p_{k}: {ns / 1e9:.3f} s")

    dims = [j for j in sorted(cfg.dims) if 1 <= j <= n]
    for j in dims:
        ns = _median_ns(lambda: build_aggregation(p0, P, j), reps)
        add("arnoldi_build", j, "", ns, "ns")
        agg = build_aggregation(p0, P, j)
        for k in cfg.horizons:
            ev = _median_ns(lambda: approx_transient(agg, k), reps)
            add("approx_transient", agg.dim, k, ev, "ns")

    if cfg.epsilon is not None:
        crit_cfg = cfg.criterion_config()
        result = run_adaptive(p0, P, crit_cfg)
        ns = _median_ns(lambda: run_adaptive(p0, P, crit_cfg), reps)
        add("adaptive_build", result.aggregation.dim, "", ns, "ns")
        share = result.check_time_ns / max(result.total_time_ns, 1)
        add("criterion_share", result.aggregation.dim, "", share, "ratio")
        print(f"adaptive build to j={result.aggregation.dim}: {ns / 1e9:.3f} s "
              f"(criterion share {share:.1%}, stop {result.stop_reason.value})")
        for k in cfg.horizons:
            ev = _median_ns(lambda: approx_transient(result.aggregation, k), reps)
            add("adaptive_transient", result.aggregation.dim, k, ev, "ns")
            naive_ns = _median_ns(lambda: transient_naive(p0, P, k), reps)
            speedup = naive_ns / max(ns + ev, 1)
            add("speedup_vs_naive", result.aggregation.dim, k, speedup, "ratio")
            print(f"speedup at k={k}: {speedup:.2f}x (aggregate+evaluate vs naive)")

    out = _outdir(cfg)
    path = out / "bench.csv"
    path.write_text("\n".join(rows) + "\n")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_model(cfg: RunConfig, describe: bool, export: str | None) -> int:
    model = _load_model(cfg)
    desc = model.descriptor
    payload = {
        "name": desc.name,
        "state_count": desc.state_count,
        "uniformisation_rate": desc.uniformisation_rate,
        "initial_state": desc.initial_state,
        "note": desc.note,
    }
    if describe or export is None:
        print(json.dumps(payload, indent=1))
    if export is not None:
        path = aio.save_model(export, model)
        print(f"exported to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arnagg",
        description="Krylov-subspace aggregation of finite Markov chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with the same keys as the flags")
        p.add_argument("--model", choices=BUILTIN_NAMES, help="builtin model name")
        p.add_argument("--matrix", help="MatrixMarket file to ingest instead of a builtin")
        p.add_argument("--matrix-descriptor", dest="matrix_descriptor",
                       help="JSON descriptor for the ingested matrix (kind, rate)")
        p.add_argument("--cap", type=int, help="population cap override for builtins")
        p.add_argument("--rate", type=float, help="uniformisation rate override")
        p.add_argument("--p0", help="index:i | uniform | random | file:PATH")
        p.add_argument("--seed", type=int, help="seed for random p0 and eigensolvers")
        p.add_argument("--out", help="output directory (default arnagg-out)")

    p = sub.add_parser("aggregate", help="adaptively build an aggregation")
    common(p)
    p.add_argument("--epsilon", type=float, help="stopping-criterion threshold")
    p.add_argument("--check-every", dest="check_every", type=int,
                   help="criterion cadence in expansions (default 10)")
    p.add_argument("--max-dim", dest="max_dim", type=int, help="dimension cap")

    p = sub.add_parser("sweep", help="error/criterion sweep over dimensions")
    common(p)
    p.add_argument("--dims", type=_parse_int_list, help="dimensions j1,j2,...")
    p.add_argument("--horizons", type=_parse_int_list, help="step counts k1,k2,...")

    p = sub.add_parser("transient", help="naive and/or aggregated transient vectors")
    common(p)
    p.add_argument("--steps", type=int, help="step count k")
    p.add_argument("--agg", help="aggregation directory written by 'aggregate'")
    p.add_argument("--naive", action="store_true", help="also compute the naive vector")

    p = sub.add_parser("bench", help="wall-clock timings")
    common(p)
    p.add_argument("--epsilon", type=float, help="criterion threshold for the adaptive run")
    p.add_argument("--check-every", dest="check_every", type=int)
    p.add_argument("--max-dim", dest="max_dim", type=int)
    p.add_argument("--dims", type=_parse_int_list, help="fixed dimensions to time")
    p.add_argument("--horizons", type=_parse_int_list, help="step counts to time")
    p.add_argument("--reps", type=int, help="repetitions per measurement (median, default 5)")

    p = sub.add_parser("model", help="describe or export a builtin model")
    common(p)
    p.add_argument("--describe", action="store_true", help="print the descriptor")
    p.add_argument("--export", help="directory to export matrices + descriptor")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "aggregate":
            return cmd_aggregate(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "transient":
            return cmd_transient(cfg)
        if args.command == "bench":
            return cmd_bench(cfg)
        if args.command == "model":
            return cmd_model(cfg, args.describe, args.export)
        parser.error(f"unknown command {args.command!r}")
    except StateSpaceOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except ArnaggError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
