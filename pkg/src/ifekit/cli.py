"""ifebench: command-line benchmark and verification harness.

Loads or generates a graph, builds a seeded workload, runs a policy x
thread grid through the engine, and emits a human summary plus optional
CSV, per-level table, and SVG speedup chart.  Exit codes: 0 success,
1 at least one failed cell, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from . import _kernels
from .bench import (
    BenchReport,
    GridConfig,
    WorkloadSpec,
    emit_level_table,
    emit_speedup_chart,
    generate_sources,
    run_grid,
)
from .errors import IfeError
from .graph import generate_random_graph, load_edge_list
from .dispatcher import POLICY_KINDS


class _UsageError(Exception):
    pass


def _parse_random(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError("--random expects N:DEG:SEED")
    try:
        n = int(parts[0])
        deg = float(parts[1])
        seed = int(parts[2])
    except ValueError as exc:
        raise _UsageError(f"bad --random value: {exc}") from None
    return n, deg, seed


def _parse_int_list(text, flag):
    try:
        vals = [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise _UsageError(f"{flag} expects comma-separated integers: {exc}") from None
    if not vals:
        raise _UsageError(f"{flag} got an empty list")
    return vals


def _parse_policies(text):
    kinds = [tok.strip() for tok in text.split(",") if tok.strip()]
    for kind in kinds:
        if kind not in POLICY_KINDS:
            raise _UsageError(f"unknown policy {kind!r}; choose from {POLICY_KINDS}")
    if not kinds:
        raise _UsageError("--policy got an empty list")
    return kinds


def _read_int_file(path, flag):
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise _UsageError(f"{flag}: {exc}") from None
    vals = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            vals.append(int(line))
        except ValueError:
            raise _UsageError(f"{flag}: bad node id {line!r}") from None
    if not vals:
        raise _UsageError(f"{flag}: file lists no node ids")
    return vals


def build_parser():
    p = argparse.ArgumentParser(
        prog="ifebench",
        description="Benchmark the parallel shortest-path engine over a "
                    "policy x thread grid.",
    )
    gsrc = p.add_mutually_exclusive_group(required=True)
    gsrc.add_argument("--graph", metavar="PATH",
                      help="edge-list file (u v per line) or binary snapshot")
    gsrc.add_argument("--random", metavar="N:DEG:SEED",
                      help="generate a seeded random graph")
    p.add_argument("--undirected", action="store_true",
                   help="treat input edges as undirected")
    p.add_argument("--policy", default="ntks", metavar="LIST",
                   help="comma list from {1t1s,nt1s,ntks,ntkms} (default ntks)")
    p.add_argument("--k", default=None, metavar="LIST",
                   help="comma list of k values for ntks/ntkms (defaults 32/4)")
    p.add_argument("--threads", default="1", metavar="LIST",
                   help="comma list of thread counts (default 1)")
    wsrc = p.add_mutually_exclusive_group()
    wsrc.add_argument("--sources", type=int, default=1, metavar="N",
                      help="number of randomly selected sources (default 1)")
    wsrc.add_argument("--source-file", metavar="PATH",
                      help="file with one source node id per line")
    p.add_argument("--seed", type=int, default=0, help="workload seed (default 0)")
    p.add_argument("--return", dest="return_mode", choices=("lengths", "paths"),
                   default="lengths", help="result kind (default lengths)")
    p.add_argument("--dest-file", metavar="PATH",
                   help="restrict output to node ids listed in this file")
    p.add_argument("--max-paths", type=int, default=None, metavar="N",
                   help="cap enumerated paths per (source, destination) pair")
    p.add_argument("--frontier-morsel", type=int, default=None, metavar="N",
                   help="dense frontier morsel size (sparse uses N//2)")
    p.add_argument("--output-morsel", type=int, default=None, metavar="N",
                   help="output morsel size (default 4096)")
    p.add_argument("--reps", type=int, default=3, help="measured runs per cell (default 3)")
    p.add_argument("--warmup", type=int, default=1, help="discarded runs per cell (default 1)")
    p.add_argument("--verify", action="store_true",
                   help="check every cell against the serial references")
    p.add_argument("--csv", metavar="PATH", help="write the report as CSV")
    p.add_argument("--svg", metavar="PATH", help="write a speedup chart")
    p.add_argument("--level-table", action="store_true",
                   help="print per-level scalability (single source, lengths)")
    p.add_argument("--backend", choices=_kernels.BACKENDS, default=None,
                   help="kernel backend (default: IFEKIT_BACKEND or auto)")
    return p


def _load_graph(args):
    if args.random is not None:
        n, deg, seed = _parse_random(args.random)
        g = generate_random_graph(n, deg, seed, directed=not args.undirected)
        label = f"random:{n}:{deg:g}:{seed}"
        return g, label
    path = args.graph
    if path.endswith(".bin") or path.endswith(".snapshot"):
        from .graph import load_snapshot

        return load_snapshot(path), path
    import pathlib

    return load_edge_list(pathlib.Path(path), directed=not args.undirected), path


def _workload(args, g):
    if args.source_file is not None:
        sources = _read_int_file(args.source_file, "--source-file")
        for s in sources:
            if not 0 <= s < g.num_nodes:
                raise _UsageError(f"--source-file: node {s} out of range")
        return sources
    if args.sources < 1:
        raise _UsageError("--sources must be >= 1")
    spec = WorkloadSpec(num_sources=args.sources, seed=args.seed)
    return list(generate_sources(g, spec).sources)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)

    try:
        g, dataset = _load_graph(args)
        sources = _workload(args, g)
        kinds = _parse_policies(args.policy)
        ks = [None] if args.k is None else _parse_int_list(args.k, "--k")
        threads = _parse_int_list(args.threads, "--threads")
        if any(t < 1 for t in threads):
            raise _UsageError("--threads values must be >= 1")
        policies = [(kind, k) for kind in kinds for k in ks]
        destinations = None
        if args.dest_file is not None:
            destinations = _read_int_file(args.dest_file, "--dest-file")
        if args.level_table and (len(sources) != 1 or args.return_mode != "lengths"):
            raise _UsageError("--level-table needs --sources 1 and --return lengths")
        if args.reps < 1:
            raise _UsageError("--reps must be >= 1")
        if args.warmup < 0:
            raise _UsageError("--warmup must be >= 0")

        config = GridConfig(
            graph=g, dataset=dataset, sources=sources, policies=policies,
            threads=threads, return_modes=[args.return_mode],
            repetitions=args.reps, warmup=args.warmup, verify=args.verify,
            backend=args.backend, max_paths_per_pair=args.max_paths,
            destinations=destinations,
        )
        if args.frontier_morsel is not None:
            if args.frontier_morsel < 1:
                raise _UsageError("--frontier-morsel must be >= 1")
            config.dense_morsel = args.frontier_morsel
            config.sparse_morsel = max(1, args.frontier_morsel // 2)
        if args.output_morsel is not None:
            if args.output_morsel < 1:
                raise _UsageError("--output-morsel must be >= 1")
            config.output_morsel = args.output_morsel
        config.progress = lambda msg: print(f"running: {msg}", file=sys.stderr)
    except _UsageError as exc:
        print(f"ifebench: {exc}", file=sys.stderr)
        return 2
    except (IfeError, OSError, ValueError) as exc:
        print(f"ifebench: {exc}", file=sys.stderr)
        return 2

    report = run_grid(config)

    print(f"dataset={dataset} nodes={g.num_nodes} edges={g.num_edges} "
          f"sources={len(sources)} backend={config.backend or 'auto'}")
    for c in report.cells:
        print(f"  {c.return_mode:7s} {c.policy:5s} k={c.k:<3d} threads={c.threads:<3d} "
              f"mean={round(c.mean_ms):>6d}ms dev={c.deviation:.3f} "
              f"util={c.mean_utilization:.2f} status={c.status}")

    if args.csv:
        report.write_csv(args.csv)
        print(f"csv written to {args.csv}")
    if args.level_table:
        groups = sorted({(c.policy, c.k) for c in report.cells})
        for kind, k in groups:
            pairs = [(c.threads, c.last_stats) for c in report.cells
                     if (c.policy, c.k) == (kind, k) and c.status == "ok"
                     and c.last_stats is not None]
            if pairs:
                print(f"\nper-level times, policy={kind} k={k}:")
                print(emit_level_table(pairs), end="")
    if args.svg:
        try:
            emit_speedup_chart(report, args.svg)
            print(f"svg written to {args.svg}")
        except ValueError as exc:
            print(f"ifebench: {exc}", file=sys.stderr)
            return 1

    return 1 if report.failed else 0


if __name__ == "__main__":
    sys.exit(main())
