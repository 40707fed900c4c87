"""Benchmark harness: workloads, policy grids, CSV, tables, charts.

A grid run executes warmup plus measured repetitions for every
(return mode, policy, k, thread count) cell on one graph, optionally
verifies each cell against the serial references, and renders the results
as an RFC-4180 CSV, a per-level scalability text table, or an SVG speedup
chart.  Everything here is single-threaded; concurrency lives inside
run_query.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .algorithms import UNREACHED
from .dispatcher import SourceTable
from .engine import QuerySpec, run_query
from .errors import WorkloadError

_SVG_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
)


@dataclass(frozen=True)
class WorkloadSpec:
    """Source-sampling and repetition parameters for one benchmark."""

    num_sources: int
    seed: int
    min_reach_depth: int = 3
    repetitions: int = 3
    warmup: int = 1


def _reaches_depth(g, src, depth):
    """True when a BFS from src still has a non-empty frontier after
    `depth` expansion rounds (early exit, vectorized per level)."""
    if depth <= 0:
        return True
    off, nbr = g.offsets, g.neighbors
    visited = np.zeros(g.num_nodes, dtype=bool)
    visited[src] = True
    frontier = np.array([src], dtype=np.int64)
    for _ in range(depth):
        counts = off[frontier + 1] - off[frontier]
        total = int(counts.sum())
        if total == 0:
            return False
        starts = np.repeat(off[frontier], counts)
        local = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        vs = nbr[starts + local]
        vs = np.unique(vs[~visited[vs]])
        if vs.size == 0:
            return False
        visited[vs] = True
        frontier = vs
    return True


def generate_sources(g, spec: WorkloadSpec) -> SourceTable:
    """Seeded sample of distinct sources that each pass the reach probe.

    Candidates are drawn without replacement in a seeded random order;
    any that cannot sustain min_reach_depth expansion rounds are rejected
    and the next candidate is drawn.
    """
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(g.num_nodes)
    picked = []
    for cand in order:
        if _reaches_depth(g, int(cand), spec.min_reach_depth):
            picked.append(int(cand))
            if len(picked) == spec.num_sources:
                return SourceTable(picked)
    raise WorkloadError(
        f"only {len(picked)} of {spec.num_sources} requested sources reach "
        f"depth {spec.min_reach_depth}"
    )


@dataclass
class GridConfig:
    """One benchmark grid: a graph, a workload, and the cell axes."""

    graph: object
    dataset: str
    sources: list
    policies: list  # (kind, k or None) pairs
    threads: list
    return_modes: list = field(default_factory=lambda: ["lengths"])
    repetitions: int = 3
    warmup: int = 1
    verify: bool = False
    backend: str | None = None
    dense_morsel: int = 2048
    sparse_morsel: int = 1024
    output_morsel: int = 4096
    max_paths_per_pair: int | None = None
    destinations: list | None = None
    progress = None  # callable(str) or None


@dataclass
class CellResult:
    dataset: str
    return_mode: str
    policy: str
    k: int
    threads: int
    warmup_ms: list = field(default_factory=list)
    rep_ms: list = field(default_factory=list)
    utilizations: list = field(default_factory=list)
    level_sizes: list = field(default_factory=list)
    level_ms: list = field(default_factory=list)
    status: str = "ok"
    last_stats: object = None

    @property
    def mean_ms(self):
        return sum(self.rep_ms) / len(self.rep_ms) if self.rep_ms else 0.0

    @property
    def deviation(self):
        """(max - min) / mean over the measured repetitions."""
        if not self.rep_ms or self.mean_ms == 0:
            return 0.0
        return (max(self.rep_ms) - min(self.rep_ms)) / self.mean_ms

    @property
    def mean_utilization(self):
        if not self.utilizations:
            return 0.0
        return sum(self.utilizations) / len(self.utilizations)


class BenchReport:
    """Cell results plus row-oriented views for CSV and charts."""

    CSV_HEADER = [
        "dataset", "return_mode", "policy", "k", "threads", "kind", "run",
        "level_sizes", "status", "wall_ms", "utilization", "deviation",
        "level_ms",
    ]

    def __init__(self, cells=None):
        self.cells = list(cells) if cells else []

    def add(self, cell):
        self.cells.append(cell)

    @property
    def failed(self):
        return [c for c in self.cells if c.status != "ok"]

    def rows(self):
        """Flat rows: warmup and rep rows per run, then one mean row.

        Deterministic fields come first; every wall-clock-derived value
        (wall_ms, utilization, deviation, level_ms) sits in the trailing
        columns so fixed-seed runs differ only there.
        """
        for c in self.cells:
            fixed = [c.dataset, c.return_mode, c.policy, c.k, c.threads]
            sizes = ";".join(str(s) for s in c.level_sizes)
            for i, ms in enumerate(c.warmup_ms):
                yield fixed + ["warmup", i, sizes, c.status, round(ms), "", "", ""]
            for i, ms in enumerate(c.rep_ms):
                util = f"{c.utilizations[i]:.4f}" if i < len(c.utilizations) else ""
                lvl = ";".join(f"{v:.3f}" for v in c.level_ms) if i == len(c.rep_ms) - 1 else ""
                yield fixed + ["rep", i, sizes, c.status, round(ms), util, "", lvl]
            if c.rep_ms:
                yield fixed + [
                    "mean", "", sizes, c.status, round(c.mean_ms),
                    f"{c.mean_utilization:.4f}", f"{c.deviation:.4f}", "",
                ]

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(self.CSV_HEADER)
            for row in self.rows():
                w.writerow(row)


def verify_result(g, spec: QuerySpec, result) -> str | None:
    """Compare one query result against the serial references.

    Returns None when everything matches, else a short mismatch message.
    Lengths are checked for every source; path sets are checked exactly
    (exhaustive enumeration) on graphs small enough for it, and otherwise
    each returned row is checked to be a genuine shortest path.
    """
    if spec.return_mode == "lengths":
        for s in dict.fromkeys(spec.sources):
            want = oracle.serial_ife_oracle(g, s)
            got = result.lengths(s)
            for v in range(g.num_nodes):
                gv = int(got[v])
                gv = -1 if gv == UNREACHED else gv
                if gv != want[v]:
                    return f"lengths mismatch src={s} dst={v}: got {gv} want {want[v]}"
        return None

    rows = result.path_rows()
    if g.num_nodes <= 64 and spec.max_paths_per_pair is None:
        got = {}
        for s, d, seq in rows:
            got.setdefault((s, d), set()).add(oracle.canonical_path(g, seq))
        adj = oracle.adjacency_from_graph(g)
        for s in dict.fromkeys(spec.sources):
            for d in range(g.num_nodes):
                if spec.destinations is not None and d not in spec.destinations:
                    continue
                want = oracle.brute_force_all_shortest_paths(adj, s, d)
                have = got.get((s, d), set())
                if have != want:
                    return (f"path set mismatch src={s} dst={d}: "
                            f"{len(have)} vs {len(want)} paths")
        return None

    # large graph: validate each emitted row individually
    dists = {s: oracle.serial_ife_oracle(g, s) for s in dict.fromkeys(spec.sources)}
    for s, d, seq in rows:
        want = dists[s][d]
        if want < 0:
            return f"path to unreachable node src={s} dst={d}"
        if len(seq) != 2 * want + 1:
            return f"path length mismatch src={s} dst={d}"
        if seq[0] != s or seq[-1] != d:
            return f"path endpoints mismatch src={s} dst={d}"
        for i in range(1, len(seq), 2):
            u, e, v = seq[i - 1], seq[i], seq[i + 1]
            if not (g.offsets[u] <= e < g.offsets[u + 1]) or g.neighbors[e] != v:
                return f"path uses a non-edge src={s} dst={d} at {u}->{v}"
    return None


def run_grid(config: GridConfig) -> BenchReport:
    """Execute every grid cell: warmup runs, measured reps, optional verify.

    Per-cell failures (engine errors or verification mismatches) are
    recorded in the cell status; the grid keeps going.
    """
    report = BenchReport()
    say = config.progress or (lambda msg: None)
    for mode in config.return_modes:
        for kind, k in config.policies:
            for t in config.threads:
                cell = CellResult(config.dataset, mode, kind,
                                  _resolved_k(kind, k), t)
                say(f"{config.dataset} {mode} {kind} k={cell.k} threads={t}")
                try:
                    _run_cell(config, mode, kind, k, t, cell)
                except Exception as exc:
                    cell.status = f"error: {exc}"
                report.add(cell)
    return report


def _resolved_k(kind, k):
    from .dispatcher import DispatchPolicy

    return DispatchPolicy.make(kind, k).k


def _run_cell(config, mode, kind, k, threads, cell):
    spec = QuerySpec(
        config.graph, list(config.sources), mode, policy=kind, k=k,
        num_threads=threads, backend=config.backend,
        dense_morsel=config.dense_morsel, sparse_morsel=config.sparse_morsel,
        output_morsel=config.output_morsel,
        max_paths_per_pair=config.max_paths_per_pair,
        destinations=config.destinations,
    )
    result = None
    for _ in range(config.warmup):
        t0 = time.perf_counter()
        result = run_query(spec)
        cell.warmup_ms.append((time.perf_counter() - t0) * 1000.0)
    for _ in range(config.repetitions):
        t0 = time.perf_counter()
        result = run_query(spec)
        cell.rep_ms.append((time.perf_counter() - t0) * 1000.0)
        cell.utilizations.append(result.stats.utilization)
    if result is not None:
        cell.last_stats = result.stats
        if len(result.stats.levels) == 1:
            _, _, levels = result.stats.levels[0]
            cell.level_sizes = [size for _, size, _ in levels]
            cell.level_ms = [secs * 1000.0 for _, _, secs in levels]
        if config.verify:
            msg = verify_result(config.graph, spec, result)
            if msg is not None:
                cell.status = f"verify: {msg}"


def emit_level_table(stats_by_threads) -> str:
    """Text table of per-level frontier sizes and elapsed ms per thread count.

    Input is an iterable of (threads, QueryStats) pairs from the same
    single-source lengths query; rows are BFS levels, columns are thread
    counts, and a total row closes the table.
    """
    pairs = sorted(stats_by_threads, key=lambda p: p[0])
    if not pairs:
        raise ValueError("no stats to tabulate")
    per_thread = []
    for t, stats in pairs:
        if len(stats.levels) != 1:
            raise ValueError("level table needs a single-source run")
        _, _, levels = stats.levels[0]
        per_thread.append((t, levels))
    base = per_thread[0][1]
    depths = [d for d, _, _ in base]
    sizes = [s for _, s, _ in base]
    for _, levels in per_thread[1:]:
        if [s for _, s, _ in levels] != sizes:
            raise ValueError("runs disagree on frontier sizes; not the same query")

    headers = ["level", "frontier"] + [f"{t}T ms" for t, _ in per_thread]
    rows = []
    for i, depth in enumerate(depths):
        row = [str(depth), str(sizes[i])]
        for _, levels in per_thread:
            row.append(f"{levels[i][2] * 1000.0:.2f}")
        rows.append(row)
    total = ["total", str(sum(sizes))]
    for _, levels in per_thread:
        total.append(f"{sum(ms for _, _, ms in levels) * 1000.0:.2f}")
    rows.append(total)

    widths = [max(len(headers[c]), *(len(r[c]) for r in rows))
              for c in range(len(headers))]
    lines = [
        "  ".join(h.rjust(widths[c]) for c, h in enumerate(headers)),
        "  ".join("-" * widths[c] for c in range(len(headers))),
    ]
    for r in rows:
        lines.append("  ".join(v.rjust(widths[c]) for c, v in enumerate(r)))
    return "\n".join(lines) + "\n"


def emit_speedup_chart(report: BenchReport, out_path) -> None:
    """Render speedup-vs-threads polylines, one per (mode, policy, k).

    Speedup is each cell's mean against that series' own 1-thread mean;
    series without a 1-thread cell are skipped.  Deterministic output:
    same report, same bytes.
    """
    series = {}
    for c in report.cells:
        if c.status != "ok" or not c.rep_ms:
            continue
        key = (c.return_mode, c.policy, c.k)
        series.setdefault(key, {})[c.threads] = c.mean_ms
    lines = []
    for key in sorted(series):
        byt = series[key]
        if 1 not in byt or byt[1] <= 0:
            continue
        base = byt[1]
        pts = [(t, base / ms) for t, ms in sorted(byt.items()) if ms > 0]
        if pts:
            lines.append((key, pts))
    if not lines:
        raise ValueError("nothing to chart: no ok cells with a 1-thread baseline")

    width, height = 640, 420
    ml, mr, mt, mb = 60, 170, 20, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = sorted({t for _, pts in lines for t, _ in pts})
    xmin, xmax = xs[0], xs[-1]
    ymax = max(s for _, pts in lines for _, s in pts)
    ymax = max(1.0, ymax) * 1.05

    def px(t):
        if xmax == xmin:
            return ml + pw / 2.0
        return ml + (t - xmin) / (xmax - xmin) * pw

    def py(s):
        return mt + ph - (s / ymax) * ph

    svg = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for t in xs:
        x = px(t)
        svg.append(f'<line x1="{x:.2f}" y1="{mt + ph}" x2="{x:.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        svg.append(f'<text x="{x:.2f}" y="{mt + ph + 16}" text-anchor="middle">{t}</text>')
    tick = 1.0
    while ymax / tick > 8:
        tick *= 2.0
    y = tick
    while y <= ymax:
        yy = py(y)
        svg.append(f'<line x1="{ml - 4}" y1="{yy:.2f}" x2="{ml + pw}" y2="{yy:.2f}" '
                   f'stroke="#dddddd"/>')
        svg.append(f'<text x="{ml - 8}" y="{yy + 4:.2f}" text-anchor="end">{y:g}</text>')
        y += tick
    svg.append(f'<text x="{ml + pw / 2:.2f}" y="{height - 12}" text-anchor="middle">threads</text>')
    svg.append(f'<text x="14" y="{mt + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2:.2f})">speedup vs 1 thread</text>')
    for i, (key, pts) in enumerate(lines):
        color = _SVG_PALETTE[i % len(_SVG_PALETTE)]
        path = " ".join(f"{px(t):.2f},{py(s):.2f}" for t, s in pts)
        svg.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{path}"/>')
        for t, s in pts:
            svg.append(f'<circle cx="{px(t):.2f}" cy="{py(s):.2f}" r="3" fill="{color}"/>')
        mode, policy, k = key
        label = f"{policy} k={k} {mode}"
        ly = mt + 14 + i * 16
        svg.append(f'<line x1="{ml + pw + 10}" y1="{ly - 4}" x2="{ml + pw + 30}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        svg.append(f'<text x="{ml + pw + 36}" y="{ly}">{label}</text>')
    svg.append("</svg>")
    data = "\n".join(svg) + "\n"
    with open(out_path, "w") as f:
        f.write(data)
