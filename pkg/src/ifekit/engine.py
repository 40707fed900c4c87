"""Parallel shortest-path query engine.

A query runs one BFS-style frontier expansion per source.  Workers pull a
source morsel from the dispatcher, carve frontier morsels off its current
frontier, extend them through the selected kernel backend, and the last
worker to finish a frontier performs the iteration boundary.  Once a
source converges its morsel flips to the output phase, where node ranges
are emitted as distance rows or reconstructed shortest paths.

`run_query` drives real threads; `replay_run` drives the same worker step
function with simulated round-robin workers and returns the dispatch
trace, which makes scheduling decisions directly testable.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .algorithms import LANE_WIDTH, UNREACHED
from .dispatcher import (
    DispatchPolicy,
    MorselDispatcher,
    MultiSourceMorsel,
    SourceMorsel,
    SourceTable,
    _Trace,
)
from .errors import WorkloadError
from .frontier import DEFAULT_DENSE_MORSEL, DEFAULT_SPARSE_MORSEL
from .parents import ParentStore

DEFAULT_OUTPUT_MORSEL = 4096

_IDLE_SLEEP = 5e-5


@dataclass
class QuerySpec:
    """Everything a query needs: graph, workload, policy, tuning knobs."""

    graph: object
    sources: list
    return_mode: str = "lengths"
    policy: object = "ntks"
    k: int | None = None
    num_threads: int = 1
    dense_morsel: int = DEFAULT_DENSE_MORSEL
    sparse_morsel: int = DEFAULT_SPARSE_MORSEL
    output_morsel: int = DEFAULT_OUTPUT_MORSEL
    destinations: list | None = None
    max_paths_per_pair: int | None = None
    max_parent_bytes: int = 1 << 30
    backend: str | None = None

    def __post_init__(self):
        if not isinstance(self.policy, DispatchPolicy):
            self.policy = DispatchPolicy.make(self.policy, self.k)
        if self.return_mode not in ("lengths", "paths"):
            raise WorkloadError(f"unknown return mode {self.return_mode!r}")
        if self.num_threads < 1:
            raise WorkloadError("num_threads must be >= 1")
        for name in ("dense_morsel", "sparse_morsel", "output_morsel"):
            if getattr(self, name) < 1:
                raise WorkloadError(f"{name} must be >= 1")
        self.sources = [int(s) for s in self.sources]
        if not self.sources:
            raise WorkloadError("a query needs at least one source")
        n = self.graph.num_nodes
        for s in self.sources:
            if not 0 <= s < n:
                raise WorkloadError(f"source {s} out of range for {n} nodes")
        if self.destinations is not None:
            self.destinations = [int(d) for d in self.destinations]
            for d in self.destinations:
                if not 0 <= d < n:
                    raise WorkloadError(f"destination {d} out of range for {n} nodes")
        if self.max_paths_per_pair is not None and self.max_paths_per_pair < 1:
            raise WorkloadError("max_paths_per_pair must be >= 1 or None")


@dataclass
class QueryStats:
    wall_s: float = 0.0
    busy_s: float = 0.0
    utilization: float = 0.0
    num_threads: int = 1
    backend: str = ""
    policy_kind: str = ""
    policy_k: int = 1
    launches: int = 0
    high_water: int = 0
    ms_lane_counts: list = field(default_factory=list)
    # one entry per retired source morsel:
    # (seq, sources_tuple, [(depth, frontier_size, seconds), ...])
    levels: list = field(default_factory=list)


class QueryResult:
    """Distances or shortest paths for every (source, destination) pair.

    Lengths mode stores one uint8 array per source (255 means unreached).
    Paths mode stores sorted unique (src, dst, seq) rows where seq
    alternates node ids and edge ids: (src, e1, n1, e2, ..., dst).
    """

    def __init__(self, spec, lengths, path_rows, stats):
        self.return_mode = spec.return_mode
        self.num_nodes = spec.graph.num_nodes
        self.sources = list(dict.fromkeys(spec.sources))
        self._dest = spec.destinations
        self._lengths = lengths
        self._paths = path_rows
        self.stats = stats

    def lengths(self, src):
        """Raw uint8 distance array for one source; 255 is unreached."""
        return self._lengths[src]

    def distance(self, src, dst):
        """Hop count, or None when dst is unreachable from src."""
        d = int(self._lengths[src][dst])
        return None if d == UNREACHED else d

    def distance_rows(self):
        """Yield (src, dst, dist) for reached pairs, sorted, filtered to
        the requested destinations."""
        mask = None
        if self._dest is not None:
            mask = np.zeros(self.num_nodes, dtype=bool)
            mask[self._dest] = True
        for src in sorted(self._lengths):
            arr = self._lengths[src]
            hit = arr != UNREACHED
            if mask is not None:
                hit &= mask
            for dst in np.nonzero(hit)[0]:
                yield src, int(dst), int(arr[dst])

    def path_rows(self):
        """Sorted unique (src, dst, seq) rows."""
        return self._paths


class _WorkerState:
    __slots__ = ("current",)

    def __init__(self):
        self.current = None


class _QueryCtx:
    """Shared per-query state: dispatcher, backend, result sinks."""

    def __init__(self, spec, num_workers=None, trace=None):
        self.spec = spec
        self.graph = spec.graph
        self.backend = _kernels.select(spec.backend)
        self.num_workers = num_workers if num_workers is not None else spec.num_threads
        self.trace = trace
        self.scratches = [self.backend.make_scratch() for _ in range(self.num_workers)]
        self.dest_mask = None
        if spec.destinations is not None:
            self.dest_mask = np.zeros(self.graph.num_nodes, dtype=bool)
            self.dest_mask[spec.destinations] = True

        use_jit = self.backend.NAME == "numba"
        n = self.graph.num_nodes
        nw = self.num_workers

        def factory(sources, seq):
            if spec.policy.kind == "ntkms":
                return MultiSourceMorsel(
                    seq, sources, n, spec.return_mode, num_threads=nw,
                    max_parent_bytes=spec.max_parent_bytes, use_jit=use_jit,
                    trace=trace,
                )
            parents = None
            if spec.return_mode == "paths":
                parents = ParentStore(
                    n, num_threads=nw, max_bytes=spec.max_parent_bytes,
                    use_jit=use_jit,
                )
            return SourceMorsel(seq, sources[0], n, spec.return_mode,
                                parents=parents, trace=trace)

        self.dispatcher = MorselDispatcher(
            SourceTable(spec.sources), spec.policy, factory, trace=trace
        )
        self.results_len = {}
        self.path_rows = []
        self.level_log = []
        self.res_lock = threading.Lock()
        self.busy = [0.0] * self.num_workers
        self.error = None
        self._err_lock = threading.Lock()

    def len_array(self, src):
        with self.res_lock:
            arr = self.results_len.get(src)
            if arr is None:
                arr = np.empty(self.graph.num_nodes, dtype=np.uint8)
                self.results_len[src] = arr
            return arr

    def set_error(self, exc):
        with self._err_lock:
            if self.error is None:
                self.error = exc


def extend_frontier(ctx, wid, m, fm):
    """Run the backend kernel for one frontier morsel."""
    g = ctx.graph
    pair = m.pair
    ids = pair.overlay
    bk = ctx.backend
    if isinstance(m, MultiSourceMorsel):
        st = m.state
        if m.mode == "lengths":
            call = lambda: bk.extend_ms_lengths(
                g.offsets, g.neighbors, pair.cur, pair.nxt, st.visited_bits,
                st.lane_len, m.cur_iter, fm.kind, fm.begin, fm.end, ids)
        else:
            call = lambda: bk.extend_ms_paths(
                g.offsets, g.neighbors, pair.cur, pair.nxt, st.visited_bits,
                m.cur_iter, fm.kind, fm.begin, fm.end, ids,
                st.parents, wid, ctx.scratches[wid])
    else:
        aux = m.aux
        if m.mode == "lengths":
            call = lambda: bk.extend_lengths(
                g.offsets, g.neighbors, pair.cur, pair.nxt, aux.visited,
                aux.length, m.cur_iter, fm.kind, fm.begin, fm.end, ids)
        else:
            call = lambda: bk.extend_paths(
                g.offsets, g.neighbors, pair.cur, pair.nxt, aux.visited,
                aux.dist, m.cur_iter, fm.kind, fm.begin, fm.end, ids,
                aux.parents, wid, ctx.scratches[wid])
    if bk.NEEDS_MORSEL_LOCK:
        with m.kernel_lock:
            call()
    else:
        call()


def _enumerate_paths(src, dst, dist_of, collect, cap):
    """All shortest src->dst paths as (src, e1, n1, ..., dst) tuples.

    dist_of(v) gives the BFS depth (0 at src, -1 unreached); collect(v, d)
    gives the sorted (parent, edge) pairs recorded at depth d.  Paths come
    out in ascending tuple order, so a cap keeps the lexicographically
    least ones.
    """
    if dst == src:
        return [(src,)]
    # backward sweep gathers the shortest-path DAG that ends at dst; every
    # gathered edge lies on some src->dst shortest path
    by_child = {}
    stack = [dst]
    seen = {dst}
    while stack:
        v = stack.pop()
        dv = dist_of(v)
        if dv <= 0:
            continue
        plist = collect(v, dv)
        by_child[v] = plist
        for p, _ in plist:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    children = {}
    for v, plist in by_child.items():
        for p, e in plist:
            children.setdefault(p, []).append((e, v))
    for lst in children.values():
        lst.sort()
    out = []

    def walk(u, acc):
        for e, v in children.get(u, ()):
            nacc = acc + [e, v]
            if v == dst:
                out.append(tuple(nacc))
                if cap is not None and len(out) >= cap:
                    return True
            elif walk(v, nacc):
                return True
        return False

    walk(src, [src])
    return out


def output_paths(ctx, wid, m, begin, end):
    """Reconstruct shortest paths for destinations in [begin, end)."""
    dest = ctx.dest_mask
    cap = ctx.spec.max_paths_per_pair
    rows = []
    if isinstance(m, MultiSourceMorsel):
        store = m.state.parents
        node_ids = np.arange(begin, end, dtype=np.int64)
        for lane, src in enumerate(m.state.lane_sources):
            if begin <= src < end and (dest is None or dest[src]):
                rows.append((src, src, (src,)))
            iters = store.head_iters(node_ids * LANE_WIDTH + lane)

            def dist_of(v, _s=src, _l=lane):
                if v == _s:
                    return 0
                it = store.iter_of_head(v * LANE_WIDTH + _l)
                return -1 if it is None else it

            def coll(v, d, _l=lane):
                return store.collect(v * LANE_WIDTH + _l, d)

            for off in np.nonzero(iters >= 0)[0]:
                dst = int(node_ids[off])
                if dst == src or (dest is not None and not dest[dst]):
                    continue
                for seq in _enumerate_paths(src, dst, dist_of, coll, cap):
                    rows.append((src, dst, seq))
    else:
        src = m.source
        dist = m.aux.dist
        store = m.aux.parents
        window = dist[begin:end]

        def dist_of(v):
            d = int(dist[v])
            return -1 if d == UNREACHED else d

        for off in np.nonzero(window != UNREACHED)[0]:
            dst = begin + int(off)
            if dest is not None and not dest[dst]:
                continue
            if dst == src:
                rows.append((src, src, (src,)))
                continue
            for seq in _enumerate_paths(src, dst, dist_of, store.collect, cap):
                rows.append((src, dst, seq))
    if rows:
        with ctx.res_lock:
            ctx.path_rows.extend(rows)


def _output_lengths(ctx, wid, m, begin, end):
    if isinstance(m, MultiSourceMorsel):
        block = m.state.lane_len.reshape(-1, LANE_WIDTH)[begin:end]
        for lane, src in enumerate(m.state.lane_sources):
            ctx.len_array(src)[begin:end] = block[:, lane]
    else:
        ctx.len_array(m.source)[begin:end] = m.aux.length[begin:end]


def _worker_step(ctx, wid, ws):
    """One scheduling decision plus at most one unit of work.

    Returns "worked", "idle" (nothing grabbable right now), or "done"
    (this worker will never receive work again).
    """
    m = ws.current
    if m is None or m.retired or not m.has_dispatchable_work():
        m = ctx.dispatcher.grab_src_morsel_if_necessary(wid, ws.current)
        ws.current = m
        if m is None:
            return "done"

    fm = m.grab_frontier_morsel(wid, ctx.spec.dense_morsel, ctx.spec.sparse_morsel)
    if fm is not None:
        t0 = time.perf_counter()
        extend_frontier(ctx, wid, m, fm)
        ctx.busy[wid] += time.perf_counter() - t0
        m.check_if_frontier_finished(wid)
        return "worked"

    om = m.grab_output_morsel(wid, ctx.spec.output_morsel)
    if om is not None:
        begin, end = om
        t0 = time.perf_counter()
        if m.mode == "lengths":
            _output_lengths(ctx, wid, m, begin, end)
        else:
            output_paths(ctx, wid, m, begin, end)
        ctx.busy[wid] += time.perf_counter() - t0
        if m.output_done(wid):
            sources = (m.lane_sources if isinstance(m, MultiSourceMorsel)
                       else [m.source])
            with ctx.res_lock:
                ctx.level_log.append((m.seq, tuple(sources), list(m.level_stats)))
            ctx.dispatcher.on_retire(m)
        return "worked"

    return "idle"


def _worker_loop(ctx, wid):
    ws = _WorkerState()
    idle_rounds = 0
    try:
        while ctx.error is None:
            status = _worker_step(ctx, wid, ws)
            if status == "done":
                return
            if status == "worked":
                idle_rounds = 0
                continue
            idle_rounds += 1
            if idle_rounds > 2:
                time.sleep(_IDLE_SLEEP)
    except BaseException as exc:  # surfaced to run_query after join
        ctx.set_error(exc)


def _finalize(ctx, wall_s):
    busy = float(sum(ctx.busy))
    denom = ctx.num_workers * wall_s
    d = ctx.dispatcher
    stats = QueryStats(
        wall_s=wall_s,
        busy_s=busy,
        utilization=(busy / denom) if denom > 0 else 0.0,
        num_threads=ctx.num_workers,
        backend=ctx.backend.NAME,
        policy_kind=ctx.spec.policy.kind,
        policy_k=ctx.spec.policy.k,
        launches=d.launch_count,
        high_water=d.high_water,
        ms_lane_counts=list(d.ms_lane_counts),
        levels=sorted(ctx.level_log),
    )
    paths = sorted(set(ctx.path_rows))
    return QueryResult(ctx.spec, ctx.results_len, paths, stats)


def run_query(spec: QuerySpec) -> QueryResult:
    """Execute one query with spec.num_threads OS threads."""
    ctx = _QueryCtx(spec)
    t0 = time.perf_counter()
    if ctx.num_workers == 1:
        _worker_loop(ctx, 0)
    else:
        threads = [
            threading.Thread(target=_worker_loop, args=(ctx, wid), daemon=True)
            for wid in range(ctx.num_workers)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    wall = time.perf_counter() - t0
    if ctx.error is not None:
        raise ctx.error
    return _finalize(ctx, wall)


def replay_run(spec: QuerySpec, num_workers: int):
    """Drive simulated workers round-robin on one thread.

    Returns (QueryResult, trace_events).  Because every step is atomic the
    schedule is fully deterministic, which lets tests compare dispatch
    decisions across policies event by event.
    """
    trace = _Trace()
    ctx = _QueryCtx(spec, num_workers=num_workers, trace=trace)
    states = [_WorkerState() for _ in range(num_workers)]
    done = [False] * num_workers
    t0 = time.perf_counter()
    while not all(done):
        progressed = False
        for wid in range(num_workers):
            if done[wid]:
                continue
            status = _worker_step(ctx, wid, states[wid])
            if status == "done":
                done[wid] = True
            elif status == "worked":
                progressed = True
        if not progressed and not all(done):
            raise RuntimeError("replay stalled: no worker can make progress")
    wall = time.perf_counter() - t0
    result = _finalize(ctx, wall)
    return result, trace.events
