"""Morsel dispatching policies and the source-morsel lifecycle.

Four policies decide which source morsel a worker draws work from:

- 1t1s: each source morsel is bound exclusively to the worker that
  launched it; the strongest version of the thread-per-source baseline.
- nt1s: a single live morsel shared by every worker; the next source
  launches when it retires.
- ntks: sticky scheduling over up to k concurrent source morsels; a worker
  keeps its morsel while it can yield work, idle workers launch new
  morsels below the cap or round-robin over the live set.
- ntkms: like ntks but each launch consumes up to 64 sources, which share
  frontier scans through 64-bit lane words.

A morsel moves FRONTIER_EXTENSION -> OUTPUT -> retired, each exactly once.
The iteration boundary (frontier swap, sparse overlay build, visited
commit for paths modes) is executed by the last worker to finish a
frontier morsel once the current frontier is fully carved.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import numpy as np

from .algorithms import LANE_WIDTH, MAX_DEPTH, LaneState, LengthState, PathState
from .errors import DepthOverflowError
from .frontier import FrontierPair

PHASE_EXTENSION = "FRONTIER_EXTENSION"
PHASE_OUTPUT = "OUTPUT"

POLICY_KINDS = ("1t1s", "nt1s", "ntks", "ntkms")
DEFAULT_K = {"ntks": 32, "ntkms": 4}


@dataclass(frozen=True)
class DispatchPolicy:
    """Policy kind plus its concurrency parameter k.

    k is the number of concurrently live source morsels for ntks/ntkms; it
    is ignored for 1t1s (effectively the thread count) and nt1s (one).
    """

    kind: str
    k: int = 1
    lane_width: int = LANE_WIDTH

    @classmethod
    def make(cls, kind, k=None):
        if kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy {kind!r}; expected one of {POLICY_KINDS}")
        if k is None:
            k = DEFAULT_K.get(kind, 1)
        if k < 1:
            raise ValueError("k must be >= 1")
        return cls(kind, k)


class SourceTable:
    """Ordered query sources with an atomic consumption cursor."""

    def __init__(self, sources):
        self.sources = [int(s) for s in sources]
        self._pos = 0
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.sources)

    @property
    def remaining(self):
        with self._lock:
            return len(self.sources) - self._pos

    def pop(self, n=1):
        """Consume and return up to n sources; empty list when exhausted."""
        with self._lock:
            chunk = self.sources[self._pos : self._pos + n]
            self._pos += len(chunk)
            return chunk


class _Trace:
    """Append-only event log used by replay and dispatcher tests."""

    def __init__(self):
        self.events = []
        self._lock = threading.Lock()

    def add(self, *event):
        with self._lock:
            self.events.append(event)


class _MorselBase:
    """Lifecycle shared by single-source and multi-source morsels."""

    def __init__(self, seq, num_nodes, trace=None):
        self.seq = seq
        self.num_nodes = num_nodes
        self.phase = PHASE_EXTENSION
        self.retired = False
        self.cur_iter = 0
        self.inflight = 0
        self.output_cursor = 0
        self._output_outstanding = 0
        self.level_stats = []  # closed levels: (depth, frontier_size, seconds)
        self._open_level = None
        self.lock = threading.Lock()
        self.kernel_lock = threading.Lock()
        self.trace = trace

    # -- frontier phase ----------------------------------------------------

    def grab_frontier_morsel(self, wid, dense_size, sparse_size):
        with self.lock:
            if self.retired or self.phase != PHASE_EXTENSION:
                return None
            fm = self.pair.grab_frontier_morsel(dense_size, sparse_size)
            if fm is not None:
                self.inflight += 1
                if self.trace is not None:
                    self.trace.add("grab_frontier", wid, self.seq, fm.kind, fm.begin, fm.end)
            return fm

    def check_if_frontier_finished(self, wid):
        """Decrement inflight; the last finisher at an exhausted frontier
        performs the boundary.  Returns none | advanced | entered_output."""
        with self.lock:
            self.inflight -= 1
            if self.inflight > 0 or not self.pair.cursor_exhausted():
                return "none"
            if self.phase != PHASE_EXTENSION:
                return "none"
            action = self._boundary()
            if self.trace is not None:
                self.trace.add("boundary", wid, self.seq, action,
                               self.pair.active_count)
            return action

    def _boundary(self):
        """Iteration boundary; caller holds self.lock."""
        now = time.perf_counter()
        if self._open_level is not None:
            depth, size, t0 = self._open_level
            self.level_stats.append((depth, size, now - t0))
            self._open_level = None
        self._commit_visited()
        outcome = self.pair.swap_and_maybe_sparsify()
        if outcome == "converged":
            self.phase = PHASE_OUTPUT
            self.output_cursor = 0
            return "entered_output"
        self._open_level = (self.cur_iter, self.pair.active_count, time.perf_counter())
        self.cur_iter += 1
        if self.cur_iter > MAX_DEPTH:
            raise DepthOverflowError(
                f"BFS depth {self.cur_iter} exceeds the 1-byte cap {MAX_DEPTH}"
            )
        return "advanced"

    def _commit_visited(self):
        """Paths modes fold the freshly built frontier into visited here."""

    # -- output phase -------------------------------------------------------

    def grab_output_morsel(self, wid, chunk):
        with self.lock:
            if self.retired or self.phase != PHASE_OUTPUT:
                return None
            if self.output_cursor >= self.num_nodes:
                return None
            begin = self.output_cursor
            end = min(begin + chunk, self.num_nodes)
            self.output_cursor = end
            self._output_outstanding += 1
            if self.trace is not None:
                self.trace.add("grab_output", wid, self.seq, begin, end)
            return begin, end

    def output_done(self, wid):
        """Mark one output morsel emitted; retires on the last one."""
        with self.lock:
            self._output_outstanding -= 1
            if (
                self.phase == PHASE_OUTPUT
                and self.output_cursor >= self.num_nodes
                and self._output_outstanding == 0
                and not self.retired
            ):
                self.retired = True
                if self.trace is not None:
                    self.trace.add("retire", wid, self.seq)
                self._release()
                return True
            return False

    def has_dispatchable_work(self):
        """Racy availability probe used by the sticky policies."""
        if self.retired:
            return False
        if self.phase == PHASE_EXTENSION:
            return not self.pair.cursor_exhausted()
        return self.output_cursor < self.num_nodes

    def _release(self):
        """Drop the per-node arrays as soon as the morsel retires."""
        self.pair = None


class SourceMorsel(_MorselBase):
    """One IFE subroutine: frontiers, iteration counter, phase, aux state."""

    def __init__(self, seq, source, num_nodes, mode, parents=None, trace=None):
        super().__init__(seq, num_nodes, trace)
        self.source = int(source)
        self.mode = mode
        self.pair = FrontierPair(num_nodes)
        if mode == "lengths":
            self.aux = LengthState(num_nodes)
        else:
            self.aux = PathState(num_nodes, parents)
        self.aux.init_source(self.source)
        self.pair.nxt[self.source] = 1
        with self.lock:
            self._boundary()

    def _commit_visited(self):
        if self.mode == "paths":
            np.bitwise_or(self.aux.visited, self.pair.nxt, out=self.aux.visited)

    def _release(self):
        super()._release()
        self.aux = None


class MultiSourceMorsel(_MorselBase):
    """Up to 64 IFE subroutines sharing scans through per-node lane words."""

    def __init__(self, seq, lane_sources, num_nodes, mode, num_threads=1,
                 max_parent_bytes=1 << 30, use_jit=None, trace=None):
        super().__init__(seq, num_nodes, trace)
        self.lane_sources = [int(s) for s in lane_sources]
        self.mode = mode
        self.state = LaneState(
            num_nodes, self.lane_sources, mode,
            num_threads=num_threads, max_parent_bytes=max_parent_bytes, use_jit=use_jit,
        )
        self.pair = FrontierPair(
            num_nodes, dtype=np.uint64,
            buffers=(self.state.frontier_bits, self.state.next_bits),
        )
        with self.lock:
            self._boundary()

    def _commit_visited(self):
        if self.mode == "paths":
            np.bitwise_or(self.state.visited_bits, self.pair.nxt,
                          out=self.state.visited_bits)

    def _release(self):
        super()._release()
        self.state = None


class MorselDispatcher:
    """Shared dispatch state: source table, live morsels, policy logic."""

    def __init__(self, table: SourceTable, policy: DispatchPolicy, morsel_factory,
                 trace=None):
        self.table = table
        self.policy = policy
        self._factory = morsel_factory
        self._lock = threading.Lock()
        self._live = []
        self._seq = 0
        self._binding = {}  # 1t1s: wid -> morsel
        self._rr = {}  # ntks/ntkms: wid -> last live-list index served
        self.launch_count = 0
        self.ms_lane_counts = []  # lanes per multi-source launch
        self.high_water = 0
        self.launched_sources = []
        self.retired_count = 0
        self.trace = trace

    # -- launches and retirement --------------------------------------------

    def _launch(self, wid):
        per = self.policy.lane_width if self.policy.kind == "ntkms" else 1
        sources = self.table.pop(per)
        if not sources:
            return None
        m = self._factory(sources, self._seq)
        self._seq += 1
        self.launch_count += 1
        if self.policy.kind == "ntkms":
            self.ms_lane_counts.append(len(sources))
        self.launched_sources.extend(sources)
        self._live.append(m)
        self.high_water = max(self.high_water, len(self._live))
        if self.trace is not None:
            self.trace.add("launch", wid, m.seq, tuple(sources))
        return m

    def on_retire(self, morsel):
        with self._lock:
            if morsel in self._live:
                self._live.remove(morsel)
                self.retired_count += 1

    def finished(self):
        with self._lock:
            return not self._live and self.table.remaining == 0

    # -- the policy decision -------------------------------------------------

    def grab_src_morsel_if_necessary(self, wid, current):
        """Return the morsel the worker should draw from next, or None.

        None means this worker is done: for 1t1s, its own morsel retired
        and no sources remain; for the shared policies, no sources remain
        and every launched morsel has retired.
        """
        with self._lock:
            prev_seq = current.seq if current is not None else None
            prev_work = (
                current.has_dispatchable_work() if current is not None else False
            )
            m = self._grab(wid, current)
            if self.trace is not None:
                self.trace.add("grab_src", wid, m.seq if m is not None else None,
                               prev_seq, prev_work)
            return m

    def _grab(self, wid, current):
        kind = self.policy.kind
        if kind == "1t1s":
            m = self._binding.get(wid)
            if m is not None and not m.retired:
                return m
            m = self._launch(wid)
            self._binding[wid] = m
            return m
        if kind == "nt1s":
            if self._live:
                return self._live[0]
            return self._launch(wid)
        # ntks / ntkms: sticky first
        if current is not None and not current.retired and current.has_dispatchable_work():
            return current
        if len(self._live) < self.policy.k:
            m = self._launch(wid)
            if m is not None:
                return m
        if not self._live:
            return None
        # round-robin over the live set, starting after the worker's
        # previous morsel, preferring one that can yield work right now
        start = (self._rr.get(wid, -1) + 1) % len(self._live)
        fallback = None
        for off in range(len(self._live)):
            i = (start + off) % len(self._live)
            cand = self._live[i]
            if cand.has_dispatchable_work():
                self._rr[wid] = i
                return cand
            if fallback is None and cand is not current:
                fallback = (i, cand)
        if fallback is not None:
            self._rr[wid] = fallback[0]
            return fallback[1]
        return current if current in self._live else self._live[0]
