"""Per-algorithm state and edge-compute semantics.

Three algorithm instances parameterize the frontier engine: single-source
shortest-path lengths, single-source all-shortest-paths, and their 64-lane
multi-source counterparts.  The functions here are the single-edge
reference semantics; the kernel backends apply the same rules in batch
(the equivalence is covered by tests).

Paths modes use a deferred visited commit: during iteration i the visited
array reflects only iterations < i, and the engine ORs the freshly built
next frontier into visited at the iteration boundary.  Every same-level
parent of a node is therefore recorded, each tagged with iter == dist(v),
which is exactly the set of valid shortest-path parents.  Lengths modes
keep in-sweep exactly-once marking instead (atomic test-and-set), since a
length has a single value and later relaxations are pure overhead.
"""

from __future__ import annotations

import numpy as np

from .errors import DepthOverflowError
from .parents import ParentStore, pack_record_word0

UNREACHED = 255  # 1-byte length sentinel
MAX_DEPTH = 254
LANE_WIDTH = 64


def decode_set_bits(word):
    """Positions of the 1-bits of a 64-bit word, ascending.

    Iterated find-first-set and clear-lowest, same loop the kernels run.
    """
    w = int(word)
    out = []
    while w:
        low = w & -w
        out.append(low.bit_length() - 1)
        w &= w - 1
    return out


class LengthState:
    """Single-source lengths: 1-byte distances plus a visited byte array."""

    def __init__(self, num_nodes):
        self.num_nodes = num_nodes
        self.length = np.full(num_nodes, UNREACHED, dtype=np.uint8)
        self.visited = np.zeros(num_nodes, dtype=np.uint8)

    def init_source(self, src):
        self.length[src] = 0
        self.visited[src] = 1

    @property
    def prealloc_nbytes(self):
        return self.length.nbytes + self.visited.nbytes


class PathState:
    """Single-source paths: visited, per-node distance, and a parent store."""

    def __init__(self, num_nodes, parents: ParentStore):
        self.num_nodes = num_nodes
        self.visited = np.zeros(num_nodes, dtype=np.uint8)
        self.dist = np.full(num_nodes, UNREACHED, dtype=np.uint8)
        self.parents = parents

    def init_source(self, src):
        self.dist[src] = 0
        self.visited[src] = 1

    @property
    def prealloc_nbytes(self):
        return self.visited.nbytes + self.dist.nbytes + self.parents.heads_nbytes


class LaneState:
    """Multi-source morsel state: 64-bit lane words per node plus lane aux.

    Pre-allocation is exactly the documented budget: 24 bytes/node of bit
    words, plus 64 bytes/node of lane lengths (lengths mode) or 512
    bytes/node of lane head handles (paths mode).
    """

    def __init__(self, num_nodes, lane_sources, mode, num_threads=1,
                 max_parent_bytes=1 << 30, use_jit=None):
        if not 1 <= len(lane_sources) <= LANE_WIDTH:
            raise ValueError("a multi-source morsel holds 1..64 sources")
        self.num_nodes = num_nodes
        self.lane_sources = list(lane_sources)
        self.mode = mode
        self.frontier_bits = np.zeros(num_nodes, dtype=np.uint64)
        self.next_bits = np.zeros(num_nodes, dtype=np.uint64)
        self.visited_bits = np.zeros(num_nodes, dtype=np.uint64)
        if mode == "lengths":
            self.lane_len = np.full(num_nodes * LANE_WIDTH, UNREACHED, dtype=np.uint8)
            self.parents = None
        elif mode == "paths":
            self.lane_len = None
            self.parents = ParentStore(
                num_nodes * LANE_WIDTH,
                num_threads=num_threads,
                max_bytes=max_parent_bytes,
                use_jit=use_jit,
            )
        else:
            raise ValueError(f"unknown mode {mode!r}")
        for lane, src in enumerate(self.lane_sources):
            bit = np.uint64(1 << lane)
            self.visited_bits[src] |= bit
            self.next_bits[src] |= bit
            if mode == "lengths":
                self.lane_len[src * LANE_WIDTH + lane] = 0

    @property
    def prealloc_per_node_bytes(self):
        """Pre-allocated bytes per node; 88 for lengths, 536 for paths."""
        bits = (
            self.frontier_bits.nbytes + self.next_bits.nbytes + self.visited_bits.nbytes
        )
        aux = self.lane_len.nbytes if self.mode == "lengths" else self.parents.heads_nbytes
        return (bits + aux) // self.num_nodes

    def lane_slot(self, node, lane):
        return node * LANE_WIDTH + lane


def edge_compute_lengths(st: LengthState, u, v, iteration):
    """Listing-style length relaxation; returns True when v joins the frontier.

    The first relaxation wins via the visited flag; len[v] is written at
    most once per query and equals len[u] + 1.
    """
    if iteration > MAX_DEPTH:
        raise DepthOverflowError(f"BFS depth {iteration} exceeds {MAX_DEPTH}")
    if st.visited[v]:
        return False
    st.visited[v] = 1
    st.length[v] = iteration
    return True


def edge_compute_paths(st: PathState, u, v, via_edge, iteration, thread=0):
    """Record a shortest-path parent edge; returns True when v is newly seen.

    Reads the deferred-committed visited array, so every same-level parent
    is recorded; the engine commits visited at the iteration boundary.
    """
    if iteration > MAX_DEPTH:
        raise DepthOverflowError(f"BFS depth {iteration} exceeds {MAX_DEPTH}")
    if st.visited[v]:
        return False
    st.parents.add_parent_edge(v, u, via_edge, iteration, thread=thread)
    st.dist[v] = iteration
    return True


def ms_edge_compute(st: LaneState, u, v, via_edge, iteration, thread=0):
    """64-lane relaxation of one edge; returns True when any lane activates v.

    Lengths mode: D = frontier_bits[u] & ~visited_bits[v] is claimed with a
    fetch-or whose prior value resolves races, then each claimed lane's
    length is set.  Paths mode: visited is deferred-committed, so D is
    computed against the previous iterations only and every claimed lane
    records a parent.
    """
    if iteration > MAX_DEPTH:
        raise DepthOverflowError(f"BFS depth {iteration} exceeds {MAX_DEPTH}")
    fb = st.frontier_bits[u]
    d = int(fb) & ~int(st.visited_bits[v])
    if d == 0:
        return False
    if st.mode == "lengths":
        prior = int(st.visited_bits[v])
        st.visited_bits[v] |= np.uint64(d)
        won = d & ~prior
        if won == 0:
            return False
        st.next_bits[v] |= np.uint64(won)
        for lane in decode_set_bits(won):
            st.lane_len[st.lane_slot(v, lane)] = iteration
        return True
    st.next_bits[v] |= np.uint64(d)
    slots = []
    w0s = []
    w1s = []
    for lane in decode_set_bits(d):
        slots.append(st.lane_slot(v, lane))
        w0s.append(pack_record_word0(u, iteration))
        w1s.append(via_edge)
    st.parents.append_batch(thread, slots, w0s, w1s)
    return True
