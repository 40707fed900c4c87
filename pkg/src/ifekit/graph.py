"""Immutable CSR graph storage, edge-list ingestion, and synthetic graphs.

Node ids are dense 0-based integers; the input ids define the universe
directly (no remap table).  Duplicate edges are preserved (multigraph) and
neighbor lists are stored in ascending order so iteration is deterministic.
The structure is immutable after construction and safe for unsynchronized
concurrent reads.
"""

from __future__ import annotations

import io
import os
import struct

import numpy as np

from .errors import CapacityError, EdgeListParseError, SnapshotFormatError

# Node ids must fit in 48 bits: parent records pack (node, iteration) into
# one 64-bit word.
MAX_NODE_ID = (1 << 48) - 1
MAX_EDGES = 1 << 40

SNAPSHOT_MAGIC = b"IFE1"


class CsrGraph:
    """Compressed-sparse-row adjacency store.

    offsets has length num_nodes + 1 with offsets[0] == 0 and
    offsets[num_nodes] == num_edges; degree(u) is offsets[u+1] - offsets[u].
    """

    __slots__ = ("num_nodes", "num_edges", "offsets", "neighbors", "directed")

    def __init__(self, offsets, neighbors, directed=True):
        offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        neighbors = np.ascontiguousarray(neighbors, dtype=np.int64)
        if offsets.ndim != 1 or neighbors.ndim != 1:
            raise ValueError("offsets and neighbors must be 1-d arrays")
        if len(offsets) == 0 or offsets[0] != 0:
            raise ValueError("offsets must start with 0")
        if offsets[-1] != len(neighbors):
            raise ValueError("offsets must end at num_edges")
        if np.any(np.diff(offsets) < 0):
            raise ValueError("offsets must be monotonically non-decreasing")
        n = len(offsets) - 1
        if len(neighbors) and (neighbors.min() < 0 or neighbors.max() >= n):
            raise ValueError("neighbor entries must be valid node ids")
        self.num_nodes = n
        self.num_edges = len(neighbors)
        self.offsets = offsets
        self.neighbors = neighbors
        self.directed = directed
        self.offsets.setflags(write=False)
        self.neighbors.setflags(write=False)

    def degree(self, u):
        return int(self.offsets[u + 1] - self.offsets[u])

    def scan_fwd(self, u):
        """Yield (neighbor, edge_id) pairs of u in storage order.

        The edge id is the position of the edge in the CSR edge array, so a
        duplicated edge is yielded twice with distinct ids.
        """
        lo = int(self.offsets[u])
        hi = int(self.offsets[u + 1])
        for e in range(lo, hi):
            yield int(self.neighbors[e]), e

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"CsrGraph({self.num_nodes} nodes, {self.num_edges} edges, {kind})"


def _build_csr(src, dst, num_nodes, directed):
    """Build sorted CSR arrays from parallel edge-endpoint arrays."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if not directed:
        # store both directions; a self-loop contributes two copies
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
    counts = np.bincount(src, minlength=num_nodes) if len(src) else np.zeros(num_nodes, np.int64)
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    order = np.lexsort((dst, src))
    return CsrGraph(offsets, dst[order], directed=directed)


def load_edge_list(source, directed=True, node_cap=MAX_NODE_ID + 1):
    """Parse `u v` lines into a CsrGraph.

    `source` may be an os.PathLike, an open text/byte stream, or str/bytes
    content.  Lines starting with `#` are comments; blank lines are skipped.
    num_nodes is 1 + the largest id seen (0 for an empty stream).  With
    directed=False every input edge is stored in both directions.
    """
    if isinstance(source, os.PathLike):
        stream = open(source, "rt")
    elif isinstance(source, str):
        stream = io.StringIO(source)
    elif isinstance(source, bytes):
        stream = io.StringIO(source.decode("ascii"))
    else:
        stream = source

    us, vs = [], []
    max_id = -1
    try:
        for line_no, raw in enumerate(stream, start=1):
            if isinstance(raw, bytes):
                raw = raw.decode("ascii")
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListParseError(line_no, f"expected 'u v', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListParseError(line_no, f"non-integer token in {line!r}")
            if u < 0 or v < 0:
                raise EdgeListParseError(line_no, f"negative id in {line!r}")
            if u >= node_cap or v >= node_cap:
                raise CapacityError(
                    f"line {line_no}: id {max(u, v)} exceeds node cap {node_cap}"
                )
            us.append(u)
            vs.append(v)
            if u > max_id:
                max_id = u
            if v > max_id:
                max_id = v
    finally:
        if stream is not source:
            stream.close()

    num_nodes = max_id + 1
    return _build_csr(us, vs, num_nodes, directed)


def generate_random_graph(num_nodes, avg_degree, seed, directed=True):
    """G(n, m)-style random graph with round(n * avg_degree) drawn edges.

    Edges are drawn uniformly with replacement from all ordered pairs
    (self-loops included), deterministically from the seed.  Undirected
    graphs store both copies of each drawn edge.
    """
    if num_nodes < 1:
        raise ValueError("num_nodes must be >= 1")
    if avg_degree < 0:
        raise ValueError("avg_degree must be >= 0")
    if num_nodes > MAX_NODE_ID + 1:
        raise CapacityError(f"num_nodes {num_nodes} exceeds cap {MAX_NODE_ID + 1}")
    num_edges = int(round(num_nodes * avg_degree))
    if num_edges > MAX_EDGES:
        raise CapacityError(f"requested {num_edges} edges exceeds cap {MAX_EDGES}")
    rng = np.random.default_rng(seed)
    src = rng.integers(0, num_nodes, size=num_edges, dtype=np.int64)
    dst = rng.integers(0, num_nodes, size=num_edges, dtype=np.int64)
    return _build_csr(src, dst, num_nodes, directed=directed)


def save_snapshot(g, path):
    """Write the binary snapshot: magic IFE1, LE u64 counts, then arrays."""
    with open(path, "wb") as f:
        f.write(SNAPSHOT_MAGIC)
        f.write(struct.pack("<QQ", g.num_nodes, g.num_edges))
        f.write(g.offsets.astype("<u8").tobytes())
        f.write(g.neighbors.astype("<u8").tobytes())


def load_snapshot(path):
    """Read a snapshot written by save_snapshot; round-trips bit-exactly.

    The snapshot stores only the CSR arrays, so the loaded graph always
    reports directed=True (an undirected load was already symmetrized).
    """
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise SnapshotFormatError(f"bad magic {magic!r}")
        header = f.read(16)
        if len(header) != 16:
            raise SnapshotFormatError("truncated header")
        num_nodes, num_edges = struct.unpack("<QQ", header)
        off_bytes = f.read(8 * (num_nodes + 1))
        nbr_bytes = f.read(8 * num_edges)
        if len(off_bytes) != 8 * (num_nodes + 1) or len(nbr_bytes) != 8 * num_edges:
            raise SnapshotFormatError("truncated arrays")
        offsets = np.frombuffer(off_bytes, dtype="<u8")
        neighbors = np.frombuffer(nbr_bytes, dtype="<u8")
        return CsrGraph(offsets.astype(np.int64), neighbors.astype(np.int64))
