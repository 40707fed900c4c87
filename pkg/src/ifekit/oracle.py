"""Independent brute-force references used by tests and --verify.

Everything here is deliberately naive and single-threaded: a separate
edge-list parser, an adjacency-map BFS, exhaustive shortest-path
enumeration for small graphs, and a deterministic single-threaded replay
of the dispatcher state machine.  None of it touches CSR internals, so it
can sit in judgment over the engine.
"""

from __future__ import annotations

from collections import deque

import numpy as np


def parse_edge_list_naive(text, directed=True):
    """Parse `u v` lines into (num_nodes, [(u, v), ...]) without numpy."""
    edges = []
    max_id = -1
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        a, b = line.split()
        u, v = int(a), int(b)
        edges.append((u, v))
        max_id = max(max_id, u, v)
    if not directed:
        edges = edges + [(v, u) for (u, v) in edges]
    return max_id + 1, edges


def raw_random_edges(num_nodes, avg_degree, seed):
    """Re-derive the random generator's raw edge set without building a CSR.

    Mirrors the documented draw: round(n * deg) ordered pairs, each endpoint
    uniform over [0, n), from numpy's default_rng(seed).
    """
    num_edges = int(round(num_nodes * avg_degree))
    rng = np.random.default_rng(seed)
    src = rng.integers(0, num_nodes, size=num_edges, dtype=np.int64)
    dst = rng.integers(0, num_nodes, size=num_edges, dtype=np.int64)
    return num_nodes, list(zip(src.tolist(), dst.tolist()))


def adjacency(num_nodes, edges):
    """Adjacency map: node -> list of (neighbor, edge_key), sorted by neighbor.

    Parallel edges get distinct keys (u, v, copy_index) with copies numbered
    in neighbor-sorted order, matching how CSR positions order them.
    """
    adj = [[] for _ in range(num_nodes)]
    for u, v in edges:
        adj[u].append(v)
    out = []
    for u in range(num_nodes):
        nbrs = sorted(adj[u])
        lst = []
        copy = 0
        for i, v in enumerate(nbrs):
            copy = copy + 1 if i > 0 and nbrs[i - 1] == v else 0
            lst.append((v, (u, v, copy)))
        out.append(lst)
    return out


def adjacency_from_graph(g):
    """Adjacency map built only through the graph's public scan."""
    n = g.num_nodes
    edges = [(u, v) for u in range(n) for v, _ in g.scan_fwd(u)]
    return adjacency(n, edges)


def bfs_distances(adj, src):
    """Textbook queue BFS; returns a list with -1 for unreachable nodes."""
    dist = [-1] * len(adj)
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for v, _ in adj[u]:
            if dist[v] == -1:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def level_parents(adj, src):
    """All level-respecting parents: v -> set of (u, edge_key).

    A parent edge (u, v) is valid iff dist[u] + 1 == dist[v]; this is the
    complete set of edges lying on some shortest path from src.
    """
    dist = bfs_distances(adj, src)
    parents = {}
    for u in range(len(adj)):
        if dist[u] == -1:
            continue
        for v, key in adj[u]:
            if dist[v] == dist[u] + 1:
                parents.setdefault(v, set()).add((u, key))
    return dist, parents


def brute_force_all_shortest_paths(graph_or_adj, src, dst, max_nodes=64):
    """Exact set of minimum-length edge sequences from src to dst.

    Paths are tuples alternating nodes and canonical edge keys:
    (src, key, n1, key, ..., dst).  src == dst yields the empty path (src,).
    Refuses graphs above max_nodes; this is the exhaustive regime.
    """
    if hasattr(graph_or_adj, "scan_fwd"):
        if graph_or_adj.num_nodes > max_nodes:
            raise ValueError(f"graph too large for exhaustive paths (> {max_nodes} nodes)")
        adj = adjacency_from_graph(graph_or_adj)
    else:
        adj = graph_or_adj
        if len(adj) > max_nodes:
            raise ValueError(f"graph too large for exhaustive paths (> {max_nodes} nodes)")

    dist = bfs_distances(adj, src)
    if src == dst:
        return {(src,)}
    if dst >= len(adj) or dist[dst] == -1:
        return set()

    paths = set()

    def walk(u, acc):
        if u == dst:
            paths.add(tuple(acc))
            return
        for v, key in adj[u]:
            # dist strictly increments along the walk, so every path that
            # lands on dst has exactly dist[dst] edges
            if dist[v] == dist[u] + 1 and dist[v] <= dist[dst]:
                walk(v, acc + [key, v])

    walk(src, [src])
    return paths


def serial_ife_oracle(g, src, mode="lengths"):
    """Single-threaded frontier-expansion reference over the public scan.

    Returns a distance list (-1 unreached) in lengths mode, or a
    (distances, parents) pair in paths mode where parents maps each node to
    the complete set of (parent, edge_id) pairs one level up.
    """
    n = g.num_nodes
    dist = [-1] * n
    dist[src] = 0
    parents = {}
    frontier = [src]
    it = 1
    while frontier:
        nxt = []
        for u in frontier:
            for v, e in g.scan_fwd(u):
                if dist[v] == -1:
                    dist[v] = it
                    nxt.append(v)
                    if mode == "paths":
                        parents.setdefault(v, set()).add((u, e))
                elif mode == "paths" and dist[v] == it:
                    # same-level rediscovery: another valid parent edge
                    parents[v].add((u, e))
        frontier = nxt
        it += 1
    if mode == "paths":
        return dist, parents
    return dist


def canonical_edge_key(g, u, edge_id):
    """Map a CSR edge id to the canonical (u, v, copy_index) key."""
    lo = int(g.offsets[u])
    hi = int(g.offsets[u + 1])
    v = int(g.neighbors[edge_id])
    first = lo + int(np.searchsorted(g.neighbors[lo:hi], v, side="left"))
    return (u, v, edge_id - first)


def canonical_path(g, seq):
    """Rewrite an engine path (node, edge_id, node, ...) with canonical keys."""
    out = [seq[0]]
    for i in range(1, len(seq), 2):
        u = seq[i - 1]
        out.append(canonical_edge_key(g, u, seq[i]))
        out.append(seq[i + 1])
    return tuple(out)


def replay_policy_single_threaded(spec, num_workers):
    """Drive the real dispatcher with simulated round-robin workers.

    Returns the deterministic (worker, event, ...) trace used by the
    policy-identity and stickiness tests.  num_workers is the number of
    simulated workers; no OS threads are involved.
    """
    from . import engine

    _, trace = engine.replay_run(spec, num_workers)
    return trace
