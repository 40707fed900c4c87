"""Current/next frontiers, the sparse overlay, and frontier-morsel carving.

A FrontierPair owns two per-node activity arrays.  Kernels write the next
frontier during an iteration; at the iteration boundary exactly one thread
calls swap_and_maybe_sparsify, which exchanges the roles, recounts, clears
the new next array, and builds a sparse id overlay when fewer than 1/8th of
all nodes are active (strict less-than, integer division).

The same class backs single-source byte frontiers (dtype uint8) and
multi-source 64-lane word frontiers (dtype uint64): a node is active iff
its entry is nonzero.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

DEFAULT_DENSE_MORSEL = 2048
DEFAULT_SPARSE_MORSEL = 1024


@dataclass(frozen=True)
class FrontierMorsel:
    """Half-open range of work: node ids (dense) or overlay indices (sparse)."""

    kind: str  # "dense" | "sparse"
    begin: int
    end: int

    def __post_init__(self):
        if self.begin >= self.end:
            raise ValueError("morsel range must be non-empty")


class FrontierPair:
    """Double-buffered frontier with an atomic morsel cursor."""

    def __init__(self, num_nodes, dtype=np.uint8, buffers=None):
        self.num_nodes = num_nodes
        if buffers is not None:
            # wrap caller-owned arrays (multi-source lane words) instead of
            # allocating; the pair swaps the two references between itself
            self.cur, self.nxt = buffers
        else:
            self.cur = np.zeros(num_nodes, dtype=dtype)
            self.nxt = np.zeros(num_nodes, dtype=dtype)
        self.cur_count = 0
        self.overlay = None
        self._cursor = 0
        self._grab_lock = threading.Lock()
        self._set_lock = threading.Lock()
        self._next_soft_count = 0

    @property
    def active_count(self):
        """Number of active nodes in the current frontier (boundary-exact)."""
        return self.cur_count

    @property
    def has_sparse_overlay(self):
        return self.overlay is not None

    def is_active(self, u):
        return bool(self.cur[u])

    def set_active(self, v):
        """Mark v active in the next frontier; idempotent.

        Convenience entry point for API-level and single-threaded use; the
        jit kernels write the arrays directly and the boundary recount is
        authoritative either way.
        """
        with self._set_lock:
            if self.nxt[v] == 0:
                self.nxt[v] = 1
                self._next_soft_count += 1

    @property
    def next_soft_count(self):
        """Count of set_active first-sets since the last swap (advisory)."""
        return self._next_soft_count

    def swap_and_maybe_sparsify(self):
        """Exchange current/next at an iteration boundary.

        Must be called exactly once per boundary by exactly one thread.
        Returns "converged" when the new current frontier is empty, else
        "continue".  The overlay is built single-threaded right here, inside
        the boundary critical section.
        """
        self.cur, self.nxt = self.nxt, self.cur
        self.cur_count = int(np.count_nonzero(self.cur))
        self.nxt[:] = 0
        self._next_soft_count = 0
        self._cursor = 0
        if self.cur_count == 0:
            self.overlay = None
            return "converged"
        if self.cur_count < self.num_nodes // 8:
            self.overlay = np.flatnonzero(self.cur).astype(np.int64)
        else:
            self.overlay = None
        return "continue"

    def _domain_size(self):
        return len(self.overlay) if self.overlay is not None else self.num_nodes

    def cursor_exhausted(self):
        return self._cursor >= self._domain_size()

    def grab_frontier_morsel(
        self, dense_size=DEFAULT_DENSE_MORSEL, sparse_size=DEFAULT_SPARSE_MORSEL
    ):
        """Atomically carve the next half-open range, or None when exhausted.

        The union of all ranges handed out during one iteration tiles the
        domain exactly once.  Dense-range consumers must re-check is_active
        per node; sparse ranges index the overlay and contain only actives.
        """
        with self._grab_lock:
            domain = self._domain_size()
            if self._cursor >= domain:
                return None
            if self.overlay is not None:
                kind, size = "sparse", sparse_size
            else:
                kind, size = "dense", dense_size
            begin = self._cursor
            end = min(begin + size, domain)
            self._cursor = end
            return FrontierMorsel(kind, begin, end)
