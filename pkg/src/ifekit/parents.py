"""Compact shortest-path parent storage.

A ParentStore is a dense array of per-slot head handles plus one
append-only record arena per worker thread.  A record is exactly 24 bytes,
three 64-bit words:

    word0: parent node id (low 48 bits) | iteration (upper 16 bits)
    word1: edge id
    word2: handle of the previous head record, -1 for end of chain

Handles are (thread id << 40) | record index, so they stay valid when an
arena grows (growth copies records, indices are stable).  Chains are built
by prepending: the new record's next points at the observed head and the
head is swung with compare-and-swap, retrying on contention.  Single-source
queries use one slot per node; multi-source morsels use one slot per
(node, lane) pair.
"""

from __future__ import annotations

import threading

import numpy as np

from ._atomics import HAVE_NUMBA
from .errors import ParentArenaOverflowError

RECORD_WORDS = 3
RECORD_BYTES = 24
NULL_HANDLE = -1
HANDLE_THREAD_SHIFT = 40
HANDLE_OFFSET_MASK = (1 << 40) - 1
ITER_SHIFT = 48
NODE_MASK = (1 << 48) - 1

_MIN_ARENA_RECORDS = 1024

_commit_kernel = None


def _get_commit_kernel():
    """Compile the CAS prepend kernel on first use."""
    global _commit_kernel
    if _commit_kernel is None:
        from numba import njit

        from ._atomics import atomic_cas_i64

        @njit(nogil=True, cache=True)
        def kernel(heads, arena, base, m, scr, thread_id):
            for j in range(m):
                slot = scr[3 * j]
                row = base + j
                arena[row, 0] = scr[3 * j + 1]
                arena[row, 1] = scr[3 * j + 2]
                handle = (thread_id << HANDLE_THREAD_SHIFT) | row
                while True:
                    old = heads[slot]
                    arena[row, 2] = old
                    prior = atomic_cas_i64(heads, slot, old, handle)
                    if prior == old:
                        break

        _commit_kernel = kernel
    return _commit_kernel


def pack_handle(thread_id, index):
    return (thread_id << HANDLE_THREAD_SHIFT) | index


def unpack_handle(handle):
    return handle >> HANDLE_THREAD_SHIFT, handle & HANDLE_OFFSET_MASK


def pack_record_word0(parent, iteration):
    return parent | (iteration << ITER_SHIFT)


class ParentStore:
    """Shared head-handle array plus per-thread append arenas."""

    def __init__(self, num_slots, num_threads=1, max_bytes=1 << 30, use_jit=None):
        self.num_slots = num_slots
        self.num_threads = num_threads
        self.max_bytes = max_bytes
        self.use_jit = HAVE_NUMBA if use_jit is None else use_jit
        self.heads = np.full(num_slots, NULL_HANDLE, dtype=np.int64)
        self._arenas = [np.empty((0, RECORD_WORDS), dtype=np.int64) for _ in range(num_threads)]
        self._counts = [0] * num_threads
        self._acct_lock = threading.Lock()
        self._np_lock = threading.Lock()
        self._total_records = 0

    @property
    def num_records(self):
        return self._total_records

    @property
    def bytes_used(self):
        """Arena bytes consumed by committed records: 24 per record."""
        return RECORD_BYTES * self._total_records

    @property
    def heads_nbytes(self):
        return self.heads.nbytes

    def _reserve(self, thread_id, extra):
        """Account for extra records and grow the thread's arena; returns base row."""
        with self._acct_lock:
            if (self._total_records + extra) * RECORD_BYTES > self.max_bytes:
                raise ParentArenaOverflowError(
                    f"parent arenas would exceed {self.max_bytes} bytes"
                )
            self._total_records += extra
        arena = self._arenas[thread_id]
        count = self._counts[thread_id]
        need = count + extra
        if need > len(arena):
            newcap = max(2 * len(arena), need, _MIN_ARENA_RECORDS)
            grown = np.empty((newcap, RECORD_WORDS), dtype=np.int64)
            grown[:count] = arena[:count]
            self._arenas[thread_id] = grown
        return count

    def commit_scratch(self, thread_id, scratch, m):
        """Prepend m records given as flat (slot, word0, word1) triplets."""
        if m == 0:
            return
        base = self._reserve(thread_id, m)
        arena = self._arenas[thread_id]
        if self.use_jit:
            _get_commit_kernel()(self.heads, arena, base, m, scratch, thread_id)
            self._counts[thread_id] = base + m
            return
        self._commit_grouped(
            thread_id, arena, base, scratch[: 3 * m : 3], scratch[1 : 3 * m : 3], scratch[2 : 3 * m : 3]
        )

    def append_batch(self, thread_id, slots, word0, word1):
        """Prepend a batch given as parallel arrays."""
        slots = np.ascontiguousarray(slots, dtype=np.int64)
        word0 = np.ascontiguousarray(word0, dtype=np.int64)
        word1 = np.ascontiguousarray(word1, dtype=np.int64)
        m = len(slots)
        if m == 0:
            return
        if self.use_jit:
            scratch = np.empty(3 * m, dtype=np.int64)
            scratch[0::3] = slots
            scratch[1::3] = word0
            scratch[2::3] = word1
            self.commit_scratch(thread_id, scratch, m)
            return
        base = self._reserve(thread_id, m)
        self._commit_grouped(thread_id, self._arenas[thread_id], base, slots, word0, word1)

    def _commit_grouped(self, thread_id, arena, base, slots, word0, word1):
        """Lock-serialized vectorized prepend for the numpy backend.

        Records of one batch that share a slot are chained in batch order,
        which walks LIFO exactly like the sequential CAS path.
        """
        m = len(slots)
        with self._np_lock:
            order = np.argsort(slots, kind="stable")
            ss = np.asarray(slots)[order]
            rows = base + order
            handles = (thread_id << HANDLE_THREAD_SHIFT) | rows
            nxt = self.heads[ss].copy()
            if m > 1:
                same = ss[1:] == ss[:-1]
                nxt[1:][same] = handles[:-1][same]
                last = np.concatenate([~same, [True]])
            else:
                last = np.array([True])
            arena[rows, 0] = np.asarray(word0)[order]
            arena[rows, 1] = np.asarray(word1)[order]
            arena[rows, 2] = nxt
            self.heads[ss[last]] = handles[last]
        self._counts[thread_id] = base + m

    def add_parent_edge(self, child, parent, via_edge, iteration, thread=0):
        """Prepend one (parent, edge, iteration) record to child's chain."""
        self.append_batch(
            thread,
            np.array([child], dtype=np.int64),
            np.array([pack_record_word0(parent, iteration)], dtype=np.int64),
            np.array([via_edge], dtype=np.int64),
        )

    def walk(self, slot):
        """Yield (parent, edge, iteration) records from slot's chain, head first."""
        h = int(self.heads[slot])
        while h != NULL_HANDLE:
            t, off = unpack_handle(h)
            w0, w1, w2 = (int(x) for x in self._arenas[t][off])
            yield w0 & NODE_MASK, w1, w0 >> ITER_SHIFT
            h = w2

    def collect(self, slot, at_iter):
        """Deduplicated (parent, edge) pairs recorded at the given iteration.

        Chain-walk order then sort, so the result is deterministic.
        """
        seen = set()
        for parent, edge, it in self.walk(slot):
            if it == at_iter:
                seen.add((parent, edge))
        return sorted(seen)

    def collect_parents(self, child, at_iter):
        """collect() addressed by child node id (single-source layout)."""
        return self.collect(child, at_iter)

    def chain_length(self, slot):
        return sum(1 for _ in self.walk(slot))

    def iter_of_head(self, slot):
        """Iteration tag of the head record, or None for an empty chain."""
        h = int(self.heads[slot])
        if h == NULL_HANDLE:
            return None
        t, off = unpack_handle(h)
        return int(self._arenas[t][off, 0]) >> ITER_SHIFT

    def head_iters(self, slots):
        """Vectorized iter_of_head over an array of slots; -1 for empty chains."""
        slots = np.asarray(slots, dtype=np.int64)
        hs = self.heads[slots]
        out = np.full(len(slots), -1, dtype=np.int64)
        live = hs != NULL_HANDLE
        if live.any():
            ts = hs[live] >> HANDLE_THREAD_SHIFT
            offs = hs[live] & HANDLE_OFFSET_MASK
            vals = np.empty(len(ts), dtype=np.int64)
            for t in np.unique(ts):
                sel = ts == t
                vals[sel] = self._arenas[t][offs[sel], 0] >> ITER_SHIFT
            out[live] = vals
        return out
