"""jit frontier-extension kernels.

All kernels run with the GIL released and use CPU atomics for the per-node
claims, so any number of workers may extend frontier morsels of the same
source morsel concurrently.  Paths kernels emit parent records into a
caller-owned scratch buffer and return a resume cursor when it fills; the
wrapper commits the batch to the ParentStore and re-enters.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .._atomics import atomic_or_u64, atomic_xchg_u8, ctz64

NAME = "numba"
NEEDS_MORSEL_LOCK = False

SCRATCH_RECORDS = 1 << 16

_EMPTY_I64 = np.empty(0, dtype=np.int64)
_U64_ZERO = np.uint64(0)
_U64_ONE = np.uint64(1)
_U8_ONE = np.uint8(1)


def make_scratch():
    """Per-worker reusable record buffer: flat (slot, word0, word1) triplets."""
    return np.empty(3 * SCRATCH_RECORDS, dtype=np.int64)


@njit(nogil=True, cache=True)
def _k_lengths(offsets, neighbors, cur, nxt, visited, length, it, begin, end, ids, use_ids):
    for pos in range(begin, end):
        u = ids[pos] if use_ids else pos
        if not use_ids and cur[u] == 0:
            continue
        for e in range(offsets[u], offsets[u + 1]):
            v = neighbors[e]
            if visited[v] == 0:
                old = atomic_xchg_u8(visited, v, _U8_ONE)
                if old == 0:
                    length[v] = it
                    nxt[v] = 1


@njit(nogil=True, cache=True)
def _k_paths(offsets, neighbors, cur, nxt, visited, dist, it, begin, end, ids, use_ids,
             scr, cap, start_edge):
    cnt = 0
    pos = begin
    resume_e = start_edge
    while pos < end:
        u = ids[pos] if use_ids else pos
        if use_ids or cur[u] != 0:
            e0 = offsets[u] if resume_e < 0 else resume_e
            for e in range(e0, offsets[u + 1]):
                v = neighbors[e]
                # visited holds iterations < it only (deferred commit), so
                # every same-level parent is recorded
                if visited[v] == 0:
                    if cnt == cap:
                        return cnt, pos, e
                    scr[3 * cnt] = v
                    scr[3 * cnt + 1] = u | (it << 48)
                    scr[3 * cnt + 2] = e
                    cnt += 1
                    nxt[v] = 1
                    dist[v] = it
        resume_e = -1
        pos += 1
    return cnt, end, np.int64(-1)


@njit(nogil=True, cache=True)
def _k_ms_lengths(offsets, neighbors, curw, nxtw, visw, lane_len, it, begin, end, ids, use_ids):
    one = _U64_ONE
    zero = _U64_ZERO
    for pos in range(begin, end):
        u = ids[pos] if use_ids else pos
        fb = curw[u]
        if fb == zero:
            continue
        for e in range(offsets[u], offsets[u + 1]):
            v = neighbors[e]
            d0 = fb & ~visw[v]
            if d0 != zero:
                prior = atomic_or_u64(visw, v, d0)
                d = d0 & ~prior
                if d != zero:
                    atomic_or_u64(nxtw, v, d)
                    while d != zero:
                        lane = ctz64(d)
                        lane_len[(v << 6) + lane] = it
                        d &= d - one


@njit(nogil=True, cache=True)
def _k_ms_paths(offsets, neighbors, curw, nxtw, visw, it, begin, end, ids, use_ids,
                scr, cap, start_edge):
    one = _U64_ONE
    zero = _U64_ZERO
    cnt = 0
    pos = begin
    resume_e = start_edge
    while pos < end:
        u = ids[pos] if use_ids else pos
        fb = curw[u]
        if fb != zero:
            e0 = offsets[u] if resume_e < 0 else resume_e
            for e in range(e0, offsets[u + 1]):
                v = neighbors[e]
                d0 = fb & ~visw[v]
                if d0 != zero:
                    # up to 64 records per edge; suspend while room is short
                    if cnt + 64 > cap:
                        return cnt, pos, e
                    atomic_or_u64(nxtw, v, d0)
                    d = d0
                    while d != zero:
                        lane = ctz64(d)
                        scr[3 * cnt] = (v << 6) + lane
                        scr[3 * cnt + 1] = u | (it << 48)
                        scr[3 * cnt + 2] = e
                        cnt += 1
                        d &= d - one
        resume_e = -1
        pos += 1
    return cnt, end, np.int64(-1)


def extend_lengths(offsets, neighbors, cur, nxt, visited, length, it, kind, begin, end, ids):
    use_ids = kind == "sparse"
    _k_lengths(offsets, neighbors, cur, nxt, visited, length, it, begin, end,
               ids if use_ids else _EMPTY_I64, use_ids)


def extend_paths(offsets, neighbors, cur, nxt, visited, dist, it, kind, begin, end, ids,
                 store, wid, scratch):
    use_ids = kind == "sparse"
    ids_arr = ids if use_ids else _EMPTY_I64
    cap = len(scratch) // 3
    pos = begin
    edge = np.int64(-1)
    while True:
        cnt, pos, edge = _k_paths(offsets, neighbors, cur, nxt, visited, dist, it,
                                  pos, end, ids_arr, use_ids, scratch, cap, edge)
        store.commit_scratch(wid, scratch, int(cnt))
        if pos >= end:
            return


def extend_ms_lengths(offsets, neighbors, curw, nxtw, visw, lane_len, it, kind, begin, end, ids):
    use_ids = kind == "sparse"
    _k_ms_lengths(offsets, neighbors, curw, nxtw, visw, lane_len, it, begin, end,
                  ids if use_ids else _EMPTY_I64, use_ids)


def extend_ms_paths(offsets, neighbors, curw, nxtw, visw, it, kind, begin, end, ids,
                    store, wid, scratch):
    use_ids = kind == "sparse"
    ids_arr = ids if use_ids else _EMPTY_I64
    cap = len(scratch) // 3
    # the kernel suspends whole edges (up to 64 lane records each), so a
    # smaller scratch could never admit its first edge and would spin
    if cap < 64:
        raise ValueError("multi-source paths scratch must hold >= 64 records")
    pos = begin
    edge = np.int64(-1)
    while True:
        cnt, pos, edge = _k_ms_paths(offsets, neighbors, curw, nxtw, visw, it,
                                     pos, end, ids_arr, use_ids, scratch, cap, edge)
        store.commit_scratch(wid, scratch, int(cnt))
        if pos >= end:
            return


def warm():
    """Force-compile every kernel signature on a 3-node path graph.

    The CSR arrays are marked read-only to mirror how the engine passes
    them, so this compiles (or loads from the disk cache) exactly the
    overloads the engine will call.
    """
    from ..parents import ParentStore

    offsets = np.array([0, 1, 2, 2], dtype=np.int64)
    neighbors = np.array([1, 2], dtype=np.int64)
    offsets.setflags(write=False)
    neighbors.setflags(write=False)
    ids = np.array([0], dtype=np.int64)
    scratch = np.empty(3 * 64, dtype=np.int64)

    for kind in ("dense", "sparse"):
        cur = np.zeros(3, np.uint8)
        cur[0] = 1
        extend_lengths(offsets, neighbors, cur, np.zeros(3, np.uint8),
                       np.zeros(3, np.uint8), np.full(3, 255, np.uint8),
                       1, kind, 0, 1, ids)
        store = ParentStore(3, num_threads=1, use_jit=True)
        extend_paths(offsets, neighbors, cur, np.zeros(3, np.uint8),
                     np.zeros(3, np.uint8), np.full(3, 255, np.uint8),
                     1, kind, 0, 1, ids, store, 0, scratch)
        curw = np.zeros(3, np.uint64)
        curw[0] = 1
        extend_ms_lengths(offsets, neighbors, curw, np.zeros(3, np.uint64),
                          np.zeros(3, np.uint64), np.full(3 * 64, 255, np.uint8),
                          1, kind, 0, 1, ids)
        store = ParentStore(3 * 64, num_threads=1, use_jit=True)
        extend_ms_paths(offsets, neighbors, curw, np.zeros(3, np.uint64),
                        np.zeros(3, np.uint64), 1, kind, 0, 1, ids, store, 0, scratch)
