"""Vectorized frontier-extension kernels, no compilation required.

Each call processes a whole frontier morsel as batch array operations.
The batch read-modify-write sequences are not atomic, so the engine
serializes calls that share a source morsel (NEEDS_MORSEL_LOCK); distinct
source morsels still proceed concurrently.  Semantics match the jit
backend exactly: lengths claim nodes/lanes at most once, paths record
every same-level parent against the deferred-committed visited state.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"
NEEDS_MORSEL_LOCK = True


def make_scratch():
    # record batches are built per call; no reusable buffer needed
    return None


def _active_nodes(frontier, kind, begin, end, ids):
    if kind == "sparse":
        return ids[begin:end]
    return begin + np.flatnonzero(frontier[begin:end])


def _expand(offsets, neighbors, act):
    """All out-edges of the active nodes: (heads u, tails v, edge ids)."""
    starts = offsets[act]
    counts = offsets[act + 1] - starts
    total = int(counts.sum())
    if total == 0:
        e = np.empty(0, dtype=np.int64)
        return e, e, e
    cum = np.cumsum(counts)
    es = np.repeat(starts - (cum - counts), counts) + np.arange(total, dtype=np.int64)
    us = np.repeat(act, counts)
    return us, neighbors[es], es


def _lane_matrix(words):
    """(m, 64) boolean lane matrix of m uint64 words (little-endian hosts)."""
    return np.unpackbits(
        words.view(np.uint8).reshape(-1, 8), axis=1, bitorder="little"
    ).astype(bool)


def extend_lengths(offsets, neighbors, cur, nxt, visited, length, it, kind, begin, end, ids):
    act = _active_nodes(cur, kind, begin, end, ids)
    if len(act) == 0:
        return
    us, vs, es = _expand(offsets, neighbors, act)
    fresh = np.unique(vs[visited[vs] == 0])
    visited[fresh] = 1
    length[fresh] = it
    nxt[fresh] = 1


def extend_paths(offsets, neighbors, cur, nxt, visited, dist, it, kind, begin, end, ids,
                 store, wid, scratch):
    act = _active_nodes(cur, kind, begin, end, ids)
    if len(act) == 0:
        return
    us, vs, es = _expand(offsets, neighbors, act)
    keep = visited[vs] == 0
    vf, uf, ef = vs[keep], us[keep], es[keep]
    if len(vf) == 0:
        return
    nxt[vf] = 1
    dist[vf] = it
    store.append_batch(wid, vf, uf | (it << 48), ef)


def extend_ms_lengths(offsets, neighbors, curw, nxtw, visw, lane_len, it, kind, begin, end, ids):
    act = _active_nodes(curw, kind, begin, end, ids)
    if len(act) == 0:
        return
    us, vs, es = _expand(offsets, neighbors, act)
    d0 = curw[us] & ~visw[vs]
    keep = d0 != 0
    vs2, d02 = vs[keep], d0[keep]
    if len(vs2) == 0:
        return
    uv, inv = np.unique(vs2, return_inverse=True)
    comb = np.zeros(len(uv), dtype=np.uint64)
    np.bitwise_or.at(comb, inv, d02)
    newbits = comb & ~visw[uv]
    live = newbits != 0
    uvl, nbl = uv[live], newbits[live]
    if len(uvl) == 0:
        return
    visw[uvl] |= nbl
    nxtw[uvl] |= nbl
    lanes = _lane_matrix(nbl)
    ll = lane_len.reshape(-1, 64)
    sub = ll[uvl]
    sub[lanes] = it
    ll[uvl] = sub


def extend_ms_paths(offsets, neighbors, curw, nxtw, visw, it, kind, begin, end, ids,
                    store, wid, scratch):
    act = _active_nodes(curw, kind, begin, end, ids)
    if len(act) == 0:
        return
    us, vs, es = _expand(offsets, neighbors, act)
    # visited reflects earlier iterations only (deferred commit), so every
    # same-level parent lane survives
    d0 = curw[us] & ~visw[vs]
    keep = d0 != 0
    vs2, us2, es2, d02 = vs[keep], us[keep], es[keep], d0[keep]
    if len(vs2) == 0:
        return
    uv, inv = np.unique(vs2, return_inverse=True)
    comb = np.zeros(len(uv), dtype=np.uint64)
    np.bitwise_or.at(comb, inv, d02)
    nxtw[uv] |= comb
    lanes = _lane_matrix(d02)
    ei, lane_idx = np.nonzero(lanes)
    slots = vs2[ei] * 64 + lane_idx
    store.append_batch(wid, slots, us2[ei] | (it << 48), es2[ei])


def warm():
    """Nothing to compile."""
