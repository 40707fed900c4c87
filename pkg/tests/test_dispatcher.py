import itertools
import threading

import pytest

from ifekit.dispatcher import (
    DEFAULT_K,
    PHASE_EXTENSION,
    PHASE_OUTPUT,
    POLICY_KINDS,
    DispatchPolicy,
    MorselDispatcher,
    SourceMorsel,
    SourceTable,
)
from ifekit.engine import QuerySpec
from ifekit.graph import generate_random_graph
from ifekit.oracle import replay_policy_single_threaded


def test_policy_make_defaults():
    assert DispatchPolicy.make("ntks").k == 32
    assert DispatchPolicy.make("ntkms").k == 4
    assert DispatchPolicy.make("1t1s").k == 1
    assert DispatchPolicy.make("nt1s").k == 1
    assert DispatchPolicy.make("ntks", k=5).k == 5
    assert DEFAULT_K == {"ntks": 32, "ntkms": 4}


def test_policy_make_rejects_bad_input():
    with pytest.raises(ValueError):
        DispatchPolicy.make("fifo")
    with pytest.raises(ValueError):
        DispatchPolicy.make("ntks", k=0)


def test_source_table_consumes_exactly_once():
    t = SourceTable([4, 5, 6, 7, 8])
    assert len(t) == 5
    assert t.pop(2) == [4, 5]
    assert t.remaining == 3
    assert t.pop(10) == [6, 7, 8]
    assert t.pop() == []


def test_source_table_concurrent_pops_are_disjoint():
    t = SourceTable(range(1000))
    got = [[] for _ in range(8)]

    def work(i):
        while True:
            chunk = t.pop(7)
            if not chunk:
                return
            got[i].extend(chunk)

    ts = [threading.Thread(target=work, args=(i,)) for i in range(8)]
    for th in ts:
        th.start()
    for th in ts:
        th.join()
    merged = list(itertools.chain.from_iterable(got))
    assert sorted(merged) == list(range(1000))


# -- morsel lifecycle, driven directly without kernels -----------------------


def _drain_frontier(m, wid=0):
    """Grab every frontier morsel of the current sweep, then finish."""
    fms = []
    while True:
        fm = m.grab_frontier_morsel(wid, dense_size=2, sparse_size=2)
        if fm is None:
            break
        fms.append(fm)
    actions = [m.check_if_frontier_finished(wid) for _ in fms]
    return fms, actions


def test_morsel_initial_state():
    m = SourceMorsel(0, source=3, num_nodes=8, mode="lengths")
    assert m.phase == PHASE_EXTENSION
    assert m.cur_iter == 1
    assert m.pair.active_count == 1
    assert m.pair.cur[3] == 1


def test_boundary_runs_once_per_sweep():
    m = SourceMorsel(0, source=0, num_nodes=4, mode="lengths")
    # simulate discovering node 1 during the sweep
    fms, actions = [], []
    fm = m.grab_frontier_morsel(0, 4, 4)
    m.pair.set_active(1)
    # a second worker holds nothing; the only in-flight morsel finishes last
    assert m.check_if_frontier_finished(0) == "advanced"
    assert m.cur_iter == 2
    assert m.pair.cur[1] == 1 and m.pair.cur[0] == 0
    del fms, actions, fm


def test_boundary_waits_for_inflight_peers():
    m = SourceMorsel(0, source=0, num_nodes=8, mode="lengths")
    m.pair.set_active(5)
    a = m.grab_frontier_morsel(0, 4, 4)
    b = m.grab_frontier_morsel(1, 4, 4)
    assert a is not None and b is not None
    assert m.grab_frontier_morsel(2, 4, 4) is None  # cursor exhausted
    # worker 1 finishes first but worker 0 is still in flight
    assert m.check_if_frontier_finished(1) == "none"
    assert m.cur_iter == 1
    assert m.check_if_frontier_finished(0) == "advanced"
    assert m.cur_iter == 2


def test_converged_morsel_enters_output_then_retires():
    m = SourceMorsel(0, source=2, num_nodes=5, mode="lengths")
    fm = m.grab_frontier_morsel(0, 8, 8)
    assert fm is not None
    # no new nodes discovered: next frontier is empty
    assert m.check_if_frontier_finished(0) == "entered_output"
    assert m.phase == PHASE_OUTPUT
    assert m.grab_frontier_morsel(0, 8, 8) is None
    spans = []
    while True:
        got = m.grab_output_morsel(0, 2)
        if got is None:
            break
        spans.append(got)
    assert spans == [(0, 2), (2, 4), (4, 5)]
    assert m.output_done(0) is False
    assert m.output_done(0) is False
    assert m.output_done(0) is True
    assert m.retired
    assert m.grab_output_morsel(0, 2) is None
    assert not m.has_dispatchable_work()
    assert m.pair is None and m.aux is None


def test_level_stats_record_sizes():
    m = SourceMorsel(0, source=0, num_nodes=6, mode="lengths")
    fm = m.grab_frontier_morsel(0, 8, 8)
    m.pair.set_active(1)
    m.pair.set_active(2)
    m.check_if_frontier_finished(0)
    fm = m.grab_frontier_morsel(0, 8, 8)
    m.check_if_frontier_finished(0)
    del fm
    depths = [d for d, _, _ in m.level_stats]
    sizes = [s for _, s, _ in m.level_stats]
    assert depths == [0, 1]
    assert sizes == [1, 2]


# -- policy decisions over fake morsels ---------------------------------------


class _FakeMorsel:
    def __init__(self, sources, seq):
        self.seq = seq
        self.sources = list(sources)
        self.retired = False
        self.work = True

    def has_dispatchable_work(self):
        return self.work


def _dispatcher(kind, k, n_sources, lane_width=64):
    policy = DispatchPolicy(kind, k, lane_width)
    table = SourceTable(range(n_sources))
    return MorselDispatcher(table, policy, _FakeMorsel)


def test_1t1s_binds_each_worker_to_its_own_morsel():
    d = _dispatcher("1t1s", 1, 3)
    a = d.grab_src_morsel_if_necessary(0, None)
    b = d.grab_src_morsel_if_necessary(1, None)
    assert a is not b
    assert d.grab_src_morsel_if_necessary(0, a) is a
    a.retired = True
    d.on_retire(a)
    c = d.grab_src_morsel_if_necessary(0, a)
    assert c is not a and c.seq == 2
    c.retired = True
    d.on_retire(c)
    assert d.grab_src_morsel_if_necessary(0, c) is None
    assert d.grab_src_morsel_if_necessary(1, b) is b


def test_nt1s_shares_a_single_live_morsel():
    d = _dispatcher("nt1s", 1, 2)
    a = d.grab_src_morsel_if_necessary(0, None)
    assert d.grab_src_morsel_if_necessary(1, None) is a
    assert d.grab_src_morsel_if_necessary(2, a) is a
    assert d.high_water == 1
    a.retired = True
    d.on_retire(a)
    b = d.grab_src_morsel_if_necessary(0, a)
    assert b is not a
    assert d.grab_src_morsel_if_necessary(1, a) is b


def test_ntks_sticky_then_launch_below_k():
    d = _dispatcher("ntks", k=2, n_sources=4)
    a = d.grab_src_morsel_if_necessary(0, None)
    # sticky: with work available the worker keeps its morsel
    assert d.grab_src_morsel_if_necessary(0, a) is a
    b = d.grab_src_morsel_if_necessary(1, None)
    assert b is not a
    # at the cap, a third worker is served from the live set
    c = d.grab_src_morsel_if_necessary(2, None)
    assert c in (a, b)
    assert d.high_water == 2
    assert d.launch_count == 2


def test_ntks_round_robin_prefers_work():
    d = _dispatcher("ntks", k=3, n_sources=3)
    a = d.grab_src_morsel_if_necessary(0, None)
    b = d.grab_src_morsel_if_necessary(1, None)
    c = d.grab_src_morsel_if_necessary(2, None)
    a.work = False
    b.work = False
    # worker 0 abandons its drained morsel and lands on the one with work
    assert d.grab_src_morsel_if_necessary(0, a) is c
    # with no morsel holding work, a non-current fallback is still returned
    c.work = False
    got = d.grab_src_morsel_if_necessary(0, c)
    assert got in (a, b)


def test_ntkms_launch_consumes_a_full_lane():
    d = _dispatcher("ntkms", k=2, n_sources=130)
    a = d.grab_src_morsel_if_necessary(0, None)
    assert len(a.sources) == 64
    b = d.grab_src_morsel_if_necessary(1, None)
    assert len(b.sources) == 64
    a.work = b.work = False
    a.retired = b.retired = True
    d.on_retire(a)
    d.on_retire(b)
    c = d.grab_src_morsel_if_necessary(0, a)
    assert len(c.sources) == 2
    assert d.ms_lane_counts == [64, 64, 2]
    assert d.launched_sources == list(range(130))


def test_finished_requires_empty_live_and_table():
    d = _dispatcher("nt1s", 1, 1)
    assert not d.finished()
    m = d.grab_src_morsel_if_necessary(0, None)
    assert not d.finished()
    m.retired = True
    d.on_retire(m)
    assert d.finished()
    assert d.retired_count == 1


# -- end-to-end traces through the replay harness ----------------------------


def _replay_events(policy, k, num_sources, workers, mode="lengths"):
    g = generate_random_graph(60, 4.0, seed=11)
    spec = QuerySpec(
        graph=g,
        sources=list(range(num_sources)),
        return_mode=mode,
        policy=policy,
        k=k,
        num_threads=1,
        dense_morsel=16,
        sparse_morsel=8,
        output_morsel=32,
    )
    return replay_policy_single_threaded(spec, workers)


@pytest.mark.parametrize("workers", [1, 2, 4])
def test_ntks_k1_trace_matches_nt1s(workers):
    a = _replay_events("nt1s", None, 6, workers)
    b = _replay_events("ntks", 1, 6, workers)
    assert a == b


def test_1t1s_trace_is_exclusive():
    events = _replay_events("1t1s", None, 5, 3)
    owner = {}
    for ev in events:
        kind, wid, seq = ev[0], ev[1], ev[2]
        if seq is None:
            continue
        owner.setdefault(seq, wid)
        assert owner[seq] == wid, f"morsel {seq} touched by two workers"
    assert len(owner) == 5


def test_sticky_policies_keep_morsels_with_work():
    for policy, k in [("ntks", 4), ("ntkms", 2)]:
        events = _replay_events(policy, k, 8, 3)
        for ev in events:
            if ev[0] != "grab_src":
                continue
            _, wid, new_seq, prev_seq, prev_work = ev
            if prev_work:
                assert new_seq == prev_seq, (policy, ev)


def test_trace_launch_order_is_source_order():
    events = _replay_events("ntks", 2, 7, 2)
    launched = [s for ev in events if ev[0] == "launch" for s in ev[3]]
    assert launched == list(range(7))


def test_boundary_events_carry_next_frontier_size():
    events = _replay_events("nt1s", None, 1, 1)
    boundaries = [ev for ev in events if ev[0] == "boundary"]
    assert boundaries, "expected at least one boundary event"
    # final boundary converges with an empty next frontier
    assert boundaries[-1][3] == "entered_output"
    assert boundaries[-1][4] == 0
    for ev in boundaries[:-1]:
        assert ev[3] == "advanced"
        assert ev[4] > 0
