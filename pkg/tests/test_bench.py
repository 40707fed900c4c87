import csv
import io

import pytest

from ifekit.bench import (
    BenchReport,
    CellResult,
    GridConfig,
    WorkloadSpec,
    emit_level_table,
    emit_speedup_chart,
    generate_sources,
    run_grid,
    verify_result,
)
from ifekit.engine import QuerySpec, QueryStats, run_query
from ifekit.errors import WorkloadError
from ifekit.graph import generate_random_graph, load_edge_list

from conftest import make_path_graph


def test_workload_spec_defaults():
    spec = WorkloadSpec(num_sources=8, seed=1)
    assert spec.min_reach_depth == 3
    assert spec.repetitions == 3
    assert spec.warmup == 1


def test_generate_sources_rejects_shallow_nodes():
    # path 0..6: only nodes 0..3 can expand three more levels
    g = make_path_graph(7)
    table = generate_sources(g, WorkloadSpec(num_sources=4, seed=0))
    assert sorted(table.sources) == [0, 1, 2, 3]


def test_generate_sources_is_seed_deterministic():
    g = generate_random_graph(300, 3.0, seed=8)
    a = generate_sources(g, WorkloadSpec(num_sources=16, seed=42))
    b = generate_sources(g, WorkloadSpec(num_sources=16, seed=42))
    c = generate_sources(g, WorkloadSpec(num_sources=16, seed=43))
    assert a.sources == b.sources
    assert len(set(a.sources)) == 16
    assert a.sources != c.sources  # overwhelmingly likely under a new seed


def test_generate_sources_star_graph_fails():
    # every spoke dead-ends after one hop, the hub after two
    g = load_edge_list("\n".join(f"0 {i}" for i in range(1, 10)))
    with pytest.raises(WorkloadError):
        generate_sources(g, WorkloadSpec(num_sources=3, seed=0))


def _small_grid(verify=True, threads=(1, 2), policies=(("ntks", 2),),
                modes=("lengths",)):
    g = generate_random_graph(120, 3.0, seed=5)
    sources = generate_sources(g, WorkloadSpec(num_sources=4, seed=7)).sources
    return GridConfig(
        graph=g, dataset="rnd120", sources=sources,
        policies=list(policies), threads=list(threads),
        return_modes=list(modes), repetitions=2, warmup=1, verify=verify,
        dense_morsel=32, sparse_morsel=16, output_morsel=64,
    )


def test_run_grid_happy_path():
    report = run_grid(_small_grid())
    assert len(report.cells) == 2
    for c in report.cells:
        assert c.status == "ok"
        assert len(c.warmup_ms) == 1
        assert len(c.rep_ms) == 2
        assert c.mean_ms > 0
        assert c.deviation >= 0
    assert report.failed == []


def test_run_grid_records_cell_errors_and_continues():
    config = _small_grid(verify=False)
    config.sources = [0]
    config.graph = make_path_graph(300)  # depth overflow at the byte cap
    config.policies = [("nt1s", None), ("ntks", 2)]
    config.threads = [1]
    report = run_grid(config)
    assert len(report.cells) == 2
    for c in report.cells:
        assert c.status.startswith("error:")
    assert len(report.failed) == 2


def test_single_morsel_cells_capture_level_columns():
    config = _small_grid(threads=(1,), policies=(("nt1s", None),))
    config.sources = config.sources[:1]
    report = run_grid(config)
    (cell,) = report.cells
    assert cell.level_sizes and cell.level_sizes[0] == 1
    assert len(cell.level_ms) == len(cell.level_sizes)


def test_report_rows_and_csv_round_trip(tmp_path):
    report = run_grid(_small_grid())
    out = tmp_path / "bench.csv"
    report.write_csv(out)
    with open(out, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == BenchReport.CSV_HEADER
    body = rows[1:]
    # one warmup + two reps + one mean row per cell
    assert len(body) == 4 * len(report.cells)
    kinds = [r[5] for r in body]
    assert kinds.count("mean") == len(report.cells)
    for r in body:
        if r[5] == "mean":
            cell = next(c for c in report.cells
                        if c.policy == r[2] and str(c.threads) == str(r[4]))
            assert int(r[9]) == round(cell.mean_ms)
            assert r[11] == f"{cell.deviation:.4f}"


def test_csv_timing_sits_in_trailing_columns(tmp_path):
    # identical seeds, single thread: every column before wall_ms matches
    reports = [run_grid(_small_grid(threads=(1,))) for _ in range(2)]
    frozen = []
    for rep in reports:
        buf = io.StringIO()
        w = csv.writer(buf)
        for row in rep.rows():
            w.writerow(row[:9])
        frozen.append(buf.getvalue())
    assert frozen[0] == frozen[1]


def test_verify_result_flags_wrong_lengths():
    g = generate_random_graph(60, 3.0, seed=2)
    spec = QuerySpec(graph=g, sources=[0])
    result = run_query(spec)
    assert verify_result(g, spec, result) is None
    result.lengths(0)[5] ^= 1
    msg = verify_result(g, spec, result)
    assert msg is not None and "mismatch" in msg


def test_verify_result_checks_path_sets():
    g = generate_random_graph(40, 2.0, seed=3)
    spec = QuerySpec(graph=g, sources=[0, 1], return_mode="paths")
    result = run_query(spec)
    assert verify_result(g, spec, result) is None
    result._paths.pop()
    assert verify_result(g, spec, result) is not None


def test_verify_result_validates_rows_on_large_graphs():
    g = generate_random_graph(200, 3.0, seed=4)
    spec = QuerySpec(graph=g, sources=[0], return_mode="paths",
                     max_paths_per_pair=2)
    result = run_query(spec)
    assert verify_result(g, spec, result) is None
    s, d, seq = result._paths[-1]
    if len(seq) >= 3:
        bad = (s, d, seq[:-2] + (seq[-1],))
        result._paths[-1] = bad
        assert verify_result(g, spec, result) is not None


def _stats_with_levels(levels):
    return QueryStats(levels=[(0, (0,), levels)])


def test_emit_level_table_formats_three_shapes():
    # source-only: the query converged after one level
    t1 = emit_level_table([(1, _stats_with_levels([(0, 1, 0.001)]))])
    assert t1.splitlines()[2].split() == ["0", "1", "1.00"]
    assert t1.splitlines()[3].split() == ["total", "1", "1.00"]

    # three levels, two thread counts
    levels = [(0, 1, 0.001), (1, 5, 0.002), (2, 2, 0.003)]
    faster = [(d, s, ms / 2) for d, s, ms in levels]
    t3 = emit_level_table([(1, _stats_with_levels(levels)),
                           (4, _stats_with_levels(faster))])
    lines = t3.splitlines()
    assert lines[0].split() == ["level", "frontier", "1T", "ms", "4T", "ms"]
    assert lines[2].split() == ["0", "1", "1.00", "0.50"]
    assert lines[5].split() == ["total", "8", "6.00", "3.00"]

    # deep run: one row per level, no elision
    deep = [(d, d + 1, 0.001) for d in range(14)]
    t14 = emit_level_table([(1, _stats_with_levels(deep))])
    assert len(t14.splitlines()) == 2 + 14 + 1


def test_emit_level_table_rejects_bad_input():
    with pytest.raises(ValueError):
        emit_level_table([])
    multi = QueryStats(levels=[(0, (0,), []), (1, (1,), [])])
    with pytest.raises(ValueError):
        emit_level_table([(1, multi)])
    a = _stats_with_levels([(0, 1, 0.001)])
    b = _stats_with_levels([(0, 2, 0.001)])
    with pytest.raises(ValueError):
        emit_level_table([(1, a), (2, b)])


def _chart_report():
    cells = []
    for policy, base in [("ntks", 40.0), ("nt1s", 60.0)]:
        for t, ms in [(1, base), (2, base / 1.8), (4, base / 3.1)]:
            c = CellResult("d", "lengths", policy, 1, t)
            c.rep_ms = [ms, ms]
            c.utilizations = [0.9, 0.9]
            cells.append(c)
    return BenchReport(cells)


def test_emit_speedup_chart_is_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_speedup_chart(_chart_report(), p1)
    emit_speedup_chart(_chart_report(), p2)
    b1, b2 = p1.read_bytes(), p2.read_bytes()
    assert b1 == b2
    text = b1.decode()
    assert text.startswith("<svg ")
    assert text.count("<polyline") == 2
    assert "ntks k=1 lengths" in text and "nt1s k=1 lengths" in text


def test_emit_speedup_chart_skips_broken_series(tmp_path):
    report = _chart_report()
    # a series without a 1-thread baseline cannot be normalized
    c = CellResult("d", "lengths", "ntkms", 2, 4)
    c.rep_ms = [5.0]
    report.add(c)
    emit_speedup_chart(report, tmp_path / "c.svg")
    assert "ntkms" not in (tmp_path / "c.svg").read_text()


def test_emit_speedup_chart_refuses_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_speedup_chart(BenchReport(), tmp_path / "x.svg")
    only4 = BenchReport()
    c = CellResult("d", "lengths", "ntks", 1, 4)
    c.rep_ms = [5.0]
    only4.add(c)
    with pytest.raises(ValueError):
        emit_speedup_chart(only4, tmp_path / "y.svg")
