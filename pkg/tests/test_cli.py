import csv

import pytest

from ifekit.cli import build_parser, main
from ifekit.graph import generate_random_graph, save_snapshot


@pytest.fixture
def edge_file(tmp_path):
    p = tmp_path / "g.txt"
    lines = ["# tiny mesh"]
    lines += [f"{u} {v}" for u in range(20) for v in (u + 1, u + 2) if v < 20]
    p.write_text("\n".join(lines) + "\n")
    return str(p)


def test_parser_defaults():
    args = build_parser().parse_args(["--random", "50:2:0"])
    assert args.policy == "ntks"
    assert args.threads == "1"
    assert args.sources == 1
    assert args.return_mode == "lengths"
    assert args.reps == 3 and args.warmup == 1


def test_happy_path_random_graph(capsys):
    rc = main(["--random", "200:3:1", "--sources", "2", "--policy", "ntks",
               "--k", "2", "--threads", "1,2", "--reps", "1", "--verify"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "dataset=random:200:3:1" in out
    assert out.count("status=ok") == 2


def test_edge_list_and_source_file(edge_file, tmp_path, capsys):
    srcs = tmp_path / "sources.txt"
    srcs.write_text("# picked by hand\n0\n3\n")
    rc = main(["--graph", edge_file, "--source-file", str(srcs),
               "--reps", "1", "--warmup", "0", "--verify"])
    assert rc == 0
    assert "sources=2" in capsys.readouterr().out


def test_snapshot_input(tmp_path, capsys):
    g = generate_random_graph(80, 3.0, seed=2)
    snap = tmp_path / "graph.bin"
    save_snapshot(g, snap)
    rc = main(["--graph", str(snap), "--reps", "1", "--verify"])
    assert rc == 0
    assert "nodes=80" in capsys.readouterr().out


def test_csv_and_svg_outputs(tmp_path, capsys):
    out_csv = tmp_path / "r.csv"
    out_svg = tmp_path / "r.svg"
    rc = main(["--random", "150:3:0", "--threads", "1,2", "--reps", "1",
               "--csv", str(out_csv), "--svg", str(out_svg)])
    assert rc == 0
    with open(out_csv, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0][0] == "dataset"
    assert len(rows) > 1
    assert out_svg.read_text().startswith("<svg ")


def test_level_table_output(capsys):
    rc = main(["--random", "150:3:0", "--sources", "1", "--threads", "1,2",
               "--reps", "1", "--level-table"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "per-level times, policy=ntks k=32:" in out
    assert "level" in out and "frontier" in out and "total" in out


def test_paths_mode_with_destinations(tmp_path, capsys):
    dests = tmp_path / "dests.txt"
    dests.write_text("1\n2\n")
    rc = main(["--random", "40:2:3", "--sources", "2", "--return", "paths",
               "--dest-file", str(dests), "--reps", "1", "--verify"])
    assert rc == 0


def test_multiple_policies_cross_ks(capsys):
    rc = main(["--random", "100:3:0", "--policy", "ntks,ntkms", "--k", "1,2",
               "--reps", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("status=ok") == 4


@pytest.mark.parametrize("argv", [
    ["--random", "bad"],
    ["--random", "10:x:0"],
    ["--random", "50:2:0", "--policy", "fifo"],
    ["--random", "50:2:0", "--threads", "0"],
    ["--random", "50:2:0", "--threads", "two"],
    ["--random", "50:2:0", "--sources", "0"],
    ["--random", "50:2:0", "--reps", "0"],
    ["--random", "50:2:0", "--level-table", "--sources", "2"],
    ["--random", "50:2:0", "--level-table", "--return", "paths"],
    ["--random", "50:2:0", "--frontier-morsel", "0"],
    ["--graph", "/nonexistent/graph.txt"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "ifebench:" in capsys.readouterr().err


def test_missing_graph_flag_exits_2(capsys):
    assert main([]) == 2


def test_source_file_out_of_range(tmp_path, edge_file, capsys):
    srcs = tmp_path / "s.txt"
    srcs.write_text("99\n")
    assert main(["--graph", edge_file, "--source-file", str(srcs)]) == 2


def test_failed_cell_exits_1(tmp_path, capsys):
    # a 300-node path overflows the 1-byte depth budget
    p = tmp_path / "long.txt"
    p.write_text("\n".join(f"{i} {i + 1}" for i in range(299)) + "\n")
    srcs = tmp_path / "s.txt"
    srcs.write_text("0\n")
    rc = main(["--graph", str(p), "--source-file", str(srcs), "--reps", "1",
               "--warmup", "0"])
    assert rc == 1
    assert "status=error:" in capsys.readouterr().out


def test_backend_flag(capsys):
    rc = main(["--random", "60:2:0", "--reps", "1", "--backend", "numpy",
               "--verify"])
    assert rc == 0
    assert "backend=numpy" in capsys.readouterr().out
