"""End-to-end checks for the command-line front end.

Each subcommand is driven through main(argv) against temp files; one test
goes through the installed console script to prove the entry point wiring.
"""
import csv
import json
import subprocess
import sys

import pytest

from moldbo.cli import main
from moldbo.engine import RunConfig, read_trace, run, trace_summary, write_trace
from moldbo.graphmold import graph_from_dict
from moldbo.space import MixedSpace, Variable, space_to_json

SUM_CHILD = """\
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    assert req["version"] == 1
    print(json.dumps({"value": float(sum(req["values"]))}), flush=True)
"""


@pytest.fixture
def sum_task(tmp_path):
    child = tmp_path / "child.py"
    child.write_text(SUM_CHILD)
    return f"ext:{sys.executable} {child}"


def write_space(tmp_path, n_discrete=1, n_continuous=2):
    variables = [
        Variable.discrete(f"d{i}", 3) for i in range(n_discrete)
    ] + [
        Variable.continuous(f"x{i}", 0.0, 1.0) for i in range(n_continuous)
    ]
    path = tmp_path / "space.json"
    path.write_text(space_to_json(MixedSpace(variables)))
    return path


class TestOptimize:
    def test_writes_a_trace_and_prints_a_summary(self, tmp_path, capsys):
        out = tmp_path / "trace.jsonl"
        code = main([
            "optimize", "--task", "func2c", "--budget", "2", "--init", "4",
            "--slots", "2", "--centered", "2", "--seed", "3",
            "--out", str(out),
        ])
        assert code == 0
        trace = read_trace(str(out))
        assert len(trace.records) == 4 + 2
        summary = json.loads(capsys.readouterr().out)
        assert summary["mode"] == "gebo"
        assert summary["evaluations"] == 6
        assert summary["best"] == trace.best

    def test_random_search_mode(self, tmp_path):
        out = tmp_path / "rs.jsonl"
        assert main([
            "optimize", "--task", "planted-hub", "--mode", "random-search",
            "--budget", "3", "--init", "2", "--out", str(out),
        ]) == 0
        assert read_trace(str(out)).meta["mode"] == "random-search"

    def test_external_task_round_trip(self, tmp_path, sum_task):
        space = write_space(tmp_path)
        out = tmp_path / "ext.jsonl"
        code = main([
            "optimize", "--task", sum_task, "--mode", "random-search",
            "--budget", "2", "--init", "3", "--space", str(space),
            "--out", str(out),
        ])
        assert code == 0
        trace = read_trace(str(out))
        assert len(trace.records) == 5
        # the child sums its inputs, so every value respects the space bounds
        for record in trace.records:
            assert 0.0 <= record["f"] <= 2.0 + 2.0

    def test_external_task_without_space_exits(self, tmp_path):
        with pytest.raises(SystemExit, match="--space"):
            main([
                "optimize", "--task", "ext:whatever",
                "--out", str(tmp_path / "x.jsonl"),
            ])

    def test_unknown_task_raises(self, tmp_path):
        with pytest.raises(KeyError, match="nope"):
            main(["optimize", "--task", "nope", "--out", str(tmp_path / "x")])

    def test_missing_out_is_an_argparse_error(self):
        with pytest.raises(SystemExit):
            main(["optimize", "--task", "func2c"])


class TestExhaustive:
    def test_writes_the_per_graph_table(self, tmp_path, sum_task):
        space = write_space(tmp_path, n_discrete=1, n_continuous=2)
        out = tmp_path / "study.csv"
        code = main([
            "exhaustive", "--task", sum_task, "--space", str(space),
            "--budget", "1", "--init", "3", "--repeats", "1",
            "--out", str(out),
        ])
        assert code == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        # 3 variables: header, 4 connected graphs, trailing correlation row
        assert len(rows) == 1 + 4 + 1
        assert rows[0][:4] == ["graph", "edges", "mean_best", "std_best"]
        assert rows[-1][0] == "correlation"


class TestAnalyze:
    def test_report_matches_the_trace_summary(self, tmp_path, capsys):
        trace = run(RunConfig(task="planted-hub", budget=2, n_initial=3,
                              seed=1, mode="random-search"))
        trace_path = tmp_path / "trace.jsonl"
        write_trace(trace, str(trace_path))
        report = tmp_path / "report.json"
        assert main([
            "analyze", "--trace", str(trace_path), "--report", str(report),
        ]) == 0
        on_disk = json.loads(report.read_text())
        assert on_disk == trace_summary(trace)
        assert json.loads(capsys.readouterr().out) == on_disk


class TestEnumerate:
    def test_streams_every_connected_graph(self, capsys):
        assert main(["enumerate", "--n", "3"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        graphs = [graph_from_dict(json.loads(line)) for line in lines]
        assert len(graphs) == 4
        assert len({g.edges for g in graphs}) == 4
        assert all(g.n == 3 for g in graphs)

    def test_console_script_is_installed(self):
        proc = subprocess.run(
            ["moldbo", "enumerate", "--n", "2"],
            capture_output=True, text=True, timeout=60,
        )
        assert proc.returncode == 0
        assert len(proc.stdout.strip().splitlines()) == 1
