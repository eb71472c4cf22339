"""End-to-end engine tests: trace accounting, determinism, the single-slot
reduction, replacement policy, the exhaustive study, and file round trips."""

import json

import numpy as np
import pytest

from moldbo.bench import Task
from moldbo.engine import (
    BadConfigError,
    EngineError,
    RunConfig,
    Trace,
    read_trace,
    run,
    run_exhaustive,
    run_gebo,
    run_prior_graph,
    run_random_search,
    trace_summary,
    write_exhaustive_csv,
    write_trace,
)
from moldbo.graphmold import (
    MoldedGraph,
    TooLargeError,
    enumerate_connected_graphs,
    graph_from_dict,
    pagerank,
    pearson,
)
from moldbo.space import MixedSpace, Variable


def corner_toy() -> Task:
    """Concave two-variable toy maximized at the top corner (2, 1.0)."""
    space = MixedSpace(
        [Variable.discrete("d", 3), Variable.continuous("x", 0.0, 1.0)]
    )
    return Task(
        name="corner_toy",
        space=space,
        objective=lambda values: values[0] / 2.0 + values[1],
        known_best=2.0,
    )


def flat_toy(dim: int) -> Task:
    """Constant objective; nothing ever improves after the first point."""
    variables = [
        Variable.discrete(f"v{i}", 3) if i % 2 else Variable.continuous(f"v{i}", 0.0, 1.0)
        for i in range(dim)
    ]
    return Task(
        name=f"flat{dim}", space=MixedSpace(variables), objective=lambda values: 0.0
    )


def ridge_toy(dim: int = 3) -> Task:
    """Small continuous task used by the exhaustive study tests."""
    variables = [Variable.continuous(f"x{i}", 0.0, 1.0) for i in range(dim)]
    weights = [1.0 + 0.5 * i for i in range(dim)]
    return Task(
        name=f"ridge{dim}",
        space=MixedSpace(variables),
        objective=lambda values: sum(w * v for w, v in zip(weights, values)),
    )


def tiny(task, **overrides) -> RunConfig:
    defaults = dict(
        task=task, budget=4, seed=0, n_slots=3, n_centered=2, n_initial=6
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


class TestRunConfig:
    def test_defaults_match_the_documented_setting(self):
        cfg = RunConfig()
        assert cfg.budget == 100
        assert cfg.n_slots == 5
        assert cfg.n_centered == 3
        assert cfg.n_initial == 40
        assert cfg.latent_dim == 4
        assert cfg.kappa == 2.0
        assert cfg.failure_threshold == 5
        assert cfg.mode == "gebo"

    @pytest.mark.parametrize(
        "overrides",
        [
            {"budget": -1},
            {"n_slots": 0},
            {"n_centered": 0},
            {"n_initial": 1},
            {"mode": "annealing"},
            {"failure_threshold": 0},
            {"ba_threshold": 0},
            {"repeats": 0},
        ],
    )
    def test_rejects_invalid_settings(self, overrides):
        with pytest.raises(BadConfigError):
            RunConfig(**overrides).validated()

    def test_zero_budget_is_allowed(self):
        RunConfig(budget=0).validated()


class TestPriorGraph:
    def test_zero_budget_keeps_only_the_initial_design(self):
        """With no suggestion budget the trace is the initial design and the
        incumbent is its best point."""
        trace = run_prior_graph(tiny(corner_toy(), budget=0))
        assert trace.n_evaluations == 6
        assert all(r["phase"] == "init" for r in trace.records)
        assert trace.best == max(r["f"] for r in trace.records)

    def test_evaluation_count_is_initial_plus_budget(self):
        trace = run_prior_graph(tiny(corner_toy()))
        assert trace.n_evaluations == 6 + 4
        phases = [r["phase"] for r in trace.records]
        assert phases == ["init"] * 6 + ["suggest"] * 4

    def test_same_seed_reproduces_the_trace_bytes(self):
        cfg = tiny(corner_toy(), seed=11)
        a = run_prior_graph(cfg)
        b = run_prior_graph(cfg)
        assert a.canonical_bytes() == b.canonical_bytes()

    def test_different_seeds_diverge(self):
        a = run_prior_graph(tiny(corner_toy(), seed=1))
        b = run_prior_graph(tiny(corner_toy(), seed=2))
        assert a.canonical_bytes() != b.canonical_bytes()

    def test_incumbent_never_decreases(self):
        trace = run_prior_graph(tiny(corner_toy(), budget=8, seed=5))
        incumbents = [r["incumbent"] for r in trace.records]
        assert all(a <= b for a, b in zip(incumbents, incumbents[1:]))
        running = -np.inf
        for r in trace.records:
            running = max(running, r["f"])
            assert r["incumbent"] == running

    def test_rejects_mismatched_or_disconnected_graphs(self):
        with pytest.raises(BadConfigError):
            run_prior_graph(tiny(corner_toy()), MoldedGraph(3, ((0, 1), (1, 2))))
        with pytest.raises(BadConfigError):
            run_prior_graph(tiny(ridge_toy(3)), MoldedGraph(3, ((0, 1),)))

    def test_suggestion_timings_cover_the_phases(self):
        """Each suggestion logs its phase breakdown, and the parts account
        for the reported total up to measurement noise."""
        trace = run_prior_graph(tiny(corner_toy(), budget=3))
        suggests = [r for r in trace.records if r["phase"] == "suggest"]
        assert suggests
        for r in suggests:
            timings = r["timings"]
            for key in ("encode", "fit", "acquire", "decode", "evaluate", "train", "total"):
                assert key in timings and timings[key] >= 0.0
            parts = sum(v for k, v in timings.items() if k != "total")
            assert parts <= timings["total"] + 1e-4
            assert timings["total"] - parts < 0.05

    def test_concave_toy_reaches_the_grid_optimum(self):
        """Thirty suggestions land the median of ten seeds within 5% of the
        dense-grid optimum of the corner toy."""
        task = corner_toy()
        grid_best = max(
            task([d, x])
            for d in range(3)
            for x in np.linspace(0.0, 1.0, 10_001)
        )
        np.testing.assert_allclose(grid_best, 2.0)
        finals = []
        for seed in range(10):
            cfg = RunConfig(task=task, budget=30, seed=seed, mode="prior-graph")
            finals.append(run_prior_graph(cfg).best)
        median = float(np.median(finals))
        assert abs(grid_best - median) <= 0.05 * grid_best, finals


class TestGebo:
    def test_same_seed_reproduces_the_trace_bytes(self):
        cfg = tiny(corner_toy(), seed=3, budget=6)
        a = run_gebo(cfg)
        b = run_gebo(cfg)
        assert a.canonical_bytes() == b.canonical_bytes()

    def test_evaluation_count_is_initial_plus_budget(self):
        trace = run_gebo(tiny(corner_toy(), seed=2))
        assert trace.n_evaluations == 6 + 4
        assert sum(r["phase"] == "suggest" for r in trace.records) == 4

    def test_incumbent_never_decreases(self):
        trace = run_gebo(tiny(corner_toy(), seed=9, budget=8))
        incumbents = [r["incumbent"] for r in trace.records]
        assert all(a <= b for a, b in zip(incumbents, incumbents[1:]))

    def test_records_carry_the_learning_state(self):
        """Suggestion records expose the selected slot, its centered nodes,
        the latent, the normalized reward, both agents' state, and timing."""
        cfg = tiny(corner_toy(), seed=4, budget=5, n_slots=3, n_centered=2)
        trace = run_gebo(cfg)
        for r in trace.records:
            if r["phase"] != "suggest":
                continue
            assert 0 <= r["slot"] < 3
            assert r["centered"] and all(0 <= v < 2 for v in r["centered"])
            assert len(r["z"]) == 4
            assert 0.0 <= r["reward"] <= 1.0
            assert len(r["graph_probs"]) == 3
            np.testing.assert_allclose(sum(r["graph_probs"]), 1.0, rtol=1e-9)
            assert len(r["node_probs"]) == 2
            np.testing.assert_allclose(sum(r["node_probs"]), 1.0, rtol=1e-9)
            assert isinstance(r["replaced"], list)
            slots = r["bandit"]["slots"]
            assert len(slots) == 3
            graph = graph_from_dict(slots[r["slot"]]["graph"])
            assert graph.n == 2

    def test_replacements_wait_for_the_failure_threshold(self):
        """On a flat objective nothing improves, so every slot is replaced
        exactly when its consecutive selected-failure count hits the
        threshold, and only the slot selected that iteration is replaced."""
        cfg = tiny(
            flat_toy(4), seed=6, budget=14, n_slots=3, failure_threshold=2
        )
        trace = run_gebo(cfg)
        streaks = {s: 0 for s in range(3)}
        replacements = 0
        for r in trace.records:
            if r["phase"] != "suggest":
                continue
            slot = r["slot"]
            streaks[slot] = 0 if r["improved"] else streaks[slot] + 1
            if r["replaced"]:
                replacements += 1
                assert r["replaced"] == [slot]
                assert streaks[slot] >= 2
                streaks[slot] = 0
        assert replacements >= 2
        assert trace_summary(trace)["replacements"] == replacements

    def test_single_slot_forced_selection_matches_the_fixed_graph_run(self):
        """One slot with every node centered reduces to the fixed-graph
        loop: the proposals, values, and latents coincide step for step."""
        cfg = tiny(
            corner_toy(),
            seed=8,
            budget=5,
            n_slots=1,
            n_centered=2,
            failure_threshold=10_000,
        )
        gebo_trace = run_gebo(cfg)
        suggests = [r for r in gebo_trace.records if r["phase"] == "suggest"]
        assert all(r["graph_probs"] == [1.0] for r in suggests)
        assert all(r["slot"] == 0 for r in suggests)

        graph = graph_from_dict(suggests[0]["bandit"]["slots"][0]["graph"])
        prior_trace = run_prior_graph(cfg, graph)
        prior_suggests = [
            r for r in prior_trace.records if r["phase"] == "suggest"
        ]
        assert [r["x"] for r in suggests] == [r["x"] for r in prior_suggests]
        assert [r["f"] for r in suggests] == [r["f"] for r in prior_suggests]
        assert [r["z"] for r in suggests] == [r["z"] for r in prior_suggests]


class TestRandomSearch:
    def test_trace_length_and_phases(self):
        trace = run_random_search(tiny(corner_toy(), budget=7))
        assert trace.n_evaluations == 6 + 7
        assert sum(r["phase"] == "suggest" for r in trace.records) == 7

    def test_same_seed_reproduces_the_trace_bytes(self):
        cfg = tiny(corner_toy(), seed=13, budget=9)
        assert (
            run_random_search(cfg).canonical_bytes()
            == run_random_search(cfg).canonical_bytes()
        )

    def test_incumbent_never_decreases(self):
        trace = run_random_search(tiny(corner_toy(), seed=21, budget=20))
        incumbents = [r["incumbent"] for r in trace.records]
        assert all(a <= b for a, b in zip(incumbents, incumbents[1:]))


class TestTimeBudget:
    def test_expired_clock_stops_the_suggestion_loop(self):
        """A spent time budget still evaluates the initial design but adds
        no suggestions, in every trace-producing mode."""
        for runner in (run_prior_graph, run_gebo, run_random_search):
            trace = runner(tiny(corner_toy(), budget=50, time_budget=1e-9))
            assert trace.n_evaluations == 6, runner.__name__
            assert all(r["phase"] == "init" for r in trace.records)


class TestDispatch:
    def test_run_routes_on_mode(self):
        task = corner_toy()
        trace = run(tiny(task, mode="random-search", budget=2))
        assert trace.meta["mode"] == "random-search"
        trace = run(tiny(task, mode="prior-graph", budget=0))
        assert trace.meta["mode"] == "prior-graph"
        result = run(
            tiny(ridge_toy(3), mode="exhaustive", budget=1, n_initial=4, repeats=1)
        )
        assert result.n_graphs == 4


class TestTraceFiles:
    def test_write_read_round_trip(self, tmp_path):
        trace = run_random_search(tiny(corner_toy(), budget=3))
        path = tmp_path / "trace.jsonl"
        write_trace(trace, str(path))
        loaded = read_trace(str(path))
        assert loaded.meta == trace.meta
        assert loaded.records == trace.records
        assert loaded.canonical_bytes() == trace.canonical_bytes()

    def test_first_line_carries_the_metadata(self, tmp_path):
        trace = run_random_search(tiny(corner_toy(), budget=1))
        path = tmp_path / "trace.jsonl"
        write_trace(trace, str(path))
        first = json.loads(path.read_text().splitlines()[0])
        assert first == {"meta": trace.meta}

    def test_reading_a_non_trace_file_fails(self, tmp_path):
        path = tmp_path / "junk.jsonl"
        path.write_text('{"f": 1.0}\n')
        with pytest.raises(EngineError):
            read_trace(str(path))

    def test_canonical_bytes_ignore_only_timings(self):
        """Two traces that differ solely in wall-clock timings are canonically
        equal; any payload difference shows up."""
        trace = run_prior_graph(tiny(corner_toy(), budget=2))
        clone = Trace(meta=dict(trace.meta), records=[dict(r) for r in trace.records])
        for r in clone.records:
            if "timings" in r:
                r["timings"] = {k: 0.123456 for k in r["timings"]}
        assert clone.canonical_bytes() == trace.canonical_bytes()
        clone.records[-1]["f"] += 1e-9
        assert clone.canonical_bytes() != trace.canonical_bytes()

    def test_summary_reports_the_run_shape(self):
        trace = run_gebo(tiny(corner_toy(), seed=17, budget=5))
        summary = trace_summary(trace)
        assert summary["task"] == "corner_toy"
        assert summary["mode"] == "gebo"
        assert summary["seed"] == 17
        assert summary["evaluations"] == 11
        assert summary["best"] == trace.best
        assert summary["best_x"] == trace.best_values
        assert set(summary["iteration_seconds"]) == {"p50", "p90", "p99"}
        assert summary["replacements"] >= 0


class TestExhaustive:
    def small_cfg(self, task, **overrides):
        defaults = dict(
            task=task,
            budget=1,
            seed=0,
            n_initial=4,
            repeats=2,
            mode="exhaustive",
        )
        defaults.update(overrides)
        return RunConfig(**defaults)

    def test_three_variables_give_four_connected_graphs(self):
        result = run_exhaustive(self.small_cfg(ridge_toy(3)))
        assert result.n_graphs == 4
        assert result.mean_best.shape == (4,)
        assert result.std_best.shape == (4,)
        assert result.node_pagerank.shape == (4, 3)
        assert result.node_correlation.shape == (3,)

    def test_repeated_study_is_reproducible(self):
        cfg = self.small_cfg(ridge_toy(3))
        a = run_exhaustive(cfg)
        b = run_exhaustive(cfg)
        np.testing.assert_array_equal(a.mean_best, b.mean_best)
        np.testing.assert_array_equal(a.std_best, b.std_best)
        np.testing.assert_array_equal(a.node_correlation, b.node_correlation)

    def test_too_many_variables_rejected(self):
        with pytest.raises(TooLargeError):
            run_exhaustive(self.small_cfg(ridge_toy(6)))

    def test_relabeling_permutes_the_analysis(self):
        """Renaming the variables permutes the per-node correlations: a task
        whose privileged nodes move from (0, 1) to their images under the
        permutation yields the same correlation vector, permuted."""
        graphs = list(enumerate_connected_graphs(3))
        perm = [2, 0, 1]

        def relabel(graph):
            edges = tuple(
                tuple(sorted((perm[i], perm[j]))) for i, j in graph.edges
            )
            return MoldedGraph(3, edges)

        assert {relabel(g).edges for g in graphs} == {g.edges for g in graphs}

        def score(graph, first_hub, second_hub):
            pr = pagerank(graph)
            return float(pr[first_hub] + 2.0 * pr[second_hub])

        scores_a = np.array([score(g, 0, 1) for g in graphs])
        scores_b = np.array([score(g, perm[0], perm[1]) for g in graphs])
        ranks = np.array([pagerank(g) for g in graphs])
        r_a = [pearson(ranks[:, v], scores_a) for v in range(3)]
        r_b = [pearson(ranks[:, v], scores_b) for v in range(3)]
        np.testing.assert_allclose(
            [r_b[perm[v]] for v in range(3)], r_a, rtol=1e-9
        )

    def test_csv_table_shape(self, tmp_path):
        result = run_exhaustive(self.small_cfg(ridge_toy(3), repeats=1))
        path = tmp_path / "table.csv"
        write_exhaustive_csv(result, str(path))
        rows = [line.split(",") for line in path.read_text().splitlines()]
        assert rows[0] == [
            "graph", "edges", "mean_best", "std_best",
            "pagerank_0", "pagerank_1", "pagerank_2",
        ]
        assert len(rows) == 1 + 4 + 1
        assert rows[-1][0] == "correlation"
        for gi, row in enumerate(rows[1:5]):
            assert int(row[0]) == gi
            assert row[1]
            np.testing.assert_allclose(float(row[2]), result.mean_best[gi])
