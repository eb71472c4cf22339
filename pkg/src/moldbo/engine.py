"""Run orchestration: fixed-graph optimization, the full graph-learning
optimizer, random search, and the exhaustive per-graph study.

Owns seeding, timing, and trace emission.  A run is single-threaded; the
six RNG streams (initial design, bandit, model init, training noise, GP
restarts, acquisition starts) are spawned from the run seed in a fixed
order so that a (seed, config) pair fully determines the trace.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import bandit as bd
from . import gpbo
from . import neural
from .bench import Task, get_task
from .graphmold import (
    MoldedGraph,
    TooLargeError,
    ba_biased,
    complete_graph,
    enumerate_connected_graphs,
    graph_to_dict,
    is_connected,
    pagerank,
    pearson,
)
from .space import sample_uniform, validate_space

MODES = ("gebo", "prior-graph", "random-search", "exhaustive")
EXHAUSTIVE_MAX_DIM = 5


class EngineError(RuntimeError):
    """Base class for orchestration failures."""


class BadConfigError(EngineError):
    """Run configuration violates an invariant."""


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run besides the objective's own noise.

    ``task`` is a registry id or a Task object.  ``budget`` counts
    suggestion iterations on top of ``n_initial`` uniform design points.
    ``graph_gamma``/``node_gamma`` default to the horizon-tuned mixing
    rate when unset.  ``time_budget`` optionally stops the suggestion
    loop once the elapsed wall-clock exceeds it.
    """

    task: str | Task = "func2c"
    budget: int = 100
    seed: int = 0
    n_slots: int = 5
    n_centered: int = 3
    n_initial: int = 40
    latent_dim: int = 4
    kappa: float = 2.0
    graph_gamma: float | None = None
    node_gamma: float | None = None
    failure_threshold: int = 5
    ba_threshold: int = 2
    mode: str = "gebo"
    warmup_epochs: int = 5
    retrain_epochs: int = 1
    gp_restarts: int = 2
    time_budget: float | None = None
    repeats: int = 10

    def validated(self) -> "RunConfig":
        if self.budget < 0:
            raise BadConfigError("budget must be >= 0")
        if self.n_slots < 1 or self.n_centered < 1:
            raise BadConfigError("need at least one slot and one centered draw")
        if self.n_initial < 2:
            raise BadConfigError("need at least two initial points")
        if self.mode not in MODES:
            raise BadConfigError(f"mode must be one of {MODES}")
        if self.failure_threshold < 1 or self.ba_threshold < 1:
            raise BadConfigError("thresholds must be >= 1")
        if self.repeats < 1:
            raise BadConfigError("repeats must be >= 1")
        return self


@dataclass
class Trace:
    """One record per objective evaluation plus run-level metadata."""

    meta: dict
    records: list[dict] = field(default_factory=list)

    @property
    def best(self) -> float:
        return self.records[-1]["incumbent"] if self.records else float("nan")

    @property
    def best_values(self):
        best = max(self.records, key=lambda r: r["f"])
        return best["x"]

    @property
    def n_evaluations(self) -> int:
        return len(self.records)

    def canonical_bytes(self) -> bytes:
        """Serialized records with wall-clock timings stripped.

        This is the determinism surface: two runs with the same seed and
        config must agree on it byte for byte.
        """
        lines = []
        for record in self.records:
            slim = {k: v for k, v in record.items() if k != "timings"}
            lines.append(
                json.dumps(slim, sort_keys=True, separators=(",", ":"))
            )
        return ("\n".join(lines) + "\n").encode()


def trace_summary(trace: Trace) -> dict:
    """Final incumbent, evaluation count, and suggestion-timing percentiles."""
    totals = [
        r["timings"]["total"]
        for r in trace.records
        if r.get("timings") and r["phase"] == "suggest"
    ]
    percentiles = {}
    if totals:
        p50, p90, p99 = np.percentile(totals, [50, 90, 99])
        percentiles = {"p50": float(p50), "p90": float(p90), "p99": float(p99)}
    replacements = sum(len(r.get("replaced") or ()) for r in trace.records)
    return {
        "task": trace.meta.get("task"),
        "mode": trace.meta.get("mode"),
        "seed": trace.meta.get("seed"),
        "evaluations": trace.n_evaluations,
        "best": trace.best,
        "best_x": trace.best_values if trace.records else None,
        "replacements": replacements,
        "iteration_seconds": percentiles,
    }


def write_trace(trace: Trace, path: str) -> None:
    """Line-delimited records; the first line carries the metadata."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"meta": trace.meta}, sort_keys=True) + "\n")
        for record in trace.records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_trace(path: str) -> Trace:
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or "meta" not in lines[0]:
        raise EngineError(f"{path} is not a trace file")
    return Trace(meta=lines[0]["meta"], records=lines[1:])


def _json_values(values) -> list:
    return [v if isinstance(v, int) else float(v) for v in values]


def _streams(seed: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(6)]


class _Run:
    """Shared bookkeeping for one run: observations, incumbent, trace."""

    def __init__(self, cfg: RunConfig, task: Task, mode: str):
        self.cfg = cfg
        self.task = task
        self.space = task.space
        self.configs: list[tuple] = []
        self.f_values: list[float] = []
        self.incumbent = -np.inf
        self.trace = Trace(
            meta={
                "task": task.name,
                "mode": mode,
                "seed": cfg.seed,
                "budget": cfg.budget,
                "n_initial": cfg.n_initial,
                "n_slots": cfg.n_slots,
                "n_centered": cfg.n_centered,
            }
        )
        self.started = time.perf_counter()

    def observe(self, values, f: float) -> bool:
        improved = f > self.incumbent
        self.configs.append(values)
        self.f_values.append(f)
        if improved:
            self.incumbent = f
        return improved

    def record(self, phase: str, values, f: float, improved: bool, **extra):
        entry = {
            "t": len(self.trace.records),
            "phase": phase,
            "x": _json_values(values),
            "f": f,
            "incumbent": self.incumbent,
            "improved": improved,
        }
        entry.update(extra)
        self.trace.records.append(entry)

    def initial_design(self, rng: np.random.Generator) -> None:
        for _ in range(self.cfg.n_initial):
            values = sample_uniform(self.space, rng)
            improved = self.observe(values, self.task(values))
            self.record("init", values, self.f_values[-1], improved)

    def out_of_time(self) -> bool:
        budget = self.cfg.time_budget
        return budget is not None and time.perf_counter() - self.started > budget


def _incumbent_latents(mu: np.ndarray, f_values, limit: int = 2) -> np.ndarray:
    order = np.argsort(f_values)[::-1][:limit]
    return mu[order]


def _suggest(model, slot, adj, run: _Run, prev_params, rng_gp, rng_acq):
    """Encode, fit, acquire, decode; returns the proposal and timings."""
    cfg = run.cfg
    timings = {}

    tic = time.perf_counter()
    features = neural.stack_features(run.space, run.configs)
    mu = neural.encode_mu(model, slot, adj, features)
    timings["encode"] = time.perf_counter() - tic

    tic = time.perf_counter()
    state = gpbo.fit(
        mu, run.f_values, restarts=cfg.gp_restarts, rng=rng_gp, previous=prev_params
    )
    timings["fit"] = time.perf_counter() - tic

    tic = time.perf_counter()
    box = gpbo.latent_box(mu)
    z_star = gpbo.optimize_acquisition(
        state,
        box,
        cfg.kappa,
        rng_acq,
        incumbents=_incumbent_latents(mu, run.f_values),
    )
    timings["acquire"] = time.perf_counter() - tic

    tic = time.perf_counter()
    values, _ = neural.decode(model, z_star)
    timings["decode"] = time.perf_counter() - tic
    return values, z_star, state, timings


def _retrain(model, slot, adj, run: _Run, rng_train) -> None:
    batch = neural.make_train_batch(run.space, run.configs, run.f_values)
    neural.train(model, slot, batch, adj, run.cfg.retrain_epochs, rng_train)


def run_prior_graph(cfg: RunConfig, graph: MoldedGraph | None = None) -> Trace:
    """Optimize through a single fixed interaction graph.

    Warm-up trains the model on the initial design, then loops encode,
    GP fit, acquisition, decode, evaluate, retrain.  The default graph is
    the complete graph on all variables.
    """
    cfg = cfg.validated()
    task = get_task(cfg.task)
    validate_space(task.space)
    dim = task.space.dim
    if graph is None:
        graph = complete_graph(dim)
    if graph.n != dim:
        raise BadConfigError("graph node count must equal the variable count")
    if not is_connected(graph.n, graph.edges):
        raise BadConfigError("prior graph must be connected")

    rng_init, _, rng_model, rng_train, rng_gp, rng_acq = _streams(cfg.seed)
    run = _Run(cfg, task, "prior-graph")
    run.trace.meta["graph"] = graph_to_dict(graph)
    run.initial_design(rng_init)

    model = neural.VgaeModel(
        task.space, 1, rng_model, neural.ModelConfig(latent_dim=cfg.latent_dim)
    )
    adj = neural.normalized_adjacency(graph)
    batch = neural.make_train_batch(task.space, run.configs, run.f_values)
    neural.warmup(model, batch, [adj], cfg.warmup_epochs, rng_train)

    prev_params = None
    for _ in range(cfg.budget):
        if run.out_of_time():
            break
        tic = time.perf_counter()
        values, z_star, state, timings = _suggest(
            model, 0, adj, run, prev_params, rng_gp, rng_acq
        )
        prev_params = state.params

        t_eval = time.perf_counter()
        f_new = task(values)
        timings["evaluate"] = time.perf_counter() - t_eval
        improved = run.observe(values, f_new)

        t_train = time.perf_counter()
        _retrain(model, 0, adj, run, rng_train)
        timings["train"] = time.perf_counter() - t_train
        timings["total"] = time.perf_counter() - tic

        run.record(
            "suggest",
            values,
            f_new,
            improved,
            z=[float(v) for v in z_star],
            timings={k: round(v, 6) for k, v in timings.items()},
        )
    return run.trace


def run_gebo(cfg: RunConfig) -> Trace:
    """Full optimizer: nested bandits over candidate graphs plus per-slot
    encoders sharing one decoder.

    Per iteration: select a slot, suggest through its encoder, evaluate,
    min-max normalize the reward over history, cascade the update through
    both agents, retrain the selected slot, then replace slots whose
    selected-and-not-improved streak reached the failure threshold.
    """
    cfg = cfg.validated()
    task = get_task(cfg.task)
    validate_space(task.space)
    dim = task.space.dim

    rng_init, rng_bandit, rng_model, rng_train, rng_gp, rng_acq = _streams(cfg.seed)
    run = _Run(cfg, task, "gebo")
    run.initial_design(rng_init)

    node_gamma = (
        cfg.node_gamma
        if cfg.node_gamma is not None
        else bd.tuned_gamma(dim, cfg.budget)
    )
    graph_gamma = (
        cfg.graph_gamma
        if cfg.graph_gamma is not None
        else bd.tuned_gamma(cfg.n_slots, cfg.budget)
    )
    state = bd.NestedBanditState(
        node_agent=bd.Exp3Agent.uniform(dim, node_gamma),
        graph_agent=bd.Exp3Agent.uniform(cfg.n_slots, graph_gamma),
        slots=[],
    )
    for _ in range(cfg.n_slots):
        centered = bd.sample_centered_nodes(state, cfg.n_centered, rng_bandit)
        graph = ba_biased(dim, centered, rng_bandit, threshold=cfg.ba_threshold)
        state.slots.append(bd.Slot(graph=graph, centered=centered))

    model = neural.VgaeModel(
        task.space, cfg.n_slots, rng_model, neural.ModelConfig(latent_dim=cfg.latent_dim)
    )
    adjs = [neural.normalized_adjacency(s.graph) for s in state.slots]
    batch = neural.make_train_batch(task.space, run.configs, run.f_values)
    neural.warmup(model, batch, adjs, cfg.warmup_epochs, rng_train)

    prev_params: list = [None] * cfg.n_slots

    def regenerate():
        centered = bd.sample_centered_nodes(state, cfg.n_centered, rng_bandit)
        graph = ba_biased(dim, centered, rng_bandit, threshold=cfg.ba_threshold)
        return graph, centered

    for _ in range(cfg.budget):
        if run.out_of_time():
            break
        tic = time.perf_counter()
        slot, probs = bd.select_graph(state, rng_bandit)
        values, z_star, gp_state, timings = _suggest(
            model, slot, adjs[slot], run, prev_params[slot], rng_gp, rng_acq
        )
        prev_params[slot] = gp_state.params

        t_eval = time.perf_counter()
        f_new = task(values)
        timings["evaluate"] = time.perf_counter() - t_eval

        reward = bd.normalize_reward(run.f_values, f_new)
        improved = run.observe(values, f_new)
        centered = state.slots[slot].centered
        bd.update_rewards(
            state,
            bd.RewardRecord(
                raw_value=f_new, reward=reward, slot=slot, centered=centered
            ),
        )

        t_train = time.perf_counter()
        _retrain(model, slot, adjs[slot], run, rng_train)
        timings["train"] = time.perf_counter() - t_train

        replaced = bd.maybe_replace(
            state, improved, regenerate, threshold=cfg.failure_threshold
        )
        for j in replaced:
            model.reinit_slot(j, rng_model)
            adjs[j] = neural.normalized_adjacency(state.slots[j].graph)
            prev_params[j] = None
        timings["total"] = time.perf_counter() - tic

        run.record(
            "suggest",
            values,
            f_new,
            improved,
            slot=slot,
            centered=list(centered),
            z=[float(v) for v in z_star],
            reward=reward,
            graph_probs=[float(p) for p in probs],
            node_probs=[
                float(p) for p in bd.exp3_probabilities(state.node_agent)
            ],
            replaced=replaced,
            bandit=bd.state_to_dict(state),
            timings={k: round(v, 6) for k, v in timings.items()},
        )
    return run.trace


def run_random_search(cfg: RunConfig) -> Trace:
    """Uniform sampling baseline with the same evaluation accounting."""
    cfg = cfg.validated()
    task = get_task(cfg.task)
    validate_space(task.space)

    rng_init, _, _, _, _, rng_acq = _streams(cfg.seed)
    run = _Run(cfg, task, "random-search")
    run.initial_design(rng_init)
    for _ in range(cfg.budget):
        if run.out_of_time():
            break
        tic = time.perf_counter()
        values = sample_uniform(task.space, rng_acq)
        f_new = task(values)
        improved = run.observe(values, f_new)
        run.record(
            "suggest",
            values,
            f_new,
            improved,
            timings={"total": round(time.perf_counter() - tic, 6)},
        )
    return run.trace


@dataclass
class ExhaustiveResult:
    """Per-graph statistics over every connected graph on the space."""

    graphs: list[MoldedGraph]
    mean_best: np.ndarray
    std_best: np.ndarray
    node_pagerank: np.ndarray
    node_correlation: np.ndarray

    @property
    def n_graphs(self) -> int:
        return len(self.graphs)


def run_exhaustive(cfg: RunConfig) -> ExhaustiveResult:
    """Fixed-graph runs over every connected graph, repeated over seeds.

    For each graph the final incumbent is averaged over ``repeats`` runs
    with child seeds derived from (seed, graph index, repeat).  Per-node
    output: its PageRank in every graph and the correlation of that
    PageRank with mean performance across graphs.
    """
    cfg = cfg.validated()
    task = get_task(cfg.task)
    validate_space(task.space)
    dim = task.space.dim
    if dim > EXHAUSTIVE_MAX_DIM:
        raise TooLargeError(
            f"{dim} variables exceed the exhaustive limit of {EXHAUSTIVE_MAX_DIM}"
        )

    graphs = list(enumerate_connected_graphs(dim))
    mean_best = np.zeros(len(graphs))
    std_best = np.zeros(len(graphs))
    ranks = np.zeros((len(graphs), dim))
    for gi, graph in enumerate(graphs):
        finals = []
        for rep in range(cfg.repeats):
            child = int(
                np.random.SeedSequence((cfg.seed, gi, rep)).generate_state(1)[0]
            )
            trace = run_prior_graph(
                replace(cfg, seed=child, mode="prior-graph"), graph
            )
            finals.append(trace.best)
        mean_best[gi] = np.mean(finals)
        std_best[gi] = np.std(finals)
        ranks[gi] = pagerank(graph)

    correlation = np.array(
        [pearson(ranks[:, v], mean_best) for v in range(dim)]
    )
    return ExhaustiveResult(
        graphs=graphs,
        mean_best=mean_best,
        std_best=std_best,
        node_pagerank=ranks,
        node_correlation=correlation,
    )


def write_exhaustive_csv(result: ExhaustiveResult, path: str) -> None:
    """Flat table: one row per graph, a trailing row with the per-node
    correlations."""
    dim = result.node_pagerank.shape[1]
    header = ["graph", "edges", "mean_best", "std_best"]
    header += [f"pagerank_{v}" for v in range(dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for gi, graph in enumerate(result.graphs):
            edges = ";".join(f"{i}-{j}" for i, j in graph.edges)
            row = [gi, edges, result.mean_best[gi], result.std_best[gi]]
            row += [result.node_pagerank[gi, v] for v in range(dim)]
            writer.writerow(row)
        writer.writerow(
            ["correlation", "", "", ""]
            + [result.node_correlation[v] for v in range(dim)]
        )


def run(cfg: RunConfig):
    """Dispatch on cfg.mode; exhaustive mode returns the per-graph table."""
    cfg = cfg.validated()
    if cfg.mode == "gebo":
        return run_gebo(cfg)
    if cfg.mode == "prior-graph":
        return run_prior_graph(cfg)
    if cfg.mode == "random-search":
        return run_random_search(cfg)
    return run_exhaustive(cfg)
