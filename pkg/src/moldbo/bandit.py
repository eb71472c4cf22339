"""Nested two-level adversarial bandit over variables and candidate graphs.

A node-level EXP3 agent proposes centered node sets by pulling its arms c
times with replacement; a graph-level EXP3 agent selects among K candidate
graphs.  Rewards for the selected graph cascade down to its centered nodes,
discounted by each node's probability of appearing as a centered node across
the current slate.  Persistently non-improving graphs are replaced and the
graph agent's weights renormalized to sum K.

Weights are stored in log-space so that importance-weighted rewards, which
can reach K/gamma per round, never overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphmold import MoldedGraph, graph_from_dict, graph_to_dict


class BanditError(ValueError):
    """Base class for bandit state errors."""


class NonFiniteWeightError(BanditError):
    """Raised when an agent's weights stop being finite."""


class MissingSnapshotError(BanditError):
    """Raised when a reward update arrives before any graph selection."""


class RewardOutOfRangeError(BanditError):
    """Raised when a normalized reward leaves [0, 1]."""


def tuned_gamma(n_arms: int, horizon: int | None) -> float:
    """Exploration rate: the theoretically tuned EXP3 value, else 0.1.

    With a known horizon T this is min(1, sqrt(n ln n / ((e - 1) T))).
    """
    if horizon is None or horizon <= 0:
        return 0.1
    return min(1.0, math.sqrt(n_arms * math.log(n_arms) / ((math.e - 1) * horizon)))


@dataclass
class Exp3Agent:
    """Exponential-weights agent with a uniform exploration mixture.

    ``log_weights`` holds ln(omega) per arm; ``gamma`` in (0, 1] is the
    exploration share.
    """

    log_weights: np.ndarray
    gamma: float

    @classmethod
    def uniform(cls, n_arms: int, gamma: float) -> "Exp3Agent":
        return cls(np.zeros(n_arms), float(gamma))

    @property
    def n_arms(self) -> int:
        return self.log_weights.size


def exp3_probabilities(agent: Exp3Agent) -> np.ndarray:
    """p_i = (1 - gamma) * w_i / sum(w) + gamma / n_arms.

    Exponentiates shifted log-weights so the weight share is stable for any
    weight magnitude.
    """
    lw = agent.log_weights
    if not np.all(np.isfinite(lw)):
        raise NonFiniteWeightError("agent weights are not finite")
    w = np.exp(lw - lw.max())
    p = (1.0 - agent.gamma) * w / w.sum() + agent.gamma / agent.n_arms
    return p


def sample_arm(agent: Exp3Agent, rng: np.random.Generator) -> int:
    p = exp3_probabilities(agent)
    return int(rng.choice(agent.n_arms, p=p))


@dataclass
class Slot:
    """One candidate graph with its centered core and failure counter."""

    graph: MoldedGraph
    centered: tuple[int, ...]
    fail_count: int = 0


@dataclass
class NestedBanditState:
    """Joint state of the node agent, graph agent, and the K slots."""

    node_agent: Exp3Agent
    graph_agent: Exp3Agent
    slots: list[Slot]
    last_probs: np.ndarray | None = None
    last_selected: int | None = None

    @property
    def n_slots(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class RewardRecord:
    """Outcome of one evaluation routed back into the bandit."""

    raw_value: float
    reward: float
    slot: int
    centered: tuple[int, ...]


def sample_centered_nodes(
    state: NestedBanditState, c: int, rng: np.random.Generator
) -> tuple[int, ...]:
    """Pull the node agent c times i.i.d. and return the deduplicated set."""
    if c < 1:
        raise BanditError("c must be >= 1")
    p = exp3_probabilities(state.node_agent)
    draws = rng.choice(state.node_agent.n_arms, size=c, p=p)
    return tuple(sorted(set(int(d) for d in draws)))


def select_graph(
    state: NestedBanditState, rng: np.random.Generator
) -> tuple[int, np.ndarray]:
    """Sample a slot from the graph agent and snapshot its probabilities.

    The snapshot is taken before any weight update and is the one used by the
    subsequent reward cascade.
    """
    p = exp3_probabilities(state.graph_agent)
    i = int(rng.choice(state.n_slots, p=p))
    state.last_probs = p.copy()
    state.last_selected = i
    return i, p


def normalize_reward(history, f_new: float) -> float:
    """Min-max normalize f_new over history plus itself; 0.5 when degenerate."""
    values = list(history) + [f_new]
    lo, hi = min(values), max(values)
    if hi == lo:
        return 0.5
    return (f_new - lo) / (hi - lo)


def update_rewards(state: NestedBanditState, record: RewardRecord) -> NestedBanditState:
    """Apply the importance-weighted reward cascade to both agents.

    The selected slot's weight multiplies by exp(gamma_G * (r / p_i) / K).
    Each centered node v of that slot receives the graph reward further
    divided by the probability that v appears as a centered node in the
    sampled slate, sum over slots j containing v of p_j, and its weight
    multiplies by exp(gamma_N * fhat_v / (|V_i| * K)).  All other arms are
    untouched, and node weights are never renormalized.
    """
    if state.last_probs is None or state.last_selected is None:
        raise MissingSnapshotError("update_rewards called before select_graph")
    if not 0.0 <= record.reward <= 1.0:
        raise RewardOutOfRangeError(f"reward {record.reward} outside [0, 1]")
    if record.slot != state.last_selected:
        raise BanditError("reward record does not match the selected slot")

    k = state.n_slots
    p = state.last_probs
    i = record.slot
    fhat_graph = record.reward / p[i]
    state.graph_agent.log_weights[i] += state.graph_agent.gamma * fhat_graph / k

    members = record.centered
    for v in members:
        membership = sum(p[j] for j in range(k) if v in state.slots[j].centered)
        fhat_node = fhat_graph / membership
        state.node_agent.log_weights[v] += (
            state.node_agent.gamma * fhat_node / (len(members) * k)
        )
    if not np.all(np.isfinite(state.graph_agent.log_weights)) or not np.all(
        np.isfinite(state.node_agent.log_weights)
    ):
        raise NonFiniteWeightError("weights left the finite range after update")
    return state


def maybe_replace(
    state: NestedBanditState,
    improved: bool,
    regenerate,
    threshold: int = 5,
) -> list[int]:
    """Advance failure counters and swap out slots that hit the threshold.

    Only the just-selected slot's counter moves: it resets on improvement and
    increments otherwise.  Every slot at or past the threshold is rebuilt via
    ``regenerate() -> (graph, centered)``, its weight reset to 1, and the
    graph agent's weights rescaled so they sum to the slot count.  Returns
    the replaced slot indices.
    """
    if state.last_selected is None:
        raise MissingSnapshotError("maybe_replace called before select_graph")
    sel = state.slots[state.last_selected]
    sel.fail_count = 0 if improved else sel.fail_count + 1

    replaced = [j for j, s in enumerate(state.slots) if s.fail_count >= threshold]
    for j in replaced:
        graph, centered = regenerate()
        state.slots[j] = Slot(graph=graph, centered=tuple(sorted(centered)))
        state.graph_agent.log_weights[j] = 0.0
    if replaced:
        lw = state.graph_agent.log_weights
        shift = lw.max()
        log_total = shift + math.log(np.exp(lw - shift).sum())
        lw += math.log(state.n_slots) - log_total
    return replaced


def state_to_dict(state: NestedBanditState) -> dict:
    """Snapshot both agents and the slot slate for traces and resume."""
    return {
        "node_log_weights": [float(x) for x in state.node_agent.log_weights],
        "node_gamma": state.node_agent.gamma,
        "graph_log_weights": [float(x) for x in state.graph_agent.log_weights],
        "graph_gamma": state.graph_agent.gamma,
        "slots": [
            {
                "graph": graph_to_dict(s.graph),
                "centered": list(s.centered),
                "fail_count": s.fail_count,
            }
            for s in state.slots
        ],
    }


def state_from_dict(payload: dict) -> NestedBanditState:
    node = Exp3Agent(np.array(payload["node_log_weights"], dtype=float),
                     payload["node_gamma"])
    graph = Exp3Agent(np.array(payload["graph_log_weights"], dtype=float),
                      payload["graph_gamma"])
    slots = [
        Slot(
            graph=graph_from_dict(s["graph"]),
            centered=tuple(s["centered"]),
            fail_count=int(s["fail_count"]),
        )
        for s in payload["slots"]
    ]
    return NestedBanditState(node_agent=node, graph_agent=graph, slots=slots)
