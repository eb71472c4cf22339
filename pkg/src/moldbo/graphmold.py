"""Molding variable sets into undirected interaction graphs.

Each search-space variable is one node.  Graphs are generated by a
preferential-attachment scheme biased toward a centered core: the centered
nodes start fully connected, and every remaining node attaches with a single
edge to an existing node chosen proportionally to a floored degree count.
Connectivity is guaranteed by construction.  Structure analysis runs on
steady-state node importance (PageRank) and exhaustive enumeration of all
connected graphs at small dimension.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs or out-of-range enumeration requests."""


class EmptyCenterError(GraphError):
    """Raised when graph generation is asked for an empty centered core."""


class CenterOutOfRangeError(GraphError):
    """Raised when a centered index falls outside the node range."""


class NotConnectedError(GraphError):
    """Raised when an operation requires a connected graph."""


class NoConvergenceError(GraphError):
    """Raised when power iteration hits its cap before reaching tolerance."""


class TooLargeError(GraphError):
    """Raised when exhaustive enumeration would be combinatorially infeasible."""


class DegenerateInputError(ValueError):
    """Raised when a correlation is requested on constant or too-short input."""


@dataclass(frozen=True)
class MoldedGraph:
    """An undirected graph over variable indices 0..n-1.

    ``edges`` is a canonically sorted tuple of (i, j) pairs with i < j.
    ``centered`` records the core node set the generator started from; it is
    empty for enumerated graphs.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    centered: tuple[int, ...] = ()

    def __init__(self, n, edges, centered=()) -> None:
        canon = tuple(sorted((min(i, j), max(i, j)) for i, j in edges))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", canon)
        object.__setattr__(self, "centered", tuple(sorted(centered)))
        for i, j in canon:
            if i == j:
                raise GraphError(f"self loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) outside 0..{self.n - 1}")
        if len(set(canon)) != len(canon):
            raise GraphError("duplicate edges")

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        """Symmetric 0/1 adjacency matrix."""
        a = np.zeros((self.n, self.n), dtype=int)
        for i, j in self.edges:
            a[i, j] = 1
            a[j, i] = 1
        return a

    def neighbors(self, node: int) -> list[int]:
        return [j if i == node else i for i, j in self.edges if node in (i, j)]


def is_connected(n: int, edges) -> bool:
    """Breadth-first connectivity check over nodes 0..n-1."""
    if n <= 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    queue = [0]
    seen[0] = True
    count = 1
    while queue:
        u = queue.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


def ba_biased(
    n: int,
    centered,
    rng: np.random.Generator,
    threshold: int = 2,
) -> MoldedGraph:
    """Generate a connected graph grown around a centered core.

    The centered nodes form a complete subgraph.  The remaining nodes are
    attached one at a time in ascending index order, each with exactly one
    edge whose endpoint is drawn uniformly from a repeated-nodes list: every
    centered node appears max(threshold, initial degree) times, and each
    attachment appends one copy of the chosen target and one of the new node.
    The floor keeps a single centered node selectable despite its initial
    degree of zero.

    Parameters
    ----------
    n : int
        Number of variables (nodes), n >= 2.
    centered : iterable of int
        Non-empty subset of range(n) forming the core.
    rng : numpy.random.Generator
        Source of attachment draws; consumed only for target choices.
    threshold : int
        Degree floor for attachment weights, >= 1.
    """
    centered = tuple(sorted(set(int(c) for c in centered)))
    if n < 2:
        raise GraphError("need at least two nodes")
    if not centered:
        raise EmptyCenterError("centered set must be non-empty")
    if centered[0] < 0 or centered[-1] >= n:
        raise CenterOutOfRangeError("centered nodes outside range(n)")
    if threshold < 1:
        raise GraphError("threshold must be >= 1")

    edges = [(i, j) for i, j in combinations(centered, 2)]
    core_degree = len(centered) - 1
    repeated = [c for c in centered for _ in range(max(threshold, core_degree))]
    for node in (v for v in range(n) if v not in centered):
        target = repeated[int(rng.integers(len(repeated)))]
        edges.append((min(node, target), max(node, target)))
        repeated.append(target)
        repeated.append(node)
    return MoldedGraph(n, edges, centered)


def complete_graph(n: int) -> MoldedGraph:
    """The fully connected graph on n nodes."""
    if n < 2:
        raise GraphError("need at least two nodes")
    return MoldedGraph(n, list(combinations(range(n), 2)))


def attach_global_node(graph: MoldedGraph) -> np.ndarray:
    """Augment with a readout node as a directed adjacency matrix.

    Returns an (n+1, n+1) 0/1 matrix with entry [i, j] = 1 meaning an edge
    from i to j.  Original undirected edges become both directions; node n
    receives one incoming edge from every original node and emits none.
    """
    n = graph.n
    a = np.zeros((n + 1, n + 1), dtype=int)
    for i, j in graph.edges:
        a[i, j] = 1
        a[j, i] = 1
    a[:n, n] = 1
    return a


def pagerank(
    graph: MoldedGraph,
    d: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Steady-state node importance on the undirected graph.

    Each undirected edge counts as two directed ones, so a node's mass is
    split evenly across its neighbors.  Iterates
    pr[i] = (1 - d)/n + d * sum(pr[j]/deg(j) for j in neighbors(i))
    from the uniform vector until the largest per-node change drops below
    ``tol``.  The global readout node is never part of this computation.
    """
    n = graph.n
    if n == 1:
        return np.ones(1)
    if not is_connected(n, graph.edges):
        raise NotConnectedError("pagerank requires a connected graph")
    deg = graph.degrees()
    a = graph.adjacency().astype(float)
    m = a / deg[np.newaxis, :]
    pr = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = (1.0 - d) / n + d * (m @ pr)
        if np.max(np.abs(nxt - pr)) < tol:
            return nxt
        pr = nxt
    raise NoConvergenceError(f"no fixed point within {max_iter} iterations")


def enumerate_connected_graphs(n: int):
    """Yield every connected graph on n labeled nodes, 2 <= n <= 6.

    Iterates all subsets of the n*(n-1)/2 candidate edges in a fixed
    bitmask order and keeps the connected ones.  The bound keeps the subset
    count (2**15 at n = 6) tractable.
    """
    if not 2 <= n <= 6:
        raise TooLargeError("enumeration supported for 2 <= n <= 6 only")
    pairs = list(combinations(range(n), 2))
    for mask in range(2 ** len(pairs)):
        edges = [pairs[k] for k in range(len(pairs)) if mask >> k & 1]
        if is_connected(n, edges):
            yield MoldedGraph(n, edges)


def count_connected_graphs(n: int) -> int:
    return sum(1 for _ in enumerate_connected_graphs(n))


def pearson(x, y) -> float:
    """Pearson correlation of two equal-length sequences."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInputError("inputs must be equal-length 1-d sequences")
    if x.size < 2:
        raise DegenerateInputError("need at least two points")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(np.sum(xc * xc))
    sy = np.sqrt(np.sum(yc * yc))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInputError("constant input has no correlation")
    return float(np.sum(xc * yc) / (sx * sy))


def graph_to_dict(graph: MoldedGraph) -> dict:
    return {
        "n": graph.n,
        "edges": [list(e) for e in graph.edges],
        "centered": list(graph.centered),
    }


def graph_from_dict(payload: dict) -> MoldedGraph:
    return MoldedGraph(
        payload["n"],
        [tuple(e) for e in payload["edges"]],
        payload.get("centered", ()),
    )
