"""Population graphs: simple, connected, undirected, with cached metrics.

Agents are the dense integers 0..n-1.  A population is immutable after
construction and safe to share between concurrent trial workers.  The pair
count ``m`` counts unordered interactable pairs, so there are ``2m`` directed
(initiator, responder) pairs.
"""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BadId, Infeasible, NotConnected, NotSimple

GENERATOR_KINDS = ("complete", "cycle", "path", "star", "random_connected")


@dataclass(frozen=True)
class GraphMetrics:
    """All-pairs hop distances (BFS) and the diameter they induce."""

    distances: np.ndarray  # shape (n, n), int
    diameter: int

    def distance(self, u: int, v: int) -> int:
        return int(self.distances[u, v])


@dataclass(frozen=True)
class Graph:
    """Simple connected undirected population graph.

    ``adjacency[v]`` is the sorted tuple of neighbors of agent v and
    ``edges`` holds each unordered pair once as (u, v) with u < v.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def directed_pairs(self) -> tuple[tuple[int, int], ...]:
        """All 2m (initiator, responder) pairs, in deterministic order."""
        return tuple((u, v) for u in range(self.n) for v in self.adjacency[u])

    @cached_property
    def metrics(self) -> GraphMetrics:
        return metrics(self)

    @property
    def diameter(self) -> int:
        return self.metrics.diameter

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return (
            0 <= u < self.n
            and 0 <= v < self.n
            and v in self.adjacency[u]
        )


def build_graph(edges, n: int) -> Graph:
    """Validate an unordered edge list and freeze it into a Graph.

    Raises BadId for ids outside 0..n-1, NotSimple for self-loops or
    duplicate edges (after normalizing pair order), and NotConnected if some
    agent is unreachable from agent 0.
    """
    if n < 2:
        raise BadId(f"a population needs at least 2 agents, got n={n}")
    normalized = []
    seen = set()
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise BadId(f"edge ({u},{v}) references an id outside 0..{n - 1}")
        if u == v:
            raise NotSimple(f"self-loop at agent {u}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise NotSimple(f"duplicate edge {key}")
        seen.add(key)
        normalized.append(key)
    normalized.sort()
    adj = [[] for _ in range(n)]
    for u, v in normalized:
        adj[u].append(v)
        adj[v].append(u)
    g = Graph(
        n=n,
        adjacency=tuple(tuple(sorted(nbrs)) for nbrs in adj),
        edges=tuple(normalized),
    )
    _check_connected(g)
    g.metrics  # distances and diameter are cached eagerly
    return g


def _check_connected(g: Graph) -> None:
    reached = {0}
    frontier = deque([0])
    while frontier:
        u = frontier.popleft()
        for v in g.adjacency[u]:
            if v not in reached:
                reached.add(v)
                frontier.append(v)
    if len(reached) != g.n:
        missing = sorted(set(range(g.n)) - reached)
        raise NotConnected(f"agents {missing} unreachable from agent 0")


def metrics(g: Graph) -> GraphMetrics:
    """All-pairs shortest-path hop counts via one BFS per source."""
    n = g.n
    dist = np.full((n, n), -1, dtype=np.int64)
    for src in range(n):
        dist[src, src] = 0
        frontier = deque([src])
        while frontier:
            u = frontier.popleft()
            for v in g.adjacency[u]:
                if dist[src, v] < 0:
                    dist[src, v] = dist[src, u] + 1
                    frontier.append(v)
    return GraphMetrics(distances=dist, diameter=int(dist.max()))


def generate_graph(kind: str, n: int, m: int | None = None, seed: int = 0) -> Graph:
    """Deterministic graph instances for experiments.

    ``random_connected`` draws a uniform random labeled spanning tree
    (random Pruefer sequence) and then adds ``m - (n - 1)`` distinct extra
    edges chosen uniformly from the non-tree pairs.
    """
    if kind not in GENERATOR_KINDS:
        raise ValueError(f"unknown graph kind {kind!r}; expected one of {GENERATOR_KINDS}")
    if n < 2:
        raise Infeasible(n, m, "need at least two agents")
    if kind != "random_connected":
        if m is not None:
            raise ValueError(f"edge count m is only accepted for random_connected, not {kind!r}")
        if kind == "complete":
            edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
        elif kind == "path":
            edges = [(v, v + 1) for v in range(n - 1)]
        elif kind == "star":
            edges = [(0, v) for v in range(1, n)]
        else:  # cycle
            if n < 3:
                raise Infeasible(n, m, "a simple cycle needs n >= 3")
            edges = [(v, v + 1) for v in range(n - 1)] + [(0, n - 1)]
        return build_graph(edges, n)

    max_m = n * (n - 1) // 2
    if m is None or not (n - 1 <= m <= max_m):
        raise Infeasible(n, m, f"need n-1 <= m <= {max_m}")
    rng = random.Random(seed)
    tree = _random_spanning_tree(n, rng)
    tree_set = set(tree)
    extras = m - (n - 1)
    if extras:
        complement = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if (u, v) not in tree_set
        ]
        tree.extend(rng.sample(complement, extras))
    return build_graph(tree, n)


def _random_spanning_tree(n: int, rng: random.Random) -> list[tuple[int, int]]:
    """Uniform random labeled tree via Pruefer decoding."""
    if n == 2:
        return [(0, 1)]
    seq = [rng.randrange(n) for _ in range(n - 2)]
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((min(u, v), max(u, v)))
    return edges


def dump_edge_list(g: Graph) -> str:
    """Edge-list text: first line ``n m``, then one ``u v`` line per pair."""
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise NotSimple("empty edge-list file")
    header = lines[0].split()
    if len(header) != 2:
        raise NotSimple(f"bad header line {lines[0]!r}, expected 'n m'")
    n, m = int(header[0]), int(header[1])
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise NotSimple(f"bad edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if len(edges) != m:
        raise NotSimple(f"header promises {m} edges but file has {len(edges)}")
    return build_graph(edges, n)


def load_edge_list(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def save_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_edge_list(g))
