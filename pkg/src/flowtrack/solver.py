"""Exact inference by min-cost network flow.

Maximizing the solution score is converted to a min-cost flow with free flow
value: each vertex is split into an in/out node pair joined by an arc
carrying the negated vertex weight, entry arcs carry the negated entry
score, exit arcs are free, and edge arcs carry negated edge weights. Unit
capacities plus shortest-path augmentation keep every intermediate flow
integral, and augmentation stops once the best residual path no longer
improves the score.

A deliberately naive exhaustive enumerator over all feasible solutions is
kept alongside as the correctness oracle for small graphs.
"""

import heapq
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .scoring import ScoringModel, edge_scores_from_bundles
from .ggd import EdgeBundle
from .solution import FeasibleSolution, empty_solution

STOP_EPS = 1e-12
BRUTE_FORCE_LIMIT = 14


@dataclass
class WeightedGraph:
    """A tracking graph reduced to the numbers inference needs."""

    n_vertices: int
    edge_tails: np.ndarray
    edge_heads: np.ndarray
    vertex_weights: np.ndarray
    edge_weights: np.ndarray
    s_entry: float
    edge_index: dict = field(default=None, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.vertex_weights).all()
                and np.isfinite(self.edge_weights).all()
                and np.isfinite(self.s_entry)):
            raise ValueError("weights must be finite")
        if self.edge_index is None:
            self.edge_index = {
                (int(a), int(b)): i
                for i, (a, b) in enumerate(zip(self.edge_tails, self.edge_heads))
            }

    @property
    def n_edges(self) -> int:
        return len(self.edge_tails)

    def find_edge(self, a: int, b: int):
        return self.edge_index.get((a, b))


def weigh(model: ScoringModel, graph) -> WeightedGraph:
    """Evaluate every vertex and edge weight exactly once, batched."""
    n = graph.n_vertices
    if n:
        vertex_weights = model.det_block.forward(graph.vertex_features)[:, 0].astype(np.float64)
    else:
        vertex_weights = np.zeros(0)
    if graph.n_edges:
        bundles = [EdgeBundle(e.klt_features, e.long_features) for e in graph.edges]
        edge_weights = edge_scores_from_bundles(model, bundles).astype(np.float64)
    else:
        edge_weights = np.zeros(0)
    tails = np.array([e.from_index for e in graph.edges], dtype=np.int64)
    heads = np.array([e.to_index for e in graph.edges], dtype=np.int64)
    return WeightedGraph(n, tails, heads, vertex_weights, edge_weights, model.s_entry)


def solution_score(wg: WeightedGraph, x: FeasibleSolution) -> float:
    """Score of a solution from cached weights (term-by-term summation)."""
    return (wg.s_entry * float(x.f_hat.sum())
            + float(x.v_hat @ wg.vertex_weights)
            + float(x.e_hat @ wg.edge_weights))


@dataclass(frozen=True)
class FlowNetwork:
    """Node-split network: 2|V|+2 nodes and 3|V|+|E| unit-capacity arcs."""

    n_vertices: int
    n_edges: int
    arc_tails: np.ndarray
    arc_heads: np.ndarray
    arc_costs: np.ndarray

    source: int = 0
    sink: int = 1

    @property
    def n_nodes(self) -> int:
        return 2 * self.n_vertices + 2

    @property
    def n_arcs(self) -> int:
        return 3 * self.n_vertices + self.n_edges

    def in_node(self, k: int) -> int:
        return 2 + 2 * k

    def out_node(self, k: int) -> int:
        return 3 + 2 * k


def node_split(wg: WeightedGraph) -> FlowNetwork:
    """Arc order: entry arcs (source -> in_k, cost -s_entry), vertex arcs
    (in_k -> out_k, cost -w_k), exit arcs (out_k -> sink, cost 0), then edge
    arcs (out_k1 -> in_k2, cost -w_e)."""
    n, m = wg.n_vertices, wg.n_edges
    tails = np.empty(3 * n + m, dtype=np.int64)
    heads = np.empty(3 * n + m, dtype=np.int64)
    costs = np.empty(3 * n + m, dtype=np.float64)
    ks = np.arange(n)
    tails[:n] = 0
    heads[:n] = 2 + 2 * ks
    costs[:n] = -wg.s_entry
    tails[n:2 * n] = 2 + 2 * ks
    heads[n:2 * n] = 3 + 2 * ks
    costs[n:2 * n] = -wg.vertex_weights
    tails[2 * n:3 * n] = 3 + 2 * ks
    heads[2 * n:3 * n] = 1
    costs[2 * n:3 * n] = 0.0
    tails[3 * n:] = 3 + 2 * wg.edge_tails
    heads[3 * n:] = 2 + 2 * wg.edge_heads
    costs[3 * n:] = -wg.edge_weights
    return FlowNetwork(n, m, tails, heads, costs)


def _shortest_path(fn: FlowNetwork, adjacency, used):
    """Label-correcting (queue-based Bellman-Ford) shortest path from source
    to sink on the residual network; handles negative arc costs. Returns
    (distance to sink, predecessor map) with deterministic relaxation order.
    """
    n_nodes = fn.n_nodes
    dist = np.full(n_nodes, np.inf)
    dist[fn.source] = 0.0
    parent = [None] * n_nodes
    in_queue = np.zeros(n_nodes, dtype=bool)
    queue = deque([fn.source])
    in_queue[fn.source] = True
    costs = fn.arc_costs
    tails = fn.arc_tails
    heads = fn.arc_heads
    while queue:
        u = queue.popleft()
        in_queue[u] = False
        du = dist[u]
        for arc, forward in adjacency[u]:
            if forward:
                if used[arc]:
                    continue
                v = heads[arc]
                nd = du + costs[arc]
            else:
                if not used[arc]:
                    continue
                v = tails[arc]
                nd = du - costs[arc]
            if nd < dist[v] - 1e-15:
                dist[v] = nd
                parent[v] = (arc, forward)
                if not in_queue[v]:
                    queue.append(v)
                    in_queue[v] = True
    return dist[fn.sink], parent


def _initial_potentials(fn: FlowNetwork, adjacency) -> np.ndarray:
    """Exact shortest distances from the source on the arc-forward network,
    by one relaxation sweep in topological order (the pre-flow network is a
    DAG: arcs only run source -> in -> out -> later in/sink)."""
    order = [fn.source]
    for k in range(fn.n_vertices):
        order.append(fn.in_node(k))
        order.append(fn.out_node(k))
    order.append(fn.sink)
    dist = np.full(fn.n_nodes, np.inf)
    dist[fn.source] = 0.0
    costs, heads = fn.arc_costs, fn.arc_heads
    for u in order:
        du = dist[u]
        if du == np.inf:
            continue
        for arc, forward in adjacency[u]:
            if forward:
                v = int(heads[arc])
                nd = du + costs[arc]
                if nd < dist[v]:
                    dist[v] = nd
    return dist


def _dijkstra(fn: FlowNetwork, adjacency, used, pi):
    """Shortest path on the residual network under reduced costs
    c + pi[u] - pi[v], all non-negative once pi holds valid potentials."""
    dist = np.full(fn.n_nodes, np.inf)
    dist[fn.source] = 0.0
    parent = [None] * fn.n_nodes
    done = np.zeros(fn.n_nodes, dtype=bool)
    heap = [(0.0, fn.source)]
    costs, tails, heads = fn.arc_costs, fn.arc_tails, fn.arc_heads
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for arc, forward in adjacency[u]:
            if forward:
                if used[arc]:
                    continue
                v = int(heads[arc])
                w = costs[arc] + pi[u] - pi[v]
            else:
                if not used[arc]:
                    continue
                v = int(tails[arc])
                w = -costs[arc] + pi[u] - pi[v]
            if w < 0.0:
                w = 0.0  # float-noise guard; true reduced costs are >= 0
            nd = du + w
            if nd < dist[v] - 1e-15:
                dist[v] = nd
                parent[v] = (arc, forward)
                heapq.heappush(heap, (nd, v))
    return dist, parent


def _augment(fn: FlowNetwork, used, parent) -> None:
    node = fn.sink
    while node != fn.source:
        arc, forward = parent[node]
        if forward:
            used[arc] = True
            node = int(fn.arc_tails[arc])
        else:
            used[arc] = False
            node = int(fn.arc_heads[arc])


def solve(wg: WeightedGraph, method: str = "label") -> FeasibleSolution:
    """Maximize the solution score by successive shortest augmenting paths.

    Augmentation stops when the cheapest residual source-sink path has
    non-negative cost, i.e. when no track addition or rerouting gains score.

    `method` selects the shortest-path routine: "label" is the queue-based
    label-correcting search that handles the negative arc costs directly;
    "potentials" keeps vertex potentials so each search runs Dijkstra on
    non-negative reduced costs, much faster on large graphs. Results are
    identical.
    """
    if method not in ("label", "potentials"):
        raise ValueError(f"unknown solve method {method!r}")
    fn = node_split(wg)
    adjacency = [[] for _ in range(fn.n_nodes)]
    for arc in range(fn.n_arcs):
        adjacency[int(fn.arc_tails[arc])].append((arc, True))
        adjacency[int(fn.arc_heads[arc])].append((arc, False))
    used = np.zeros(fn.n_arcs, dtype=bool)

    pi = _initial_potentials(fn, adjacency) if method == "potentials" else None
    for _ in range(wg.n_vertices + 1):
        if method == "label":
            sink_dist, parent = _shortest_path(fn, adjacency, used)
        else:
            dist, parent = _dijkstra(fn, adjacency, used, pi)
            sink_dist = dist[fn.sink] + pi[fn.sink]
            if np.isfinite(dist[fn.sink]):
                reachable = np.isfinite(dist)
                pi[reachable] += dist[reachable]
        if not (sink_dist < -STOP_EPS):
            break
        _augment(fn, used, parent)
    else:
        raise RuntimeError("augmentation did not terminate")

    n, m = wg.n_vertices, wg.n_edges
    x = empty_solution(n, m)
    x.f_hat[:] = used[:n]
    x.v_hat[:] = used[n:2 * n]
    x.l_hat[:] = used[2 * n:3 * n]
    x.e_hat[:] = used[3 * n:]
    return x


def brute_force_solve(wg: WeightedGraph) -> FeasibleSolution:
    """Exhaustive enumeration of every feasible solution (every family of
    vertex-disjoint forward paths); a correctness oracle for small graphs."""
    n = wg.n_vertices
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force is limited to {BRUTE_FORCE_LIMIT} vertices, got {n}")
    if np.any(wg.edge_tails >= wg.edge_heads):
        raise ValueError("brute force expects topologically ordered vertices")

    in_arcs = [[] for _ in range(n)]
    for pos in range(wg.n_edges):
        in_arcs[int(wg.edge_heads[pos])].append((pos, int(wg.edge_tails[pos])))

    choice = [-1] * n  # -1 skip, -2 track start, >=0 incoming edge position
    open_tail = [False] * n
    best_score = 0.0
    best_choice = list(choice)

    def recurse(k: int, score: float):
        nonlocal best_score, best_choice
        if k == n:
            if score > best_score:
                best_score = score
                best_choice = list(choice)
            return
        choice[k] = -1
        recurse(k + 1, score)
        choice[k] = -2
        open_tail[k] = True
        recurse(k + 1, score + wg.s_entry + wg.vertex_weights[k])
        open_tail[k] = False
        for pos, a in in_arcs[k]:
            if open_tail[a]:
                choice[k] = pos
                open_tail[a] = False
                open_tail[k] = True
                recurse(k + 1, score + wg.vertex_weights[k] + wg.edge_weights[pos])
                open_tail[k] = False
                open_tail[a] = True
        choice[k] = -1

    recurse(0, 0.0)

    x = empty_solution(n, wg.n_edges)
    has_out = np.zeros(n, dtype=bool)
    for k, c in enumerate(best_choice):
        if c == -1:
            continue
        x.v_hat[k] = 1
        if c == -2:
            x.f_hat[k] = 1
        else:
            x.e_hat[c] = 1
            has_out[int(wg.edge_tails[c])] = True
    x.l_hat[:] = x.v_hat & ~has_out
    return x


def dump_flow_network(fn: FlowNetwork, path) -> None:
    """Arc list with costs, for external LP cross-checks."""
    n = fn.n_vertices
    kinds = ["entry"] * n + ["vertex"] * n + ["exit"] * n + ["edge"] * fn.n_edges
    with open(path, "w", encoding="utf-8") as fh:
        for arc in range(fn.n_arcs):
            fh.write(json.dumps({
                "tail": int(fn.arc_tails[arc]), "head": int(fn.arc_heads[arc]),
                "cost": float(fn.arc_costs[arc]), "capacity": 1, "kind": kinds[arc],
            }) + "\n")
