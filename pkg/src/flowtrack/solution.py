"""Binary flow indicators over a tracking graph and their track decoding."""

from dataclasses import dataclass

import numpy as np

from .data import OutputTrack, TrackEntry


@dataclass(slots=True)
class FeasibleSolution:
    """Indicator arrays: v_hat/f_hat/l_hat per vertex, e_hat per edge.

    Feasibility means flow conservation at every vertex:
    v = f + (incoming e) = l + (outgoing e), all binary.
    """

    v_hat: np.ndarray
    f_hat: np.ndarray
    l_hat: np.ndarray
    e_hat: np.ndarray

    def copy(self) -> "FeasibleSolution":
        return FeasibleSolution(self.v_hat.copy(), self.f_hat.copy(),
                                self.l_hat.copy(), self.e_hat.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeasibleSolution):
            return NotImplemented
        return (np.array_equal(self.v_hat, other.v_hat)
                and np.array_equal(self.f_hat, other.f_hat)
                and np.array_equal(self.l_hat, other.l_hat)
                and np.array_equal(self.e_hat, other.e_hat))

    @property
    def n_tracks(self) -> int:
        return int(self.f_hat.sum())


def empty_solution(n_vertices: int, n_edges: int) -> FeasibleSolution:
    return FeasibleSolution(
        np.zeros(n_vertices, dtype=np.int8), np.zeros(n_vertices, dtype=np.int8),
        np.zeros(n_vertices, dtype=np.int8), np.zeros(n_edges, dtype=np.int8))


def edge_endpoint_arrays(graph) -> tuple[np.ndarray, np.ndarray]:
    """(tails, heads) vertex-index arrays for any graph carrying GraphEdge
    objects or plain endpoint arrays."""
    if hasattr(graph, "edge_tails"):
        return graph.edge_tails, graph.edge_heads
    tails = np.array([e.from_index for e in graph.edges], dtype=np.int64)
    heads = np.array([e.to_index for e in graph.edges], dtype=np.int64)
    return tails, heads


def check_feasible(graph, x: FeasibleSolution) -> bool:
    """True iff x satisfies flow conservation with binary indicators."""
    n = graph.n_vertices
    tails, heads = edge_endpoint_arrays(graph)
    if (len(x.v_hat) != n or len(x.f_hat) != n or len(x.l_hat) != n
            or len(x.e_hat) != len(tails)):
        raise ValueError("solution does not dimensionally match the graph")
    for arr in (x.v_hat, x.f_hat, x.l_hat, x.e_hat):
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            return False
    incoming = np.zeros(n, dtype=np.int64)
    outgoing = np.zeros(n, dtype=np.int64)
    np.add.at(incoming, heads, x.e_hat.astype(np.int64))
    np.add.at(outgoing, tails, x.e_hat.astype(np.int64))
    v = x.v_hat.astype(np.int64)
    return (np.array_equal(v, x.f_hat + incoming)
            and np.array_equal(v, x.l_hat + outgoing))


def solution_to_chains(graph, x: FeasibleSolution) -> list[list[int]]:
    """Decode unit flows into vertex-index chains, one per track, ordered by
    the (frame, id) of their starting detections."""
    tails, heads = edge_endpoint_arrays(graph)
    succ = {}
    for pos in np.flatnonzero(x.e_hat):
        succ[int(tails[pos])] = int(heads[pos])
    starts = sorted(int(i) for i in np.flatnonzero(x.f_hat))
    chains = []
    visited = 0
    for start in starts:
        chain = [start]
        node = start
        while node in succ:
            node = succ[node]
            chain.append(node)
            if len(chain) > graph.n_vertices:
                raise RuntimeError("cycle detected while decoding a feasible solution")
        chains.append(chain)
        visited += len(chain)
    if visited != int(x.v_hat.sum()):
        raise RuntimeError("decoded chains do not cover the selected vertex set")
    return chains


def solution_to_tracks(graph, x: FeasibleSolution) -> list[OutputTrack]:
    """One OutputTrack per decoded chain; every selected vertex appears in
    exactly one track."""
    tracks = []
    for tid, chain in enumerate(solution_to_chains(graph, x)):
        entries = tuple(
            TrackEntry(graph.vertices[i].frame, graph.vertices[i].box, False)
            for i in chain
        )
        tracks.append(OutputTrack(tid, entries))
    return tracks


def chains_to_solution(graph, chains) -> FeasibleSolution:
    """Re-encode vertex-index chains as indicator arrays; every consecutive
    pair must be an existing graph edge."""
    x = empty_solution(graph.n_vertices, graph.n_edges)
    for chain in chains:
        if not chain:
            continue
        x.f_hat[chain[0]] = 1
        x.l_hat[chain[-1]] = 1
        for i in chain:
            if x.v_hat[i]:
                raise ValueError(f"vertex {i} appears in more than one chain")
            x.v_hat[i] = 1
        for a, b in zip(chain, chain[1:]):
            pos = graph.find_edge(a, b)
            if pos is None:
                raise ValueError(f"no graph edge between vertices {a} and {b}")
            x.e_hat[pos] = 1
    return x
