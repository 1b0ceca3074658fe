"""Ground-truth solutions and generalized graph differences.

A generalized graph difference (GGD) is the signed symmetric difference of
two feasible solutions' score terms: vertex feature rows and edge feature
bundles that appear on only one side, plus a track-entry count delta. Its
model score equals the score gap between the two solutions, which is all the
ranking loss needs.

Training data is produced by applying a catalog of small structured errors
(switches, splits, merges, skips, false positives, track-length pairs) at
every graph position where the erroneous solution is still feasible, i.e.
where every edge the error needs actually exists.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from math import ceil

import numpy as np

from .solution import FeasibleSolution, empty_solution, solution_to_chains

logger = logging.getLogger(__name__)


class PerturbationKind(Enum):
    ID_SWITCH = "IdSwitch"
    SPLIT = "Split"
    MERGE = "Merge"
    SPLIT_AND_MERGE = "SplitAndMerge"
    DOUBLE_SPLIT_AND_MERGE = "DoubleSplitAndMerge"
    DETECTION_SKIP = "DetectionSkip"
    SKIP_FIRST = "SkipFirst"
    SKIP_LAST = "SkipLast"
    EXTRA_FIRST = "ExtraFirst"
    EXTRA_LAST = "ExtraLast"
    FALSE_POSITIVE = "FalsePositive"
    SPLIT_TO_FALSE_POSITIVE = "SplitToFalsePositive"
    SPLIT_FROM_FALSE_POSITIVE = "SplitFromFalsePositive"
    TOO_SHORT_TRACK = "TooShortTrack"
    PROPER_TRACK = "ProperTrack"


@dataclass(frozen=True, slots=True)
class EdgeBundle:
    """The feature matrices of one graph edge: (n, klt_dim) and (m, 6)."""

    klt: np.ndarray
    long: np.ndarray


@dataclass
class GeneralizedGraphDifference:
    """Signed score terms of a solution pair (correct side positive)."""

    plus_vertices: np.ndarray
    minus_vertices: np.ndarray
    plus_edges: tuple[EdgeBundle, ...]
    minus_edges: tuple[EdgeBundle, ...]
    entry_delta: int
    kind: PerturbationKind | None = None
    site: tuple = ()
    pair_spec: object = field(default=None, repr=False, compare=False)

    @property
    def n_terms(self) -> int:
        return (len(self.plus_vertices) + len(self.minus_vertices)
                + len(self.plus_edges) + len(self.minus_edges))


@dataclass(frozen=True, slots=True)
class SolutionDelta:
    """Indicator flips that turn a reference solution into a perturbed one."""

    edges_off: tuple[int, ...] = ()
    edges_on: tuple[int, ...] = ()
    v_off: tuple[int, ...] = ()
    v_on: tuple[int, ...] = ()
    f_off: tuple[int, ...] = ()
    f_on: tuple[int, ...] = ()
    l_off: tuple[int, ...] = ()
    l_on: tuple[int, ...] = ()


def apply_delta(x: FeasibleSolution, delta: SolutionDelta) -> FeasibleSolution:
    out = x.copy()
    for pos in delta.edges_off:
        out.e_hat[pos] = 0
    for pos in delta.edges_on:
        out.e_hat[pos] = 1
    for i in delta.v_off:
        out.v_hat[i] = 0
    for i in delta.v_on:
        out.v_hat[i] = 1
    for i in delta.f_off:
        out.f_hat[i] = 0
    for i in delta.f_on:
        out.f_hat[i] = 1
    for i in delta.l_off:
        out.l_hat[i] = 0
    for i in delta.l_on:
        out.l_hat[i] = 1
    return out


def _bundle(graph, pos: int) -> EdgeBundle:
    e = graph.edges[pos]
    return EdgeBundle(e.klt_features, e.long_features)


def _vertex_rows(graph, indices) -> np.ndarray:
    if len(indices) == 0:
        return np.zeros((0, 3), dtype=np.float64)
    return graph.vertex_features[list(indices)]


def _ggd_from_delta(graph, delta: SolutionDelta, kind, site) -> GeneralizedGraphDifference:
    return GeneralizedGraphDifference(
        plus_vertices=_vertex_rows(graph, delta.v_off),
        minus_vertices=_vertex_rows(graph, delta.v_on),
        plus_edges=tuple(_bundle(graph, p) for p in delta.edges_off),
        minus_edges=tuple(_bundle(graph, p) for p in delta.edges_on),
        entry_delta=len(delta.f_off) - len(delta.f_on),
        kind=kind,
        site=site,
        pair_spec=("delta", delta),
    )


def ground_truth_solution(graph, gt_tracks, iou_match_threshold: float = 0.5) -> FeasibleSolution:
    """Encode annotated tracks as a feasible solution on the graph.

    Ground truth references detection ids, so matching is by identity; ids
    absent from the graph (e.g. outside a chunk window) are skipped. Where a
    needed edge does not exist the track is split at that point and the event
    logged.
    """
    del iou_match_threshold  # identity matching; kept for interface stability
    chains = []
    for track in gt_tracks:
        indices = [graph.id_to_index[d] for d in track.detections if d in graph.id_to_index]
        chain = []
        for idx in indices:
            if not chain:
                chain = [idx]
                continue
            if graph.find_edge(chain[-1], idx) is not None:
                chain.append(idx)
            else:
                logger.info("gt track %d split: no edge %d -> %d",
                            track.track_id, chain[-1], idx)
                chains.append(chain)
                chain = [idx]
        if chain:
            chains.append(chain)

    x = empty_solution(graph.n_vertices, graph.n_edges)
    for chain in chains:
        x.f_hat[chain[0]] = 1
        x.l_hat[chain[-1]] = 1
        for i in chain:
            x.v_hat[i] = 1
        for a, b in zip(chain, chain[1:]):
            x.e_hat[graph.find_edge(a, b)] = 1
    return x


def diff(graph, x_star: FeasibleSolution, x: FeasibleSolution) -> GeneralizedGraphDifference:
    """Signed symmetric difference of two feasible solutions on one graph."""
    if (len(x_star.v_hat) != graph.n_vertices or len(x.v_hat) != graph.n_vertices
            or len(x_star.e_hat) != graph.n_edges or len(x.e_hat) != graph.n_edges):
        raise ValueError("solutions do not belong to this graph")
    plus_v = np.flatnonzero((x_star.v_hat == 1) & (x.v_hat == 0))
    minus_v = np.flatnonzero((x_star.v_hat == 0) & (x.v_hat == 1))
    plus_e = np.flatnonzero((x_star.e_hat == 1) & (x.e_hat == 0))
    minus_e = np.flatnonzero((x_star.e_hat == 0) & (x.e_hat == 1))
    entry = int(((x_star.f_hat == 1) & (x.f_hat == 0)).sum()
                - ((x_star.f_hat == 0) & (x.f_hat == 1)).sum())
    return GeneralizedGraphDifference(
        plus_vertices=_vertex_rows(graph, plus_v),
        minus_vertices=_vertex_rows(graph, minus_v),
        plus_edges=tuple(_bundle(graph, int(p)) for p in plus_e),
        minus_edges=tuple(_bundle(graph, int(p)) for p in minus_e),
        entry_delta=entry,
    )


class _SolutionIndex:
    """Chain structure of a reference solution plus graph adjacency."""

    def __init__(self, graph, x_star: FeasibleSolution):
        self.graph = graph
        self.x_star = x_star
        self.chains = solution_to_chains(graph, x_star)
        self.chain_of = {}
        for ci, chain in enumerate(self.chains):
            for pos, v in enumerate(chain):
                self.chain_of[v] = (ci, pos)
        self.matched = {v for chain in self.chains for v in chain}
        self.unmatched = [i for i in range(graph.n_vertices) if i not in self.matched]
        self.out_adj = {}
        self.in_adj = {}
        for pos, e in enumerate(graph.edges):
            self.out_adj.setdefault(e.from_index, []).append((pos, e.to_index))
            self.in_adj.setdefault(e.to_index, []).append((pos, e.from_index))
        self.gt_edges = []
        for ci, chain in enumerate(self.chains):
            for a, b in zip(chain, chain[1:]):
                self.gt_edges.append((graph.find_edge(a, b), a, b, ci))

    def frame(self, v: int) -> int:
        return self.graph.vertices[v].frame

    def predecessor(self, v: int):
        ci, pos = self.chain_of[v]
        if pos == 0:
            return None
        return self.chains[ci][pos - 1]


def enumerate_perturbations(graph, x_star: FeasibleSolution) -> list[GeneralizedGraphDifference]:
    """All table-1/2/3 error GGDs, one modification per example, at every
    site where the erroneous solution is feasible on the graph."""
    idx = _SolutionIndex(graph, x_star)
    K = PerturbationKind
    out = []

    def emit(kind, site, delta):
        out.append(_ggd_from_delta(graph, delta, kind, site))

    # Split: every used edge can be cut into a track end plus a track start.
    for pos, a, b, _ in idx.gt_edges:
        emit(K.SPLIT, (a, b), SolutionDelta(edges_off=(pos,), f_on=(b,), l_on=(a,)))

    # Merge: a chain end bridged onto a later chain start.
    starts = {chain[0] for chain in idx.chains}
    for chain in idx.chains:
        a = chain[-1]
        for pos, head in idx.out_adj.get(a, ()):
            if head in starts and idx.chain_of[head][0] != idx.chain_of[a][0]:
                emit(K.MERGE, (a, head),
                     SolutionDelta(edges_on=(pos,), f_off=(head,), l_off=(a,)))

    # Switch family: pairs of used edges from different chains.
    edge_pos = {(a, b): pos for pos, a, b, _ in idx.gt_edges}
    for pos1, a, b, c1 in idx.gt_edges:
        for posAD, d in idx.out_adj.get(a, ()):
            if d == b or d not in idx.matched:
                continue
            c = idx.predecessor(d)
            if c is None:
                continue
            c2 = idx.chain_of[d][0]
            if c2 == c1:
                continue
            if idx.frame(a) == idx.frame(c) and idx.frame(b) == idx.frame(d):
                # Both ends aligned: a full identity switch needs both
                # crossed edges to exist.
                cross = graph.find_edge(c, b)
                if a < c and cross is not None:
                    emit(K.ID_SWITCH, (a, b, c, d), SolutionDelta(
                        edges_off=(pos1, edge_pos[(c, d)]),
                        edges_on=(posAD, cross)))
            elif idx.frame(d) == idx.frame(b) and idx.frame(a) != idx.frame(c):
                # Heads co-temporal, tails not: swap the continuations.
                cross = graph.find_edge(c, b)
                if a < c and cross is not None:
                    emit(K.SPLIT_AND_MERGE, (a, b, c, d), SolutionDelta(
                        edges_off=(pos1, edge_pos[(c, d)]),
                        edges_on=(posAD, cross)))

    # Double split and merge: only the crossing middle edge is kept; the two
    # continuations are truncated into a new track end and start.
    by_frames = {}
    for pos, a, b, ci in idx.gt_edges:
        by_frames.setdefault((idx.frame(a), idx.frame(b)), []).append((pos, a, b, ci))
    for group in by_frames.values():
        for pos1, a, b, c1 in group:
            for pos2, c, d, c2 in group:
                if c1 == c2:
                    continue
                cross = graph.find_edge(c, b)
                if cross is not None:
                    emit(K.DOUBLE_SPLIT_AND_MERGE, (a, b, c, d), SolutionDelta(
                        edges_off=(pos1, pos2), edges_on=(cross,),
                        f_on=(d,), l_on=(a,)))

    # Detection skip: drop a mid-chain vertex, bridging with the rank-2 edge.
    for chain in idx.chains:
        for i in range(len(chain) - 2):
            a, b, c = chain[i], chain[i + 1], chain[i + 2]
            skip = graph.find_edge(a, c)
            if skip is not None:
                emit(K.DETECTION_SKIP, (a, b, c), SolutionDelta(
                    edges_off=(edge_pos[(a, b)], edge_pos[(b, c)]),
                    edges_on=(skip,), v_off=(b,)))

    # Skip first / skip last: drop a chain's endpoint detection.
    for chain in idx.chains:
        if len(chain) < 2:
            continue
        a, c = chain[0], chain[1]
        emit(K.SKIP_FIRST, (a, c), SolutionDelta(
            edges_off=(edge_pos[(a, c)],), v_off=(a,), f_off=(a,), f_on=(c,)))
        a, c = chain[-2], chain[-1]
        emit(K.SKIP_LAST, (a, c), SolutionDelta(
            edges_off=(edge_pos[(a, c)],), v_off=(c,), l_off=(c,), l_on=(a,)))

    # Extra first / extra last: glue an unmatched detection onto a chain end.
    unmatched = set(idx.unmatched)
    for chain in idx.chains:
        c = chain[0]
        for pos, tail in idx.in_adj.get(c, ()):
            if tail in unmatched:
                emit(K.EXTRA_FIRST, (tail, c), SolutionDelta(
                    edges_on=(pos,), v_on=(tail,), f_off=(c,), f_on=(tail,)))
        a = chain[-1]
        for pos, head in idx.out_adj.get(a, ()):
            if head in unmatched:
                emit(K.EXTRA_LAST, (a, head), SolutionDelta(
                    edges_on=(pos,), v_on=(head,), l_off=(a,), l_on=(head,)))

    # False positive: an unmatched detection as a one-detection track.
    for v in idx.unmatched:
        emit(K.FALSE_POSITIVE, (v,), SolutionDelta(v_on=(v,), f_on=(v,), l_on=(v,)))

    # Split to / from a false positive next to a used edge.
    for pos, b, c, _ in idx.gt_edges:
        for epos, head in idx.out_adj.get(b, ()):
            if head in unmatched:
                emit(K.SPLIT_TO_FALSE_POSITIVE, (b, c, head), SolutionDelta(
                    edges_off=(pos,), edges_on=(epos,),
                    v_on=(head,), f_on=(c,), l_on=(head,)))
        for epos, tail in idx.in_adj.get(c, ()):
            if tail in unmatched:
                emit(K.SPLIT_FROM_FALSE_POSITIVE, (b, c, tail), SolutionDelta(
                    edges_off=(pos,), edges_on=(epos,),
                    v_on=(tail,), f_on=(tail,), l_on=(b,)))

    out.sort(key=lambda g: (g.kind.value, g.site))
    return out


def subtrack_examples(graph, x_star: FeasibleSolution, n_minlen: int) -> list[GeneralizedGraphDifference]:
    """Track-length pairs: each chain is cut into non-overlapping subtracks
    of n_minlen detections; the full subtrack ranks above the empty solution
    and its first half below it. Leftover tails shorter than n_minlen are
    skipped."""
    if n_minlen < 1:
        raise ValueError("n_minlen must be positive")
    K = PerturbationKind
    idx = _SolutionIndex(graph, x_star)
    out = []
    half_len = ceil(n_minlen / 2)
    for chain in idx.chains:
        for start in range(0, len(chain) - n_minlen + 1, n_minlen):
            block = chain[start:start + n_minlen]
            edges = [graph.find_edge(a, b) for a, b in zip(block, block[1:])]
            half = block[:half_len]
            half_edges = edges[:half_len - 1]
            out.append(GeneralizedGraphDifference(
                plus_vertices=_vertex_rows(graph, ()),
                minus_vertices=_vertex_rows(graph, half),
                plus_edges=(),
                minus_edges=tuple(_bundle(graph, p) for p in half_edges),
                entry_delta=-1,
                kind=K.TOO_SHORT_TRACK,
                site=(block[0],),
                pair_spec=("standalone", tuple(half), tuple(half_edges), -1),
            ))
            out.append(GeneralizedGraphDifference(
                plus_vertices=_vertex_rows(graph, block),
                minus_vertices=_vertex_rows(graph, ()),
                plus_edges=tuple(_bundle(graph, p) for p in edges),
                minus_edges=(),
                entry_delta=1,
                kind=K.PROPER_TRACK,
                site=(block[0],),
                pair_spec=("standalone", tuple(block), tuple(edges), +1),
            ))
    out.sort(key=lambda g: (g.kind.value, g.site))
    return out


def solution_pair(graph, x_star: FeasibleSolution, ggd: GeneralizedGraphDifference):
    """Materialize the (correct, erroneous) solution pair a generated GGD
    came from, for cross-checking its score against full solution scores."""
    if ggd.pair_spec is None:
        raise ValueError("GGD carries no generation provenance")
    tag = ggd.pair_spec[0]
    if tag == "delta":
        return x_star, apply_delta(x_star, ggd.pair_spec[1])
    tag, vertices, edges, orientation = ggd.pair_spec
    standalone = empty_solution(graph.n_vertices, graph.n_edges)
    standalone.f_hat[vertices[0]] = 1
    standalone.l_hat[vertices[-1]] = 1
    for v in vertices:
        standalone.v_hat[v] = 1
    for pos in edges:
        standalone.e_hat[pos] = 1
    blank = empty_solution(graph.n_vertices, graph.n_edges)
    if orientation > 0:
        return standalone, blank
    return blank, standalone


def dataset_stats(ggds) -> dict:
    """Histogram of GGD counts per perturbation kind (all kinds present)."""
    counts = {k.value: 0 for k in PerturbationKind}
    for g in ggds:
        if g.kind is not None:
            counts[g.kind.value] += 1
    return counts


def write_ggds(path, ggds) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in ggds:
            fh.write(json.dumps({
                "kind": g.kind.value if g.kind is not None else None,
                "site": list(g.site),
                "entry_delta": g.entry_delta,
                "plus_vertices": [[float(v) for v in row] for row in g.plus_vertices],
                "minus_vertices": [[float(v) for v in row] for row in g.minus_vertices],
                "plus_edges": [{"klt": b.klt.tolist(), "long": b.long.tolist()}
                               for b in g.plus_edges],
                "minus_edges": [{"klt": b.klt.tolist(), "long": b.long.tolist()}
                                for b in g.minus_edges],
            }) + "\n")


def read_ggds(path, klt_dim: int = 13) -> list[GeneralizedGraphDifference]:
    def vrows(rows):
        return np.array(rows, dtype=np.float64) if rows else np.zeros((0, 3))

    def bundles(objs):
        out = []
        for o in objs:
            klt = np.array(o["klt"], dtype=np.float64) if o["klt"] else np.zeros((0, klt_dim))
            lng = np.array(o["long"], dtype=np.float64) if o["long"] else np.zeros((0, 6))
            out.append(EdgeBundle(klt, lng))
        return tuple(out)

    ggds = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            ggds.append(GeneralizedGraphDifference(
                plus_vertices=vrows(obj["plus_vertices"]),
                minus_vertices=vrows(obj["minus_vertices"]),
                plus_edges=bundles(obj["plus_edges"]),
                minus_edges=bundles(obj["minus_edges"]),
                entry_delta=int(obj["entry_delta"]),
                kind=PerturbationKind(obj["kind"]) if obj["kind"] else None,
                site=tuple(obj["site"]),
            ))
    return ggds


def write_split_manifest(path, n: int, val_fraction: float, seed: int) -> dict:
    """Deterministic train/validation index split for a GGD dataset file."""
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    n_val = int(round(n * val_fraction))
    manifest = {
        "seed": seed,
        "val_fraction": val_fraction,
        "val": sorted(int(i) for i in order[:n_val]),
        "train": sorted(int(i) for i in order[n_val:]),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh)
    return manifest
