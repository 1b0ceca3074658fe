import numpy as np
import pytest

from flowtrack.ggd import EdgeBundle, GeneralizedGraphDifference
from flowtrack.graph import build_graph
from flowtrack.scoring import ModelConfig, ScoringModel
from flowtrack.solver import WeightedGraph
from flowtrack.synth import crossing_fixture

SMALL_CONFIG = ModelConfig(
    n_linpkt=5, n_detlayers=2, n_detfeat=8, n_kltlayers=2, n_kltfeat=8,
    n_longlayers=2, n_longfeat=8, n_combinelayers=2, n_combinefeat=16)


@pytest.fixture(scope="session")
def small_model():
    return ScoringModel.initialize(SMALL_CONFIG, seed=42)


@pytest.fixture(scope="session")
def fixture_scenario():
    return crossing_fixture()


@pytest.fixture(scope="session")
def fixture_graph(fixture_scenario):
    params = fixture_scenario.graph_params(r_neighbours=3)
    return build_graph(fixture_scenario.detections, fixture_scenario.point_tracks, params)


def make_random_ggd(rng, klt_dim=13, max_rows=3):
    def vert(n):
        return rng.uniform(0.0, 1.0, size=(n, 3))

    def bundle():
        nk = int(rng.integers(0, max_rows + 1))
        nl = int(rng.integers(0, max_rows + 1))
        if nk == 0 and nl == 0:
            nk = 1
        return EdgeBundle(rng.uniform(-1.0, 1.0, size=(nk, klt_dim)),
                          rng.uniform(-1.0, 1.0, size=(nl, 6)))

    n_pv, n_mv = rng.integers(0, 3, size=2)
    n_pe, n_me = rng.integers(0, 3, size=2)
    entry = int(rng.integers(-2, 3))
    if n_pv + n_mv + n_pe + n_me == 0:
        n_pv = 1
    return GeneralizedGraphDifference(
        plus_vertices=vert(int(n_pv)),
        minus_vertices=vert(int(n_mv)),
        plus_edges=tuple(bundle() for _ in range(int(n_pe))),
        minus_edges=tuple(bundle() for _ in range(int(n_me))),
        entry_delta=entry,
    )


def make_random_weighted_graph(rng, max_vertices=12, edge_prob=0.25):
    n = int(rng.integers(1, max_vertices + 1))
    tails, heads = [], []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.uniform() < edge_prob:
                tails.append(i)
                heads.append(j)
    return WeightedGraph(
        n_vertices=n,
        edge_tails=np.array(tails, dtype=np.int64),
        edge_heads=np.array(heads, dtype=np.int64),
        vertex_weights=rng.uniform(-2.0, 2.0, size=n),
        edge_weights=rng.uniform(-2.0, 2.0, size=len(tails)),
        s_entry=float(rng.uniform(-2.0, 0.0)),
    )
