import numpy as np
import pytest

from conftest import SMALL_CONFIG, make_random_ggd
from flowtrack.ggd import GeneralizedGraphDifference
from flowtrack.scoring import ParamGradient, ScoringModel, save_model, score_ggd
from flowtrack.training import (
    AdamOptimizer, TrainConfig, TrainingError, negative_sample_loss,
    ranking_accuracy, ranking_loss, subsample, train,
)


def test_ranking_loss_values():
    assert ranking_loss(0.0) == pytest.approx(np.log(2.0), abs=1e-12)
    assert ranking_loss(-2.0) == pytest.approx(np.log(1 + np.e ** 2), abs=1e-12)
    assert ranking_loss(10.0) < 1e-4
    d = np.linspace(-20, 20, 41)
    losses = ranking_loss(d)
    assert (np.diff(losses) < 0).all()  # monotonically decreasing
    assert (losses > 0).all()


def test_negative_sample_identity():
    for d in (-20.0, -5.0, -1.0, 0.0, 1.0, 5.0, 20.0):
        assert abs(negative_sample_loss(d) - ranking_loss(d)) <= 1e-12
    # the textbook formula agrees wherever it is numerically representable
    for d in (-5.0, -1.0, 0.0, 1.0, 5.0):
        naive = -np.log(1.0 - 1.0 / (1.0 + np.exp(d)))
        assert negative_sample_loss(d) == pytest.approx(naive, abs=1e-9)


def vertex_ggd(hi, lo, entry=0):
    return GeneralizedGraphDifference(
        plus_vertices=np.array([[hi, 0.0, 0.0]]),
        minus_vertices=np.array([[lo, 0.0, 0.0]]),
        plus_edges=(), minus_edges=(), entry_delta=entry)


def proper_track_ggd(conf=0.8):
    return GeneralizedGraphDifference(
        plus_vertices=np.array([[conf, 0.0, 0.0]]),
        minus_vertices=np.zeros((0, 3)),
        plus_edges=(), minus_edges=(), entry_delta=1)


def test_ranking_accuracy_cases(small_model):
    zero = ScoringModel.zeros(SMALL_CONFIG, s_entry=-1.0)
    assert ranking_accuracy(zero, [proper_track_ggd()]) == 0.0  # scores -1 < 0
    rng = np.random.Generator(np.random.PCG64(2))
    ggds = [make_random_ggd(rng) for _ in range(10)]
    scores = [score_ggd(small_model, g) for g in ggds]
    expected = sum(s > 0 for s in scores) / 10
    assert ranking_accuracy(small_model, ggds) == pytest.approx(expected)
    with pytest.raises(ValueError):
        ranking_accuracy(small_model, [])


def test_loss_accuracy_consistency(small_model):
    rng = np.random.Generator(np.random.PCG64(3))
    ln2 = float(np.log(2))
    for _ in range(50):
        g = make_random_ggd(rng)
        d = score_ggd(small_model, g)
        loss = float(ranking_loss(d))
        if d > 0:
            assert loss < ln2
        elif d < 0:
            assert loss > ln2


def test_adam_zero_gradient_is_noop(small_model):
    model = small_model.copy()
    before = [p.copy() for p in model.parameters()]
    opt = AdamOptimizer(model, TrainConfig())
    for _ in range(3):
        opt.step(model, ParamGradient.zeros_like(model))
    for a, b in zip(before, model.parameters()):
        assert np.array_equal(a, b)
    assert model.s_entry == small_model.s_entry


def test_subsample_properties():
    items = list(range(10))
    assert subsample(items, 1.0, seed=0) == items
    assert len(subsample(items, 0.5, seed=0)) == 5
    assert subsample(items, 0.5, seed=4) == subsample(items, 0.5, seed=4)
    distinct = {tuple(subsample(list(range(100)), 0.1, seed=s)) for s in range(100)}
    assert len(distinct) > 90
    with pytest.raises(ValueError):
        subsample(items, 0.0, seed=0)
    with pytest.raises(ValueError):
        subsample(items, 1.5, seed=0)


def separable_dataset(rng, n):
    out = []
    for _ in range(n):
        hi = rng.uniform(0.7, 1.0)
        lo = rng.uniform(0.0, 0.3)
        out.append(vertex_ggd(hi, lo))
    return out


def test_train_zero_epochs_is_identity(small_model):
    rng = np.random.Generator(np.random.PCG64(4))
    data = separable_dataset(rng, 10)
    config = TrainConfig(max_epochs=0)
    model, report = train(small_model, data, data, config)
    for a, b in zip(model.parameters(), small_model.parameters()):
        assert np.array_equal(a, b)
    assert report.train_loss == [] and report.best_epoch == -1


def test_train_requires_data(small_model):
    with pytest.raises(ValueError):
        train(small_model, [], [proper_track_ggd()], TrainConfig())


def test_train_reaches_full_accuracy_on_separable_data():
    rng = np.random.Generator(np.random.PCG64(5))
    train_set = separable_dataset(rng, 200)
    val_set = separable_dataset(rng, 50)
    model = ScoringModel.initialize(SMALL_CONFIG, seed=7)
    config = TrainConfig(learning_rate=3e-3, batch_size=32, max_epochs=10, seed=1)
    trained, report = train(model, train_set, val_set, config)
    assert max(report.val_accuracy) == 1.0
    assert ranking_accuracy(trained, val_set) == 1.0


def test_train_determinism_byte_identical(tmp_path):
    rng = np.random.Generator(np.random.PCG64(6))
    train_set = separable_dataset(rng, 60)
    val_set = separable_dataset(rng, 20)
    config = TrainConfig(batch_size=16, max_epochs=3, seed=9, deterministic=True)

    outs = []
    for name in ("a.bin", "b.bin"):
        model = ScoringModel.initialize(SMALL_CONFIG, seed=3)
        trained, _ = train(model, train_set, val_set, config)
        save_model(trained, tmp_path / name)
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]


def test_best_epoch_dominates_report():
    rng = np.random.Generator(np.random.PCG64(8))
    train_set = separable_dataset(rng, 100)
    val_set = separable_dataset(rng, 30)
    model = ScoringModel.initialize(SMALL_CONFIG, seed=11)
    config = TrainConfig(learning_rate=3e-3, batch_size=32, max_epochs=30,
                         patience=2, seed=2)
    trained, report = train(model, train_set, val_set, config)
    assert report.best_epoch >= 0
    best = report.val_accuracy[report.best_epoch]
    assert best == max(report.val_accuracy)
    assert len(report.val_accuracy) < 30  # early stopping kicked in
    assert ranking_accuracy(trained, val_set) == pytest.approx(best)


def test_training_on_flipped_data_inverts_accuracy():
    rng = np.random.Generator(np.random.PCG64(10))
    originals = separable_dataset(rng, 150)
    flipped = [GeneralizedGraphDifference(
        plus_vertices=g.minus_vertices, minus_vertices=g.plus_vertices,
        plus_edges=g.minus_edges, minus_edges=g.plus_edges,
        entry_delta=-g.entry_delta) for g in originals]
    model = ScoringModel.initialize(SMALL_CONFIG, seed=13)
    config = TrainConfig(learning_rate=3e-3, batch_size=32, max_epochs=8, seed=3)
    trained, _ = train(model, flipped, flipped, config)
    assert ranking_accuracy(trained, originals) < 0.5


@pytest.mark.filterwarnings("ignore:invalid value encountered")
def test_nonfinite_loss_aborts_with_diagnostics(small_model):
    rng = np.random.Generator(np.random.PCG64(12))
    data = separable_dataset(rng, 8)
    bad = GeneralizedGraphDifference(
        plus_vertices=np.array([[np.nan, 0.0, 0.0]]),
        minus_vertices=np.zeros((0, 3)),
        plus_edges=(), minus_edges=(), entry_delta=0,
        site=(123,))
    data.insert(3, bad)
    with pytest.raises(TrainingError, match="ggd"):
        train(small_model, data, data[:2], TrainConfig(batch_size=16, max_epochs=1))
