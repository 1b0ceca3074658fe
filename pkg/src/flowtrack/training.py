"""Ranking-loss training of the scoring model on graph-difference datasets."""

import time
from dataclasses import dataclass, field

import numpy as np

from .scoring import GgdBatch, ParamGradient, ScoringModel, loss_and_gradients_batch, score_ggd_batch


class TrainingError(RuntimeError):
    pass


def ranking_loss(d):
    """-log(sigmoid(d)), computed stably as softplus(-d)."""
    return np.logaddexp(0.0, -np.asarray(d, dtype=np.float64))


def negative_sample_loss(d):
    """Loss of a flipped pair, -log(1 - sigmoid(-d)). Because
    1 - sigmoid(-d) = sigmoid(d), this collapses to the same softplus;
    evaluating the textbook formula directly would lose all precision for
    large negative d."""
    return np.logaddexp(0.0, -np.asarray(d, dtype=np.float64))


@dataclass(frozen=True, slots=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 10
    patience: int = 0  # epochs without validation improvement; 0 disables
    seed: int = 0
    deterministic: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0:
            raise ValueError("learning rate and batch size must be positive")
        if self.max_epochs < 0 or self.patience < 0:
            raise ValueError("max_epochs and patience must be non-negative")


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    best_epoch: int = -1

    def to_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_accuracy": self.val_accuracy,
            "epoch_seconds": self.epoch_seconds,
            "best_epoch": self.best_epoch,
        }


class AdamOptimizer:
    """Reference Adam with bias correction. A zero gradient leaves the
    parameters bit-for-bit unchanged."""

    def __init__(self, model: ScoringModel, config: TrainConfig):
        self.config = config
        self.m = [np.zeros_like(p) for p in model.parameters()]
        self.v = [np.zeros_like(p) for p in model.parameters()]
        self.m_entry = 0.0
        self.v_entry = 0.0
        self.t = 0

    def step(self, model: ScoringModel, grads: ParamGradient) -> None:
        c = self.config
        self.t += 1
        bc1 = 1.0 - c.beta1 ** self.t
        bc2 = 1.0 - c.beta2 ** self.t
        for p, g, m, v in zip(model.parameters(), grads.arrays, self.m, self.v):
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * np.square(g)
            p -= c.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + c.eps)
        g = grads.s_entry
        self.m_entry = c.beta1 * self.m_entry + (1.0 - c.beta1) * g
        self.v_entry = c.beta2 * self.v_entry + (1.0 - c.beta2) * g * g
        model.s_entry -= c.learning_rate * (self.m_entry / bc1) / (
            np.sqrt(self.v_entry / bc2) + c.eps)


def score_all(model: ScoringModel, ggds, chunk: int = 8192) -> np.ndarray:
    """Scores of many graph differences, batched in bounded chunks."""
    out = np.empty(len(ggds), dtype=np.float64)
    dim = model.config.klt_input_dim
    for lo in range(0, len(ggds), chunk):
        batch = GgdBatch.from_ggds(ggds[lo:lo + chunk], dim)
        out[lo:lo + len(batch.entry_delta)] = score_ggd_batch(model, batch)
    return out


def ranking_accuracy(model: ScoringModel, ggds) -> float:
    """Fraction of graph differences the model scores positive."""
    if len(ggds) == 0:
        raise ValueError("ranking accuracy is undefined on an empty dataset")
    return float((score_all(model, ggds) > 0.0).mean())


def subsample(ggds, fraction: float, seed: int) -> list:
    """Uniform sample without replacement, original order preserved."""
    if not (0.0 < fraction <= 1.0):
        raise ValueError("fraction must be in (0, 1]")
    n = len(ggds)
    size = int(round(fraction * n))
    rng = np.random.Generator(np.random.PCG64(seed))
    keep = sorted(rng.choice(n, size=size, replace=False))
    return [ggds[i] for i in keep]


def _diagnose_nonfinite(model, ggds, offset):
    scores = score_all(model, ggds)
    bad = np.flatnonzero(~np.isfinite(scores))
    idx = int(bad[0]) if bad.size else 0
    g = ggds[idx]
    return f"ggd {offset + idx} (kind={getattr(g.kind, 'value', None)}, site={g.site})"


def train(model: ScoringModel, train_ggds, val_ggds, config: TrainConfig,
          verbose: bool = False):
    """Mini-batch Adam on the mean ranking loss.

    One epoch is a full shuffled pass over the training differences. After
    each epoch the validation ranking accuracy is measured; training stops at
    max_epochs or once accuracy has not improved for `patience` consecutive
    epochs, and the best-epoch parameters are returned. With verbose=True a
    progress line per epoch goes to standard output.
    """
    if len(train_ggds) == 0 or len(val_ggds) == 0:
        raise ValueError("training and validation datasets must be non-empty")
    report = TrainReport()
    if config.max_epochs == 0:
        return model.copy(), report

    work = model.copy()
    optimizer = AdamOptimizer(work, config)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    dim = work.config.klt_input_dim

    best_acc = -np.inf
    best_model = work.copy()
    epochs_since_best = 0
    for epoch in range(config.max_epochs):
        started = time.perf_counter()
        order = rng.permutation(len(train_ggds))
        loss_sum = 0.0
        for lo in range(0, len(order), config.batch_size):
            sel = order[lo:lo + config.batch_size]
            batch_ggds = [train_ggds[i] for i in sel]
            batch = GgdBatch.from_ggds(batch_ggds, dim)
            loss, grads, _ = loss_and_gradients_batch(work, batch)
            if not np.isfinite(loss):
                raise TrainingError(
                    "non-finite loss at epoch "
                    f"{epoch}: {_diagnose_nonfinite(work, batch_ggds, lo)}")
            optimizer.step(work, grads)
            loss_sum += loss * len(sel)
        report.train_loss.append(loss_sum / len(order))
        acc = ranking_accuracy(work, val_ggds)
        report.val_accuracy.append(acc)
        report.epoch_seconds.append(time.perf_counter() - started)
        if verbose:
            print(f"epoch {epoch}: loss {report.train_loss[-1]:.6f} "
                  f"val_acc {acc:.4f} ({report.epoch_seconds[-1]:.1f}s)", flush=True)
        if acc >= best_acc:
            # among tied-best epochs keep the latest: extra epochs sharpen
            # margins even once the accuracy has saturated
            best_model = work.copy()
            report.best_epoch = epoch
        if acc > best_acc:
            best_acc = acc
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if config.patience and epochs_since_best >= config.patience:
                break
    return best_model, report
