"""The learnable score model.

Four fully connected blocks produce the score terms: a detection block
(3 inputs -> 1), per-connection embedding blocks for point-track and
long-range evidence whose outputs are average-pooled per edge, and a combine
block that maps the pooled features plus the two connection counts to the
scalar edge score. A learned scalar entry score is charged once per track.

Everything is plain numpy with hand-written reverse-mode gradients so the
finite-difference checks can hold to tight tolerances. Hidden layers are
rectified-linear; output layers are linear. Forward passes over many
vertices, edges or graph differences are batched into matrix ops.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit as sigmoid

from .ggd import EdgeBundle, GeneralizedGraphDifference
from .graph import LONG_FEATURE_DIM, klt_feature_dim, klt_feature_vector, long_feature_vector
from .solution import check_feasible

CHECKPOINT_FORMAT = "flowtrack-model"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True, slots=True)
class ModelConfig:
    """Architecture integers; defaults follow the reference configuration."""

    n_linpkt: int = 5
    n_detlayers: int = 4
    n_detfeat: int = 32
    n_kltlayers: int = 7
    n_kltfeat: int = 64
    n_longlayers: int = 7
    n_longfeat: int = 32
    n_combinelayers: int = 4
    n_combinefeat: int = 256
    dtype: str = "float64"

    @property
    def klt_input_dim(self) -> int:
        return klt_feature_dim(self.n_linpkt)

    @property
    def combine_input_dim(self) -> int:
        return self.n_kltfeat + self.n_longfeat + 2

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)


class MlpBlock:
    """Generic fully connected block: n_layers ReLU hidden layers of equal
    width followed by a linear output layer."""

    def __init__(self, weights: list, biases: list):
        if len(weights) != len(biases) or not weights:
            raise ValueError("weights and biases must pair up")
        hidden_widths = {w.shape[1] for w in weights[:-1]}
        if len(weights) > 1 and len(hidden_widths) != 1:
            raise ValueError("all hidden layers must share one width")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape[1] != b.shape[0]:
                raise ValueError("bias width does not match layer width")
            if i + 1 < len(weights) and w.shape[1] != weights[i + 1].shape[0]:
                raise ValueError("layer widths do not chain")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError("parameters must be finite")
        self.weights = weights
        self.biases = biases

    @property
    def n_in(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_out(self) -> int:
        return self.weights[-1].shape[1]

    @classmethod
    def create(cls, rng, n_in: int, n_layers: int, n_feat: int, n_out: int,
               dtype=np.float64) -> "MlpBlock":
        """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
        dims = [n_in] + [n_feat] * n_layers + [n_out]
        weights, biases = [], []
        for fi, fo in zip(dims, dims[1:]):
            bound = np.sqrt(6.0 / (fi + fo))
            weights.append(rng.uniform(-bound, bound, size=(fi, fo)).astype(dtype))
            biases.append(np.zeros(fo, dtype=dtype))
        return cls(weights, biases)

    @classmethod
    def zeros(cls, n_in: int, n_layers: int, n_feat: int, n_out: int,
              dtype=np.float64) -> "MlpBlock":
        dims = [n_in] + [n_feat] * n_layers + [n_out]
        return cls([np.zeros((fi, fo), dtype=dtype) for fi, fo in zip(dims, dims[1:])],
                   [np.zeros(fo, dtype=dtype) for fo in dims[1:]])

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Apply the block to a single vector or a (batch, n_in) matrix."""
        x = np.asarray(x, dtype=self.weights[0].dtype)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.n_in:
            raise ValueError(f"input width {a.shape[1]} does not match block width {self.n_in}")
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w + b, 0.0)
        y = a @ self.weights[-1] + self.biases[-1]
        return y[0] if single else y

    def forward_cached(self, x: np.ndarray):
        """Batched forward keeping the activations needed for backward."""
        if x.shape[1] != self.n_in:
            raise ValueError(f"input width {x.shape[1]} does not match block width {self.n_in}")
        acts = [np.asarray(x, dtype=self.weights[0].dtype)]
        a = acts[0]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w + b, 0.0)
            acts.append(a)
        y = a @ self.weights[-1] + self.biases[-1]
        return y, acts

    def backward(self, acts: list, dy: np.ndarray, grad_weights: list, grad_biases: list):
        """Accumulate parameter gradients for a cached forward; returns dX."""
        grad_weights[-1] += acts[-1].T @ dy
        grad_biases[-1] += dy.sum(axis=0)
        da = dy @ self.weights[-1].T
        for i in range(len(self.weights) - 2, -1, -1):
            dz = da * (acts[i + 1] > 0.0)
            grad_weights[i] += acts[i].T @ dz
            grad_biases[i] += dz.sum(axis=0)
            da = dz @ self.weights[i].T
        return da


_BLOCK_NAMES = ("det", "klt", "long", "combine")


class ScoringModel:
    """All learnable parameters: the four blocks plus the scalar entry score."""

    def __init__(self, config: ModelConfig, det_block: MlpBlock, klt_block: MlpBlock,
                 long_block: MlpBlock, combine_block: MlpBlock, s_entry: float):
        self.config = config
        self.det_block = det_block
        self.klt_block = klt_block
        self.long_block = long_block
        self.combine_block = combine_block
        self.s_entry = float(s_entry)

    @classmethod
    def initialize(cls, config: ModelConfig = ModelConfig(), seed: int = 0) -> "ScoringModel":
        """Random block weights; the entry score starts at -1 so it acts as a
        track-quality threshold from the first step."""
        rng = np.random.Generator(np.random.PCG64(seed))
        dt = config.np_dtype
        return cls(
            config,
            MlpBlock.create(rng, 3, config.n_detlayers, config.n_detfeat, 1, dt),
            MlpBlock.create(rng, config.klt_input_dim, config.n_kltlayers,
                            config.n_kltfeat, config.n_kltfeat, dt),
            MlpBlock.create(rng, LONG_FEATURE_DIM, config.n_longlayers,
                            config.n_longfeat, config.n_longfeat, dt),
            MlpBlock.create(rng, config.combine_input_dim, config.n_combinelayers,
                            config.n_combinefeat, 1, dt),
            s_entry=-1.0,
        )

    @classmethod
    def zeros(cls, config: ModelConfig = ModelConfig(), s_entry: float = 0.0) -> "ScoringModel":
        dt = config.np_dtype
        return cls(
            config,
            MlpBlock.zeros(3, config.n_detlayers, config.n_detfeat, 1, dt),
            MlpBlock.zeros(config.klt_input_dim, config.n_kltlayers,
                           config.n_kltfeat, config.n_kltfeat, dt),
            MlpBlock.zeros(LONG_FEATURE_DIM, config.n_longlayers,
                           config.n_longfeat, config.n_longfeat, dt),
            MlpBlock.zeros(config.combine_input_dim, config.n_combinelayers,
                           config.n_combinefeat, 1, dt),
            s_entry=s_entry,
        )

    def blocks(self) -> dict:
        return {"det": self.det_block, "klt": self.klt_block,
                "long": self.long_block, "combine": self.combine_block}

    def parameters(self) -> list:
        """All parameter arrays in declared order (the checkpoint order)."""
        out = []
        for name in _BLOCK_NAMES:
            block = self.blocks()[name]
            for w, b in zip(block.weights, block.biases):
                out.append(w)
                out.append(b)
        return out

    def parameter_names(self) -> list:
        out = []
        for name in _BLOCK_NAMES:
            block = self.blocks()[name]
            for i in range(len(block.weights)):
                out.append(f"{name}.w{i}")
                out.append(f"{name}.b{i}")
        return out

    def copy(self) -> "ScoringModel":
        def dup(block):
            return MlpBlock([w.copy() for w in block.weights],
                            [b.copy() for b in block.biases])
        return ScoringModel(self.config, dup(self.det_block), dup(self.klt_block),
                            dup(self.long_block), dup(self.combine_block), self.s_entry)


@dataclass
class ParamGradient:
    """Gradient arrays congruent with ScoringModel.parameters() plus the
    entry-score derivative."""

    arrays: list
    s_entry: float = 0.0

    @classmethod
    def zeros_like(cls, model: ScoringModel) -> "ParamGradient":
        return cls([np.zeros_like(p) for p in model.parameters()], 0.0)

    def block_grads(self, model: ScoringModel) -> dict:
        """Split the flat array list back into per-block (dW, db) lists."""
        out = {}
        i = 0
        for name in _BLOCK_NAMES:
            block = model.blocks()[name]
            n = len(block.weights)
            out[name] = (self.arrays[i:i + 2 * n:2], self.arrays[i + 1:i + 2 * n:2])
            i += 2 * n
        return out


def mlp_forward(block: MlpBlock, x) -> np.ndarray:
    return block.forward(x)


def f_detect(model: ScoringModel, det_features) -> float:
    """Scalar detection score from the (confidence, max IoU, max IoA) triple."""
    return float(model.det_block.forward(np.asarray(det_features, dtype=np.float64))[0])


@dataclass
class _EdgeBatch:
    """Flattened connection rows for a batch of edges."""

    n_edges: int
    klt_rows: np.ndarray
    klt_edge: np.ndarray
    klt_counts: np.ndarray
    long_rows: np.ndarray
    long_edge: np.ndarray
    long_counts: np.ndarray

    @classmethod
    def from_bundles(cls, bundles, klt_dim: int) -> "_EdgeBatch":
        n = len(bundles)
        klt_mats = [b.klt for b in bundles]
        long_mats = [b.long for b in bundles]
        klt_counts = np.array([m.shape[0] for m in klt_mats], dtype=np.float64)
        long_counts = np.array([m.shape[0] for m in long_mats], dtype=np.float64)
        klt_rows = (np.concatenate(klt_mats, axis=0) if n and klt_counts.sum()
                    else np.zeros((0, klt_dim)))
        long_rows = (np.concatenate(long_mats, axis=0) if n and long_counts.sum()
                     else np.zeros((0, LONG_FEATURE_DIM)))
        klt_edge = np.repeat(np.arange(n), klt_counts.astype(np.int64))
        long_edge = np.repeat(np.arange(n), long_counts.astype(np.int64))
        return cls(n, klt_rows, klt_edge, klt_counts, long_rows, long_edge, long_counts)


def _pool(rows_out: np.ndarray, edge_of: np.ndarray, counts: np.ndarray, width: int,
          n_edges: int) -> np.ndarray:
    pooled = np.zeros((n_edges, width), dtype=rows_out.dtype)
    if rows_out.shape[0]:
        np.add.at(pooled, edge_of, rows_out)
        pooled /= np.maximum(counts, 1.0)[:, None]
    return pooled


def _forward_edges(model: ScoringModel, eb: _EdgeBatch, cached: bool):
    cfg = model.config
    if cached:
        yk, klt_acts = model.klt_block.forward_cached(eb.klt_rows)
        yl, long_acts = model.long_block.forward_cached(eb.long_rows)
    else:
        yk = model.klt_block.forward(eb.klt_rows) if eb.klt_rows.shape[0] else \
            np.zeros((0, cfg.n_kltfeat))
        yl = model.long_block.forward(eb.long_rows) if eb.long_rows.shape[0] else \
            np.zeros((0, cfg.n_longfeat))
        klt_acts = long_acts = None
    pooled_k = _pool(yk, eb.klt_edge, eb.klt_counts, cfg.n_kltfeat, eb.n_edges)
    pooled_l = _pool(yl, eb.long_edge, eb.long_counts, cfg.n_longfeat, eb.n_edges)
    combine_in = np.concatenate(
        [pooled_k, pooled_l, eb.klt_counts[:, None], eb.long_counts[:, None]], axis=1)
    if cached:
        scores, combine_acts = model.combine_block.forward_cached(combine_in)
        return scores[:, 0], (klt_acts, long_acts, combine_acts)
    if eb.n_edges == 0:
        return np.zeros(0), None
    return model.combine_block.forward(combine_in)[:, 0], None


def _backward_edges(model: ScoringModel, eb: _EdgeBatch, cache, dscores: np.ndarray,
                    grads: ParamGradient):
    cfg = model.config
    klt_acts, long_acts, combine_acts = cache
    bg = grads.block_grads(model)
    d_combine_in = model.combine_block.backward(
        combine_acts, dscores[:, None], *bg["combine"])
    d_pooled_k = d_combine_in[:, :cfg.n_kltfeat]
    d_pooled_l = d_combine_in[:, cfg.n_kltfeat:cfg.n_kltfeat + cfg.n_longfeat]
    if eb.klt_rows.shape[0]:
        dyk = d_pooled_k[eb.klt_edge] / eb.klt_counts[eb.klt_edge][:, None]
        model.klt_block.backward(klt_acts, dyk, *bg["klt"])
    if eb.long_rows.shape[0]:
        dyl = d_pooled_l[eb.long_edge] / eb.long_counts[eb.long_edge][:, None]
        model.long_block.backward(long_acts, dyl, *bg["long"])


def edge_scores_from_bundles(model: ScoringModel, bundles) -> np.ndarray:
    """Batched edge scores for a sequence of EdgeBundle feature matrices."""
    eb = _EdgeBatch.from_bundles(bundles, model.config.klt_input_dim)
    scores, _ = _forward_edges(model, eb, cached=False)
    return scores


def f_edge(model: ScoringModel, klt, long, params) -> float:
    """Edge score from raw connection bundles. `params` supplies the feature
    scaling (frame rate and image diagonal); at least one bundle must be
    non-empty."""
    if not klt and not long:
        raise ValueError("an edge needs at least one klt or long connection")
    cfg = model.config
    klt_mat = (np.stack([klt_feature_vector(c, params) for c in klt])
               if klt else np.zeros((0, cfg.klt_input_dim)))
    long_mat = (np.stack([long_feature_vector(c, params) for c in long])
                if long else np.zeros((0, LONG_FEATURE_DIM)))
    return float(edge_scores_from_bundles(model, [EdgeBundle(klt_mat, long_mat)])[0])


def score_solution(model: ScoringModel, graph, x) -> float:
    """Total score of a feasible solution: entry terms plus selected vertex
    and edge scores."""
    if not check_feasible(graph, x):
        raise ValueError("solution violates the flow constraints")
    total = model.s_entry * float(x.f_hat.sum())
    vsel = np.flatnonzero(x.v_hat)
    if vsel.size:
        total += float(model.det_block.forward(graph.vertex_features[vsel]).sum())
    esel = np.flatnonzero(x.e_hat)
    if esel.size:
        bundles = [EdgeBundle(graph.edges[int(p)].klt_features,
                              graph.edges[int(p)].long_features) for p in esel]
        total += float(edge_scores_from_bundles(model, bundles).sum())
    return total


@dataclass
class GgdBatch:
    """Flattened score terms for a batch of graph differences."""

    n: int
    vert_rows: np.ndarray
    vert_sign: np.ndarray
    vert_ggd: np.ndarray
    eb: _EdgeBatch
    edge_sign: np.ndarray
    edge_ggd: np.ndarray
    entry_delta: np.ndarray

    @classmethod
    def from_ggds(cls, ggds, klt_dim: int) -> "GgdBatch":
        vert_rows, vert_sign, vert_ggd = [], [], []
        bundles, edge_sign, edge_ggd = [], [], []
        entry = np.zeros(len(ggds), dtype=np.float64)
        for g, ggd in enumerate(ggds):
            entry[g] = ggd.entry_delta
            for sign, rows in ((1.0, ggd.plus_vertices), (-1.0, ggd.minus_vertices)):
                if len(rows):
                    vert_rows.append(np.asarray(rows, dtype=np.float64))
                    vert_sign.append(np.full(len(rows), sign))
                    vert_ggd.append(np.full(len(rows), g, dtype=np.int64))
            for sign, side in ((1.0, ggd.plus_edges), (-1.0, ggd.minus_edges)):
                for b in side:
                    bundles.append(b)
                    edge_sign.append(sign)
                    edge_ggd.append(g)
        return cls(
            n=len(ggds),
            vert_rows=np.concatenate(vert_rows) if vert_rows else np.zeros((0, 3)),
            vert_sign=np.concatenate(vert_sign) if vert_sign else np.zeros(0),
            vert_ggd=np.concatenate(vert_ggd) if vert_ggd else np.zeros(0, dtype=np.int64),
            eb=_EdgeBatch.from_bundles(bundles, klt_dim),
            edge_sign=np.array(edge_sign, dtype=np.float64),
            edge_ggd=np.array(edge_ggd, dtype=np.int64),
            entry_delta=entry,
        )


def score_ggd_batch(model: ScoringModel, batch: GgdBatch) -> np.ndarray:
    d = batch.entry_delta * model.s_entry
    if batch.vert_rows.shape[0]:
        vscores = model.det_block.forward(batch.vert_rows)[:, 0]
        d = d + np.bincount(batch.vert_ggd, weights=batch.vert_sign * vscores,
                            minlength=batch.n)
    if batch.eb.n_edges:
        escores, _ = _forward_edges(model, batch.eb, cached=False)
        d = d + np.bincount(batch.edge_ggd, weights=batch.edge_sign * escores,
                            minlength=batch.n)
    return d


def score_ggd(model: ScoringModel, ggd: GeneralizedGraphDifference) -> float:
    """Signed sum of the difference's terms; equals the score gap between the
    two solutions it was built from."""
    batch = GgdBatch.from_ggds([ggd], model.config.klt_input_dim)
    return float(score_ggd_batch(model, batch)[0])


def loss_and_gradients_batch(model: ScoringModel, batch: GgdBatch):
    """Mean ranking loss over a batch and its exact parameter gradients."""
    grads = ParamGradient.zeros_like(model)
    bg = grads.block_grads(model)

    d = batch.entry_delta * model.s_entry
    vert_acts = edge_cache = None
    if batch.vert_rows.shape[0]:
        vscores, vert_acts = model.det_block.forward_cached(batch.vert_rows)
        d = d + np.bincount(batch.vert_ggd, weights=batch.vert_sign * vscores[:, 0],
                            minlength=batch.n)
    if batch.eb.n_edges:
        escores, edge_cache = _forward_edges(model, batch.eb, cached=True)
        d = d + np.bincount(batch.edge_ggd, weights=batch.edge_sign * escores,
                            minlength=batch.n)

    losses = np.logaddexp(0.0, -d)
    loss = float(losses.mean())
    dd = -sigmoid(-d) / batch.n

    grads.s_entry = float(dd @ batch.entry_delta)
    if vert_acts is not None:
        dv = (dd[batch.vert_ggd] * batch.vert_sign)[:, None]
        model.det_block.backward(vert_acts, dv, *bg["det"])
    if edge_cache is not None:
        de = dd[batch.edge_ggd] * batch.edge_sign
        _backward_edges(model, batch.eb, edge_cache, de, grads)
    return loss, grads, d


def loss_and_gradients(model: ScoringModel, ggd: GeneralizedGraphDifference):
    """Ranking loss -log(sigmoid(score)) of one difference and its exact
    gradients, entry score included."""
    batch = GgdBatch.from_ggds([ggd], model.config.klt_input_dim)
    loss, grads, _ = loss_and_gradients_batch(model, batch)
    return loss, grads


def save_model(model: ScoringModel, path) -> None:
    """Write a self-describing, byte-deterministic checkpoint: one JSON
    header line followed by the raw little-endian parameter bytes."""
    params = model.parameters()
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "s_entry": model.s_entry,
        "tensors": [{"name": n, "shape": list(p.shape)}
                    for n, p in zip(model.parameter_names(), params)],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for p in params:
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_model(path) -> ScoringModel:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a model checkpoint")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        config = ModelConfig(**header["config"])
        model = ScoringModel.zeros(config, s_entry=float(header["s_entry"]))
        params = model.parameters()
        if len(params) != len(header["tensors"]):
            raise ValueError(f"{path}: tensor count mismatch")
        for p, spec in zip(params, header["tensors"]):
            if list(p.shape) != spec["shape"]:
                raise ValueError(f"{path}: tensor {spec['name']} has unexpected shape")
            raw = fh.read(p.size * 8)
            p[...] = np.frombuffer(raw, dtype="<f8").reshape(p.shape).astype(config.np_dtype)
    return model
