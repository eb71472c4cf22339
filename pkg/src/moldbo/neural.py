"""Variational graph autoencoder over molded configurations.

Per-variable one-layer projections lift one-hot or unit-scaled features to a
shared width.  Each candidate graph owns a two-layer graph-convolutional
encoder whose readout is the attached global node; affine heads produce the
mean and log-variance of a Gaussian latent.  A single two-layer decoder,
shared across all encoders, maps latents back to per-variable raw outputs.

Training minimizes a weighted sum of three parts: the variational loss
(Gaussian KL plus rank-weighted feature reconstruction), a log-ratio metric
loss aligning latent distance ratios with objective difference ratios, and
an orthogonality penalty on the graph-convolution weights.

Parameter tensors live in ``model.params`` as plain arrays.  Differentiable
passes wrap them in graph tensors held on a per-model tape; loss functions
leave the tape in place so callers can run backward and read gradients, and
every pure evaluation entry point clears it on exit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, constant, graph_prop, parameter, stack
from .graphmold import MoldedGraph, attach_global_node
from .space import MixedSpace, encode_features

CHECKPOINT_FORMAT = "moldbo-checkpoint-1"
EPS = 1e-8
SQRT_GUARD = 1e-16


class NeuralError(ValueError):
    """Base class for model errors."""


class SlotOutOfRangeError(NeuralError):
    """Raised when an encoder index is not in range(n_slots)."""


class EmptyBatchError(NeuralError):
    """Raised when a loss is requested on an empty batch."""


class NonFiniteLossError(NeuralError):
    """Raised when training encounters a non-finite loss."""


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and optimizer constants for the generative model."""

    feature_dim: int = 8
    hidden_dim: int = 16
    latent_dim: int = 4
    decoder_hidden: int = 16
    learning_rate: float = 1e-2
    moment_decay: tuple[float, float] = (0.9, 0.999)
    metric_weight: float = 0.1
    orth_weight: float = 0.1
    rank_smoothing: float = 1e-2


def normalized_adjacency(graph: MoldedGraph) -> np.ndarray:
    """Row-normalized augmented adjacency for message passing.

    Row i aggregates from in-neighbors of i plus itself, each with weight
    1/in-degree.  The global readout node receives from every variable node
    and sends to none.
    """
    a = attach_global_node(graph)
    m = a.T + np.eye(graph.n + 1)
    return m / m.sum(axis=1, keepdims=True)


class VgaeModel:
    """Parameter container: shared projections and decoder, per-slot encoders."""

    def __init__(
        self,
        space: MixedSpace,
        n_slots: int,
        rng: np.random.Generator,
        config: ModelConfig = ModelConfig(),
    ):
        self.space = space
        self.n_slots = int(n_slots)
        self.config = config
        self.params: dict[str, np.ndarray] = {}
        self._adam_m: dict[str, np.ndarray] = {}
        self._adam_v: dict[str, np.ndarray] = {}
        self._adam_t: dict[str, int] = {}
        self._tape: dict[str, Tensor] | None = None
        for i, var in enumerate(space.variables):
            self._init_param(f"proj_w_{i}", (var.feature_width, config.feature_dim), rng)
            self._init_bias(f"proj_b_{i}", config.feature_dim)
        for k in range(self.n_slots):
            self._init_encoder(k, rng)
        self._init_param("dec_w1", (config.latent_dim, config.decoder_hidden), rng)
        self._init_bias("dec_b1", config.decoder_hidden)
        self._init_param("dec_w2", (config.decoder_hidden, space.feature_length), rng)
        self._init_bias("dec_b2", space.feature_length)

    def _init_param(self, name: str, shape: tuple[int, int], rng) -> None:
        bound = 1.0 / np.sqrt(shape[0])
        self.params[name] = rng.uniform(-bound, bound, size=shape)
        self._adam_m[name] = np.zeros(shape)
        self._adam_v[name] = np.zeros(shape)
        self._adam_t[name] = 0

    def _init_bias(self, name: str, width: int) -> None:
        self.params[name] = np.zeros(width)
        self._adam_m[name] = np.zeros(width)
        self._adam_v[name] = np.zeros(width)
        self._adam_t[name] = 0

    def _init_encoder(self, slot: int, rng: np.random.Generator) -> None:
        cfg = self.config
        self._init_param(f"enc{slot}_w1", (cfg.feature_dim, cfg.hidden_dim), rng)
        self._init_param(f"enc{slot}_w2", (cfg.hidden_dim, cfg.hidden_dim), rng)
        self._init_param(f"enc{slot}_mu_w", (cfg.hidden_dim, cfg.latent_dim), rng)
        self._init_bias(f"enc{slot}_mu_b", cfg.latent_dim)
        self._init_param(f"enc{slot}_lv_w", (cfg.hidden_dim, cfg.latent_dim), rng)
        self._init_bias(f"enc{slot}_lv_b", cfg.latent_dim)

    def encoder_keys(self, slot: int) -> list[str]:
        return [
            f"enc{slot}_w1", f"enc{slot}_w2",
            f"enc{slot}_mu_w", f"enc{slot}_mu_b",
            f"enc{slot}_lv_w", f"enc{slot}_lv_b",
        ]

    def shared_keys(self) -> list[str]:
        keys = []
        for i in range(self.space.dim):
            keys += [f"proj_w_{i}", f"proj_b_{i}"]
        keys += ["dec_w1", "dec_b1", "dec_w2", "dec_b2"]
        return keys

    def trainable_keys(self, slot: int) -> list[str]:
        """Selected slot's encoder plus everything shared."""
        return self.encoder_keys(slot) + self.shared_keys()

    def check_slot(self, slot: int) -> None:
        if not 0 <= slot < self.n_slots:
            raise SlotOutOfRangeError(f"slot {slot} outside 0..{self.n_slots - 1}")

    def reinit_slot(self, slot: int, rng: np.random.Generator) -> None:
        """Fresh parameters and optimizer state for one encoder only."""
        self.check_slot(slot)
        self._init_encoder(slot, rng)
        clear_tape(self)


def _p(model: VgaeModel, name: str) -> Tensor:
    """Graph tensor for one parameter on the model's current tape."""
    if model._tape is None:
        model._tape = {}
    tape = model._tape
    if name not in tape:
        tape[name] = parameter(model.params[name])
    return tape[name]


def clear_tape(model: VgaeModel) -> None:
    model._tape = None


def parameter_gradients(model: VgaeModel) -> dict[str, np.ndarray]:
    """Gradients accumulated on the live tape by the last backward pass."""
    if model._tape is None:
        return {}
    return {
        name: t.grad for name, t in model._tape.items() if t.grad is not None
    }


@dataclass
class TrainBatch:
    """Full-batch training data with rank weights and metric pairings.

    ``features`` holds one (N, width_i) matrix per variable.  ``pos_index``
    and ``neg_index`` give, per anchor, the batch member with the smallest
    and largest objective difference.
    """

    features: list[np.ndarray]
    f_values: np.ndarray
    weights: np.ndarray
    pos_index: np.ndarray
    neg_index: np.ndarray

    @property
    def size(self) -> int:
        return self.f_values.size


def rank_weights(f_values, smoothing: float = 1e-2) -> np.ndarray:
    """Per-sample weights proportional to 1/(kN + rank), normalized to mean 1.

    rank(x) counts strictly better points under maximization, so the best
    point has rank 0 and ties share a rank.
    """
    f = np.asarray(f_values, dtype=float)
    n = f.size
    ranks = (f[None, :] > f[:, None]).sum(axis=1).astype(float)
    w = 1.0 / (smoothing * n + ranks)
    return w / w.mean()


def batch_from_features(
    features: list[np.ndarray], f_values, smoothing: float = 1e-2
) -> TrainBatch:
    """Assemble a batch from prebuilt per-variable feature matrices."""
    f = np.asarray(f_values, dtype=float)
    if f.size == 0:
        raise EmptyBatchError("no samples")
    if f.size == 1:
        pos = np.array([0])
        neg = np.array([0])
    else:
        diffs = np.abs(f[:, None] - f[None, :])
        np.fill_diagonal(diffs, np.inf)
        pos = diffs.argmin(axis=1)
        np.fill_diagonal(diffs, -np.inf)
        neg = diffs.argmax(axis=1)
    return TrainBatch(
        features=[np.asarray(m, dtype=float) for m in features],
        f_values=f,
        weights=rank_weights(f, smoothing),
        pos_index=pos,
        neg_index=neg,
    )


def stack_features(space: MixedSpace, configs) -> list[np.ndarray]:
    """Per-variable feature matrices for a list of configurations."""
    per_sample = [encode_features(space, cfg) for cfg in configs]
    return [
        np.stack([rows[i] for rows in per_sample]) for i in range(space.dim)
    ]


def make_train_batch(
    space: MixedSpace, configs, f_values, smoothing: float = 1e-2
) -> TrainBatch:
    """Encode configurations and assemble the training batch."""
    if len(configs) == 0:
        raise EmptyBatchError("no configurations")
    return batch_from_features(stack_features(space, configs), f_values, smoothing)


def _project(model: VgaeModel, features: list[np.ndarray]) -> Tensor:
    """Lift per-variable features to (N, nodes+1, F) with a zero global row."""
    n_samples = features[0].shape[0]
    rows = []
    for i in range(model.space.dim):
        w = _p(model, f"proj_w_{i}")
        b = _p(model, f"proj_b_{i}")
        rows.append(constant(features[i]) @ w + b)
    rows.append(constant(np.zeros((n_samples, model.config.feature_dim))))
    return stack(rows, axis=1)


def gcn_forward(model: VgaeModel, slot: int, adj: np.ndarray, h0: Tensor) -> Tensor:
    """Two rectified graph-convolution layers over the augmented adjacency."""
    h1 = (graph_prop(adj, h0) @ _p(model, f"enc{slot}_w1")).relu()
    h2 = (graph_prop(adj, h1) @ _p(model, f"enc{slot}_w2")).relu()
    return h2


def encode_tensors(
    model: VgaeModel, slot: int, adj: np.ndarray, features: list[np.ndarray]
) -> tuple[Tensor, Tensor]:
    """Batched (mu, logvar) read from the global node, as graph tensors."""
    model.check_slot(slot)
    h0 = _project(model, features)
    hidden = gcn_forward(model, slot, adj, h0)
    readout = hidden[:, model.space.dim, :]
    mu = readout @ _p(model, f"enc{slot}_mu_w") + _p(model, f"enc{slot}_mu_b")
    logvar = readout @ _p(model, f"enc{slot}_lv_w") + _p(model, f"enc{slot}_lv_b")
    return mu, logvar


def _as_adjacency(model: VgaeModel, graph_or_adj) -> np.ndarray:
    if isinstance(graph_or_adj, MoldedGraph):
        return normalized_adjacency(graph_or_adj)
    adj = np.asarray(graph_or_adj, dtype=float)
    expected = model.space.dim + 1
    if adj.shape != (expected, expected):
        raise NeuralError(f"adjacency must be {expected}x{expected}")
    return adj


def gcn_encode(
    model: VgaeModel, slot: int, graph_or_adj, values
) -> tuple[np.ndarray, np.ndarray]:
    """Encode one configuration; returns (mu, logvar) as arrays."""
    adj = _as_adjacency(model, graph_or_adj)
    rows = encode_features(model.space, values)
    features = [row[np.newaxis, :] for row in rows]
    mu, logvar = encode_tensors(model, slot, adj, features)
    out = mu.data[0].copy(), logvar.data[0].copy()
    clear_tape(model)
    return out


def encode_mu(
    model: VgaeModel, slot: int, graph_or_adj, features: list[np.ndarray]
) -> np.ndarray:
    """Deterministic latents (posterior means) for prebuilt feature matrices."""
    adj = _as_adjacency(model, graph_or_adj)
    mu, _ = encode_tensors(model, slot, adj, features)
    out = mu.data.copy()
    clear_tape(model)
    return out


def encode_dataset(
    model: VgaeModel, slot: int, graph_or_adj, configs
) -> np.ndarray:
    """Deterministic latents for a list of configurations."""
    return encode_mu(
        model, slot, graph_or_adj, stack_features(model.space, configs)
    )


def reparameterize(mu, logvar, rng: np.random.Generator) -> np.ndarray:
    """z = mu + exp(logvar / 2) * standard normal noise."""
    mu = np.asarray(mu, dtype=float)
    logvar = np.asarray(logvar, dtype=float)
    return mu + np.exp(logvar / 2.0) * rng.standard_normal(mu.shape)


def decoder_forward(model: VgaeModel, z: Tensor) -> Tensor:
    """Shared decoder: latent rows to flat raw outputs."""
    h = (z @ _p(model, "dec_w1") + _p(model, "dec_b1")).relu()
    return h @ _p(model, "dec_w2") + _p(model, "dec_b2")


def decode(model: VgaeModel, z) -> tuple[tuple, np.ndarray]:
    """Map one latent to a valid configuration.

    Discrete heads take the argmax score with ties broken to the lowest
    index; continuous outputs are clamped to [0, 1] and rescaled to their
    bounds.  Returns (configuration, raw output row).
    """
    z = np.asarray(z, dtype=float).reshape(1, -1)
    raw = decoder_forward(model, constant(z)).data[0].copy()
    clear_tape(model)
    values = []
    offset = 0
    for var in model.space.variables:
        width = var.feature_width
        head = raw[offset : offset + width]
        if var.is_discrete:
            values.append(int(np.argmax(head)))
        else:
            unit = float(np.clip(head[0], 0.0, 1.0))
            values.append(var.from_unit(unit))
        offset += width
    return tuple(values), raw


def _vae_parts(
    model: VgaeModel, slot: int, batch: TrainBatch, adj: np.ndarray, noise: np.ndarray
) -> tuple[Tensor, Tensor]:
    """Shared forward pass: returns (vae loss, sampled latents)."""
    mu, logvar = encode_tensors(model, slot, adj, batch.features)
    z = mu + (logvar * 0.5).exp() * constant(noise)
    raw = decoder_forward(model, z)

    kl_rows = ((mu * mu + logvar.exp() - 1.0 - logvar) * 0.5).sum(axis=1)
    recon_rows = None
    offset = 0
    for i, var in enumerate(model.space.variables):
        width = var.feature_width
        head = raw[:, offset : offset + width]
        target = constant(batch.features[i])
        if var.is_discrete:
            err = head.softmax(axis=1) - target
        else:
            err = head - target
        row = (err * err).sum(axis=1)
        recon_rows = row if recon_rows is None else recon_rows + row
        offset += width
    vae = kl_rows.mean() + (recon_rows * constant(batch.weights)).mean()
    return vae, z


def vae_loss(
    model: VgaeModel, slot: int, batch: TrainBatch, adj, noise: np.ndarray
) -> Tensor:
    """Gaussian KL to the standard normal prior plus weighted reconstruction.

    Reconstruction is the Brier score between each softmaxed discrete head
    and its one-hot target plus squared error on unit-scaled continuous
    outputs, each sample multiplied by its rank weight.  Both parts are
    averaged over the batch.
    """
    if batch.size == 0:
        raise EmptyBatchError("empty batch")
    model.check_slot(slot)
    vae, _ = _vae_parts(model, slot, batch, _as_adjacency(model, adj), noise)
    return vae


def log_ratio_loss(z: Tensor, f_values, pos_index, neg_index) -> Tensor:
    """Squared gap between latent distance log-ratios and objective log-ratios.

    Every batch member anchors one term using its nearest and farthest
    neighbors by objective difference.  A small constant guards each norm
    and each absolute difference; batches without a distinct pair return 0.
    """
    f = np.asarray(f_values, dtype=float)
    if f.size < 2:
        return constant(0.0)
    d_pos = _pair_distance(z, pos_index)
    d_neg = _pair_distance(z, neg_index)
    f_pos = np.abs(f - f[pos_index]) + EPS
    f_neg = np.abs(f - f[neg_index]) + EPS
    target = constant(np.log(f_neg) - np.log(f_pos))
    gap = (d_neg + EPS).log() - (d_pos + EPS).log() - target
    return (gap * gap).mean()


def _pair_distance(z: Tensor, index) -> Tensor:
    diff = z - z[index]
    return ((diff * diff).sum(axis=1) + SQRT_GUARD).sqrt()


def orth_reg(model: VgaeModel, slot: int) -> Tensor:
    """Sum of squared Frobenius distances of W^T W from the identity."""
    model.check_slot(slot)
    total = None
    for name in (f"enc{slot}_w1", f"enc{slot}_w2"):
        w = _p(model, name)
        gram = w.transpose() @ w
        delta = gram - constant(np.eye(gram.shape[0]))
        term = (delta * delta).sum()
        total = term if total is None else total + term
    return total


def loss_total(
    model: VgaeModel,
    slot: int,
    batch: TrainBatch,
    adj,
    noise: np.ndarray,
    metric_weight: float | None = None,
    orth_weight: float | None = None,
) -> Tensor:
    """Variational loss plus weighted metric and orthogonality terms.

    The metric term reuses the sampled latents from the reconstruction pass,
    so one forward graph serves all three components.
    """
    if batch.size == 0:
        raise EmptyBatchError("empty batch")
    model.check_slot(slot)
    a = model.config.metric_weight if metric_weight is None else metric_weight
    b = model.config.orth_weight if orth_weight is None else orth_weight
    vae, z = _vae_parts(model, slot, batch, _as_adjacency(model, adj), noise)
    metric = log_ratio_loss(z, batch.f_values, batch.pos_index, batch.neg_index)
    return vae + a * metric + b * orth_reg(model, slot)


def _adam_step(model: VgaeModel, keys: list[str], grads: dict[str, np.ndarray]) -> None:
    lr = model.config.learning_rate
    b1, b2 = model.config.moment_decay
    for key in keys:
        if key not in grads:
            continue
        g = grads[key]
        model._adam_t[key] += 1
        t = model._adam_t[key]
        m = model._adam_m[key] = b1 * model._adam_m[key] + (1 - b1) * g
        v = model._adam_v[key] = b2 * model._adam_v[key] + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        model.params[key] = model.params[key] - lr * m_hat / (np.sqrt(v_hat) + 1e-8)


def train(
    model: VgaeModel,
    slot: int,
    batch: TrainBatch,
    graph_or_adj,
    epochs: int,
    rng: np.random.Generator,
) -> list[float]:
    """Full-batch passes on one slot's encoder plus the shared parameters.

    One adaptive-moment step runs per epoch with fresh reparameterization
    noise.  Returns the loss value observed at each epoch.
    """
    model.check_slot(slot)
    adj = _as_adjacency(model, graph_or_adj)
    keys = model.trainable_keys(slot)
    losses = []
    for _ in range(epochs):
        noise = rng.standard_normal((batch.size, model.config.latent_dim))
        clear_tape(model)
        loss = loss_total(model, slot, batch, adj, noise)
        value = float(loss.data)
        if not np.isfinite(value):
            raise NonFiniteLossError(f"loss became {value}")
        loss.backward()
        _adam_step(model, keys, parameter_gradients(model))
        clear_tape(model)
        losses.append(value)
    return losses


def warmup(
    model: VgaeModel,
    batch: TrainBatch,
    graphs_or_adjs: list,
    epochs: int,
    rng: np.random.Generator,
) -> list[float]:
    """Rotate one training pass over every slot, ``epochs`` times.

    Returns the mean loss across slots for each epoch.
    """
    adjs = [_as_adjacency(model, g) for g in graphs_or_adjs]
    if len(adjs) != model.n_slots:
        raise NeuralError("need one graph per slot")
    epoch_means = []
    for _ in range(epochs):
        values = []
        for slot in range(model.n_slots):
            values.extend(train(model, slot, batch, adjs[slot], 1, rng))
        epoch_means.append(float(np.mean(values)))
    return epoch_means


def save_checkpoint(model: VgaeModel, path: str) -> None:
    """Write all parameters and optimizer state with a format tag."""
    from .space import space_to_dict

    meta = {
        "format": CHECKPOINT_FORMAT,
        "n_slots": model.n_slots,
        "config": {
            "feature_dim": model.config.feature_dim,
            "hidden_dim": model.config.hidden_dim,
            "latent_dim": model.config.latent_dim,
            "decoder_hidden": model.config.decoder_hidden,
            "learning_rate": model.config.learning_rate,
            "moment_decay": list(model.config.moment_decay),
            "metric_weight": model.config.metric_weight,
            "orth_weight": model.config.orth_weight,
            "rank_smoothing": model.config.rank_smoothing,
        },
        "space": space_to_dict(model.space),
        "adam_t": model._adam_t,
    }
    arrays = {f"param.{k}": v for k, v in model.params.items()}
    arrays.update({f"adam_m.{k}": v for k, v in model._adam_m.items()})
    arrays.update({f"adam_v.{k}": v for k, v in model._adam_v.items()})
    with open(path, "wb") as handle:
        np.savez(handle, meta=json.dumps(meta), **arrays)


def load_checkpoint(path: str) -> VgaeModel:
    """Rebuild a model from :func:`save_checkpoint` output."""
    from .space import space_from_dict

    with np.load(path, allow_pickle=False) as payload:
        meta = json.loads(str(payload["meta"]))
        if meta["format"] != CHECKPOINT_FORMAT:
            raise NeuralError(f"unknown checkpoint format {meta['format']!r}")
        space = space_from_dict(meta["space"])
        raw_cfg = dict(meta["config"])
        raw_cfg["moment_decay"] = tuple(raw_cfg["moment_decay"])
        config = ModelConfig(**raw_cfg)
        model = VgaeModel(space, meta["n_slots"], np.random.default_rng(0), config)
        for key in list(model.params):
            model.params[key] = payload[f"param.{key}"]
            model._adam_m[key] = payload[f"adam_m.{key}"]
            model._adam_v[key] = payload[f"adam_v.{key}"]
        model._adam_t = {k: int(v) for k, v in meta["adam_t"].items()}
    return model
