"""Pointwise fully connected classifier: (x, grad phi^1..N at x) -> inside
probability, trained with cross-entropy over random sample/point minibatches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import CartesianGrid, IndexField
from . import engine as E
from .params import ParameterStore, sgd_step, uniform_init


@dataclass(frozen=True)
class FnnConfig:
    n_pairs: int
    width: int = 64
    blocks: int = 6
    gaussian_blocks: int | None = None  # None picks blocks // 2
    bandwidth: float = 0.5
    alpha: float = 0.2
    batch_samples: int = 16
    batch_points: int = 1024
    iterations: int = 20000
    eval_every: int = 250
    target_accuracy: float | None = None

    def __post_init__(self):
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")
        if self.input_length > self.width:
            raise ValueError(
                f"width {self.width} shorter than input length {self.input_length}"
            )
        if self.n_gaussian > self.blocks:
            raise ValueError("gaussian_blocks exceeds blocks")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")

    @property
    def input_length(self) -> int:
        return 2 * self.n_pairs + 2

    @property
    def n_gaussian(self) -> int:
        return self.blocks // 2 if self.gaussian_blocks is None else self.gaussian_blocks


def build_input(x, grads, n_pairs: int, width: int | None = None) -> np.ndarray:
    """Feature vector [x1, x2, dx phi^1..N, dy phi^1..N], zero-padded to width."""
    if len(grads) != n_pairs:
        raise ValueError(f"expected {n_pairs} gradient pairs, got {len(grads)}")
    vec = np.empty(2 * n_pairs + 2)
    vec[0], vec[1] = x
    for w, (gx, gy) in enumerate(grads):
        vec[2 + w] = gx
        vec[2 + n_pairs + w] = gy
    if width is None:
        return vec
    out = np.zeros(width)
    out[: vec.size] = vec
    return out


def node_features(grid: CartesianGrid, grad_stack) -> np.ndarray:
    """(n_nodes, 2N+2) per-node inputs in build_input layout."""
    n = len(grad_stack)
    x1, x2 = grid.coords()
    feats = np.empty((grid.n_nodes, 2 * n + 2))
    feats[:, 0] = x1.ravel()
    feats[:, 1] = x2.ravel()
    for w, vf in enumerate(grad_stack):
        feats[:, 2 + w] = vf.dx_values.ravel()
        feats[:, 2 + n + w] = vf.dy_values.ravel()
    return feats


class FnnModel:
    """Residual-block classifier over padded feature vectors.

    Blocks compute act(W2 act(W1 z + b1) + b2) + z; the first
    config.n_gaussian blocks use the bell activation, the rest the clipped
    linear one.  The head maps to two logits whose softmax is the
    inside/outside probability pair.
    """

    def __init__(self, config: FnnConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.store = ParameterStore()
        w = config.width
        if rng is None:
            rng = np.random.default_rng(0)
        add = self.store.add_param
        add("psi_in.weight", uniform_init(rng, (w, w), w))
        add("psi_in.bias", np.zeros(w))
        for i in range(config.blocks):
            add(f"block{i}.weight1", uniform_init(rng, (w, w), w))
            add(f"block{i}.bias1", np.zeros(w))
            add(f"block{i}.weight2", uniform_init(rng, (w, w), w))
            add(f"block{i}.bias2", np.zeros(w))
        add("psi_out.weight", uniform_init(rng, (2, w), w))
        add("psi_out.bias", np.zeros(2))

    def _act(self, z: E.Tensor, block: int) -> E.Tensor:
        if block < self.config.n_gaussian:
            return E.gaussian_activation(z, self.config.bandwidth)
        return E.clipped_relu(z)

    def logits(self, batch: E.Tensor) -> E.Tensor:
        p = self.store.params
        z = E.dense(batch, p["psi_in.weight"], p["psi_in.bias"])
        for i in range(self.config.blocks):
            h = self._act(E.dense(z, p[f"block{i}.weight1"], p[f"block{i}.bias1"]), i)
            h = self._act(E.dense(h, p[f"block{i}.weight2"], p[f"block{i}.bias2"]), i)
            z = h + z
        return E.dense(z, p["psi_out.weight"], p["psi_out.bias"])

    def forward(self, inputs) -> np.ndarray:
        """Probabilities (batch, 2) with columns (p_inside, p_outside)."""
        arr = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        if arr.shape[1] < self.config.width:
            pad = np.zeros((arr.shape[0], self.config.width))
            pad[:, : arr.shape[1]] = arr
            arr = pad
        with E.no_grad():
            return E.softmax(self.logits(E.Tensor(arr))).values

    def predict_field(self, grid: CartesianGrid, grad_stack) -> IndexField:
        feats = node_features(grid, grad_stack)
        probs = self.forward(feats)
        return IndexField(grid, probs[:, 0].reshape(grid.shape))


def _pad_batch(feats: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((feats.shape[0], width))
    out[:, : feats.shape[1]] = feats
    return out


class FnnTrainingData:
    """In-memory (features, labels) pool drawn from an EITD dataset."""

    def __init__(self, dataset, n_pairs: int, sample_indices=None):
        idx = range(len(dataset)) if sample_indices is None else sample_indices
        self.indices = list(idx)
        grid = dataset.grid
        x1, x2 = grid.coords()
        self.coords = np.column_stack([x1.ravel(), x2.ravel()])
        n = n_pairs
        feats, labels = [], []
        for s in self.indices:
            rec = dataset.record(s)
            f = np.empty((grid.n_nodes, 2 * n))
            for w in range(n):
                f[:, w] = np.asarray(rec["dphi_dx"][w]).ravel()
                f[:, n + w] = np.asarray(rec["dphi_dy"][w]).ravel()
            feats.append(f)
            labels.append(np.asarray(rec["truth"]).ravel() >= 0.5)
        self.grads = np.stack(feats)           # (S, nodes, 2N)
        self.labels = np.stack(labels)         # (S, nodes) bool
        self.n_pairs = n

    @property
    def n_samples(self) -> int:
        return self.grads.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.grads.shape[1]

    def batch(self, s_idx, k_idx, width: int):
        g = self.grads[s_idx][:, k_idx, :]           # (s, k, 2N)
        c = np.broadcast_to(self.coords[k_idx], (len(s_idx), len(k_idx), 2))
        feats = np.concatenate([c, g], axis=2).reshape(len(s_idx) * len(k_idx), -1)
        labels = np.where(self.labels[s_idx][:, k_idx].ravel(), 0, 1)
        return _pad_batch(feats, width), labels

    def full_accuracy(self, model: FnnModel) -> float:
        """Pointwise accuracy at threshold 0.5 over the whole pool."""
        hits = 0
        for s in range(self.n_samples):
            feats = np.concatenate([self.coords, self.grads[s]], axis=1)
            probs = model.forward(feats)
            hits += int(((probs[:, 0] > 0.5) == self.labels[s]).sum())
        return hits / (self.n_samples * self.n_nodes)


def train(dataset, config: FnnConfig, seed: int, sample_indices=None,
          checkpoint_path: str | None = None, log=None):
    """SGD over random (samples x points) minibatches; label 0 is inside.

    Returns (model, loss_trace, accuracy).  Deterministic for a given seed;
    a NaN loss aborts with the iteration index.  When
    config.target_accuracy is set, training stops at the first evaluation
    (every config.eval_every iterations) that reaches it.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    model = FnnModel(config, rng)
    data = dataset if isinstance(dataset, FnnTrainingData) else FnnTrainingData(
        dataset, config.n_pairs, sample_indices)
    if data.n_pairs != config.n_pairs:
        raise ValueError(
            f"data built for N={data.n_pairs}, config expects N={config.n_pairs}")
    n_s = min(config.batch_samples, data.n_samples)
    n_k = min(config.batch_points, data.n_nodes)
    trace = []
    accuracy = None
    for it in range(config.iterations):
        s_idx = rng.choice(data.n_samples, size=n_s, replace=False)
        k_idx = rng.choice(data.n_nodes, size=n_k, replace=False)
        feats, labels = data.batch(s_idx, k_idx, config.width)
        model.store.zero_grads()
        try:
            loss = E.softmax_xent(model.logits(E.Tensor(feats)), labels)
            value = loss.item()
            if np.isnan(value):
                raise E.NumericalError("NaN loss")
            E.backward(loss)
            sgd_step(model.store, config.alpha)
        except E.NumericalError as exc:
            raise E.NumericalError(
                f"training diverged at iteration {it}: {exc}") from exc
        trace.append(value)
        if (it + 1) % config.eval_every == 0:
            if config.target_accuracy is not None or log is not None:
                accuracy = data.full_accuracy(model)
            if log is not None:
                log(it + 1, value, accuracy)
            if (config.target_accuracy is not None
                    and accuracy >= config.target_accuracy):
                break
    if accuracy is None:
        accuracy = data.full_accuracy(model)
    if checkpoint_path is not None:
        model.store.save(checkpoint_path)
    return model, trace, accuracy


def load_model(config: FnnConfig, checkpoint_path: str) -> FnnModel:
    model = FnnModel(config)
    model.store.load_values_from(ParameterStore.load(checkpoint_path))
    return model
