"""Convolutional encoder-decoder: (N+2)-channel node image -> dense inside
probability image, trained with mean squared error against the 0/1 truth.

Input channels: [x1 plane, x2 plane, phi^1..phi^N].  Encoder blocks apply
conv3x3 (same) -> batchnorm -> sigmoid -> maxpool2; decoder blocks apply a
2x2 stride-2 transposed conv -> sigmoid -> concatenation with the matching
encoder resolution -> conv3x3 + batchnorm.  The deepest skip uses the last
pooled features, the shallowest the raw input.  A 1x1 conv plus sigmoid
produces the single-channel output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import CartesianGrid, IndexField
from . import engine as E
from .params import ParameterStore, sgd_step, uniform_init


@dataclass(frozen=True)
class CnnConfig:
    n_pairs: int
    blocks: int = 3
    channels: tuple = (16, 32, 64)
    kernel: int = 3
    alpha: float = 4.0
    batch_samples: int = 8
    iterations: int = 20000
    eval_every: int = 100
    target_loss: float | None = None

    def __post_init__(self):
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")
        if len(self.channels) != self.blocks:
            raise ValueError(
                f"{self.blocks} blocks need {self.blocks} channel counts, "
                f"got {self.channels}")
        if self.kernel % 2 == 0:
            raise ValueError("kernel size must be odd (same padding)")

    @property
    def in_channels(self) -> int:
        return self.n_pairs + 2

    def decoder_plan(self):
        """Per decoder block: (upsampled channels, skip channels, out channels).

        Skips walk the encoder back to front; the last block concatenates
        the raw input image.
        """
        plan = []
        m = self.blocks
        for i in range(m):
            if i < m - 1:
                up = self.channels[m - 2 - i]
                skip = self.channels[m - 2 - i]
            else:
                up = max(self.channels[0] // 2, 1)
                skip = self.in_channels
            plan.append((up, skip, up))
        return plan

    def check_grid(self, n1: int, n2: int):
        div = 1 << self.blocks
        if n1 % div or n2 % div:
            raise ValueError(
                f"grid {n1}x{n2} not divisible by 2^{self.blocks}; "
                "use a node count like 64 or 128 per side")


def build_input_tensor(grid: CartesianGrid, phi_stack) -> np.ndarray:
    """(n2, n1, N+2) image: coordinate planes then phi^1..phi^N."""
    n = len(phi_stack)
    x1, x2 = grid.coords()
    out = np.empty((grid.n2, grid.n1, n + 2))
    out[:, :, 0] = x1
    out[:, :, 1] = x2
    for w, sf in enumerate(phi_stack):
        if sf.grid.shape != grid.shape:
            raise ValueError("phi stack grid does not match the target grid")
        out[:, :, 2 + w] = sf.values
    return out


class CnnModel:
    def __init__(self, config: CnnConfig, rng: np.random.Generator | None = None):
        self.config = config
        self.store = ParameterStore()
        if rng is None:
            rng = np.random.default_rng(0)
        k = config.kernel
        add_p, add_b = self.store.add_param, self.store.add_buffer
        cin = config.in_channels
        for i, cout in enumerate(config.channels):
            add_p(f"enc{i}.conv.weight",
                  uniform_init(rng, (k, k, cin, cout), k * k * cin))
            add_p(f"enc{i}.conv.bias", np.zeros(cout))
            add_p(f"enc{i}.bn.scale", np.ones(cout))
            add_p(f"enc{i}.bn.shift", np.zeros(cout))
            add_b(f"enc{i}.bn.mean", np.zeros(cout))
            add_b(f"enc{i}.bn.var", np.ones(cout))
            cin = cout
        for i, (up, skip, out) in enumerate(config.decoder_plan()):
            add_p(f"dec{i}.tconv.weight",
                  uniform_init(rng, (2, 2, up, cin), 4 * cin))
            add_p(f"dec{i}.tconv.bias", np.zeros(up))
            add_p(f"dec{i}.conv.weight",
                  uniform_init(rng, (k, k, up + skip, out), k * k * (up + skip)))
            add_p(f"dec{i}.conv.bias", np.zeros(out))
            add_p(f"dec{i}.bn.scale", np.ones(out))
            add_p(f"dec{i}.bn.shift", np.zeros(out))
            add_b(f"dec{i}.bn.mean", np.zeros(out))
            add_b(f"dec{i}.bn.var", np.ones(out))
            cin = out
        add_p("head.weight", uniform_init(rng, (1, 1, cin, 1), cin))
        add_p("head.bias", np.zeros(1))

    def forward(self, x: E.Tensor, train: bool, update_running: bool = True) -> E.Tensor:
        """(B, H, W, N+2) -> (B, H, W, 1) probabilities."""
        cfg = self.config
        cfg.check_grid(x.shape[2], x.shape[1])
        p, b = self.store.params, self.store.buffers
        skips = [x]
        z = x
        for i in range(cfg.blocks):
            z = E.conv2d(z, p[f"enc{i}.conv.weight"], p[f"enc{i}.conv.bias"])
            z = E.batchnorm(z, p[f"enc{i}.bn.scale"], p[f"enc{i}.bn.shift"],
                            b[f"enc{i}.bn.mean"], b[f"enc{i}.bn.var"],
                            train=train, update_running=update_running)
            z = E.maxpool2(E.sigmoid(z))
            skips.append(z)
        for i in range(cfg.blocks):
            z = E.transposed_conv2d(z, p[f"dec{i}.tconv.weight"],
                                    p[f"dec{i}.tconv.bias"])
            z = E.sigmoid(z)
            z = E.concat(z, skips[cfg.blocks - 1 - i])
            z = E.conv2d(z, p[f"dec{i}.conv.weight"], p[f"dec{i}.conv.bias"])
            z = E.batchnorm(z, p[f"dec{i}.bn.scale"], p[f"dec{i}.bn.shift"],
                            b[f"dec{i}.bn.mean"], b[f"dec{i}.bn.var"],
                            train=train, update_running=update_running)
        z = E.conv2d(z, p["head.weight"], p["head.bias"])
        return E.sigmoid(z)

    def predict(self, image: np.ndarray) -> np.ndarray:
        """Eval-mode forward of a single (H, W, N+2) image -> (H, W)."""
        with E.no_grad():
            out = self.forward(E.Tensor(image[None]), train=False)
        return np.clip(out.values[0, :, :, 0], 0.0, 1.0)

    def predict_field(self, grid: CartesianGrid, phi_stack) -> IndexField:
        return IndexField(grid, self.predict(build_input_tensor(grid, phi_stack)))


class CnnTrainingData:
    """Lazy minibatch source over an EITD dataset (images built per draw)."""

    def __init__(self, dataset, n_pairs: int, sample_indices=None):
        idx = range(len(dataset)) if sample_indices is None else sample_indices
        self.indices = list(idx)
        self.dataset = dataset
        self.n_pairs = n_pairs
        if n_pairs > dataset.pairs:
            raise ValueError(
                f"dataset holds {dataset.pairs} pairs, config needs {n_pairs}")
        grid = dataset.grid
        x1, x2 = grid.coords()
        self._planes = np.stack([x1, x2], axis=-1)
        self.truth = np.stack([
            np.asarray(dataset.record(s)["truth"]) for s in self.indices])

    @property
    def n_samples(self) -> int:
        return len(self.indices)

    def images(self, rows) -> np.ndarray:
        """(len(rows), H, W, N+2) input images for pool rows."""
        h, w, _ = self._planes.shape
        out = np.empty((len(rows), h, w, self.n_pairs + 2))
        for j, r in enumerate(rows):
            rec = self.dataset.record(self.indices[r])
            out[j, :, :, :2] = self._planes
            for q in range(self.n_pairs):
                out[j, :, :, 2 + q] = rec["phi"][q]
        return out

    def batch(self, rows):
        x = self.images(rows)
        y = self.truth[rows][..., None]
        return x, y


def train(dataset, config: CnnConfig, seed: int, sample_indices=None,
          checkpoint_path: str | None = None, log=None):
    """Minibatch SGD on the image regression loss.

    Returns (model, loss_trace).  Deterministic per seed; NaN aborts with
    the iteration index.  config.target_loss stops at the first minibatch
    loss at or below it when checked every eval_every iterations.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    model = CnnModel(config, rng)
    data = dataset if isinstance(dataset, CnnTrainingData) else CnnTrainingData(
        dataset, config.n_pairs, sample_indices)
    n_b = min(config.batch_samples, data.n_samples)
    trace = []
    for it in range(config.iterations):
        rows = rng.choice(data.n_samples, size=n_b, replace=False)
        x, y = data.batch(rows)
        model.store.zero_grads()
        try:
            loss = E.mse(model.forward(E.Tensor(x), train=True), E.Tensor(y))
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
            if log is not None:
                log(it + 1, value)
            if config.target_loss is not None and value <= config.target_loss:
                break
    if checkpoint_path is not None:
        model.store.save(checkpoint_path)
    return model, trace


def training_mse(model: CnnModel, data: CnnTrainingData) -> float:
    """Eval-mode MSE over the whole pool (chunked)."""
    total = 0.0
    count = 0
    for start in range(0, data.n_samples, 8):
        rows = np.arange(start, min(start + 8, data.n_samples))
        x, y = data.batch(rows)
        with E.no_grad():
            pred = model.forward(E.Tensor(x), train=False).values
        total += float(((pred - y) ** 2).sum())
        count += y.size
    return total / count


def load_model(config: CnnConfig, checkpoint_path: str) -> CnnModel:
    model = CnnModel(config)
    model.store.load_values_from(ParameterStore.load(checkpoint_path))
    return model
