"""Gradient-check suite: every differentiable layer against central
differences, plus full toy instances of both networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine as E
from .cnn import CnnConfig, CnnModel
from .fnn import FnnConfig, FnnModel
from .params import grad_check

LAYER_TOL = 1e-5
MODEL_TOL = 1e-4


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


def run_layer_checks(seed: int = 12345) -> list:
    """Per-op central-difference checks on random small shapes."""
    rng = np.random.default_rng(seed)
    out = []

    def add(name, fn, wrt, tol=LAYER_TOL):
        rep = grad_check(fn, wrt)
        out.append(CheckResult(name, rep.max_rel_error, tol))

    z = E.Tensor(rng.standard_normal((4, 8)), requires=True)
    w = E.Tensor(rng.standard_normal((8, 8)) * 0.3, requires=True)
    b = E.Tensor(rng.standard_normal(8) * 0.1, requires=True)
    tgt = E.Tensor(rng.standard_normal((4, 8)))
    add("dense", lambda: E.mse(E.dense(z, w, b), tgt), {"z": z, "w": w, "b": b})
    add("gaussian_activation",
        lambda: E.mse(E.gaussian_activation(E.dense(z, w, b), 0.5), tgt),
        {"z": z, "w": w, "b": b})
    zr = E.Tensor(rng.uniform(-0.3, 0.4, (5, 6)), requires=True)
    tr = E.Tensor(rng.standard_normal((5, 6)))
    add("clipped_relu", lambda: E.mse(E.clipped_relu(zr), tr), {"z": zr})
    zs = E.Tensor(rng.standard_normal((6, 2)), requires=True)
    add("sigmoid", lambda: E.mse(E.sigmoid(zs), E.Tensor(np.full((6, 2), 0.4))),
        {"z": zs})
    add("softmax", lambda: E.mse(E.softmax(zs), E.Tensor(np.full((6, 2), 0.5))),
        {"z": zs})
    labels = rng.integers(0, 2, 6)
    add("softmax_xent", lambda: E.softmax_xent(zs, labels), {"logits": zs})
    x = E.Tensor(rng.standard_normal((2, 6, 6, 3)), requires=True)
    wc = E.Tensor(rng.standard_normal((3, 3, 3, 4)) * 0.2, requires=True)
    bc = E.Tensor(rng.standard_normal(4) * 0.1, requires=True)
    tc = E.Tensor(rng.standard_normal((2, 6, 6, 4)))
    add("conv2d", lambda: E.mse(E.conv2d(x, wc, bc), tc),
        {"x": x, "w": wc, "b": bc})
    xp = E.Tensor(rng.standard_normal((2, 4, 4, 3)), requires=True)
    tp = E.Tensor(rng.standard_normal((2, 2, 2, 3)))
    add("maxpool2", lambda: E.mse(E.maxpool2(xp), tp), {"x": xp})
    xb = E.Tensor(rng.standard_normal((4, 3, 3, 2)) * 2 + 1, requires=True)
    sc = E.Tensor(np.ones(2) + 0.3 * rng.standard_normal(2), requires=True)
    sh = E.Tensor(0.2 * rng.standard_normal(2), requires=True)
    rm, rv = np.zeros(2), np.ones(2)
    tb = E.Tensor(rng.standard_normal((4, 3, 3, 2)))
    add("batchnorm_train",
        lambda: E.mse(E.batchnorm(xb, sc, sh, rm, rv, train=True,
                                  update_running=False), tb),
        {"x": xb, "scale": sc, "shift": sh})
    add("batchnorm_eval",
        lambda: E.mse(E.batchnorm(xb, sc, sh, rm, rv, train=False), tb),
        {"x": xb, "scale": sc, "shift": sh})
    xt = E.Tensor(rng.standard_normal((2, 3, 3, 4)), requires=True)
    wt = E.Tensor(rng.standard_normal((2, 2, 5, 4)) * 0.3, requires=True)
    bt = E.Tensor(rng.standard_normal(5) * 0.1, requires=True)
    tt = E.Tensor(rng.standard_normal((2, 6, 6, 5)))
    add("transposed_conv2d", lambda: E.mse(E.transposed_conv2d(xt, wt, bt), tt),
        {"x": xt, "w": wt, "b": bt})
    ca = E.Tensor(rng.standard_normal((2, 2, 2, 2)), requires=True)
    cb = E.Tensor(rng.standard_normal((2, 2, 2, 3)), requires=True)
    tcc = E.Tensor(rng.standard_normal((2, 2, 2, 5)))
    add("concat", lambda: E.mse(E.concat(ca, cb), tcc), {"a": ca, "b": cb})
    return out


def run_model_checks(seed: int = 2468) -> list:
    """Full-network loss gradients on toy instances (train mode, batch
    statistics frozen for the CNN)."""
    rng = np.random.default_rng(seed)
    out = []

    fnn = FnnModel(FnnConfig(n_pairs=1, width=8, blocks=2), rng)
    raw = rng.standard_normal((6, 4))
    zb = E.Tensor(np.pad(raw, ((0, 0), (0, 4))), requires=True)
    labels = rng.integers(0, 2, 6)
    rep = grad_check(lambda: E.softmax_xent(fnn.logits(zb), labels),
                     {"input": zb, **fnn.store.params})
    out.append(CheckResult("fnn_toy_full", rep.max_rel_error, MODEL_TOL))

    cnn = CnnModel(CnnConfig(n_pairs=1, blocks=1, channels=(4,)), rng)
    xc = E.Tensor(rng.standard_normal((2, 8, 8, 3)), requires=True)
    yc = E.Tensor((rng.uniform(size=(2, 8, 8, 1)) > 0.7).astype(float))
    rep = grad_check(
        lambda: E.mse(cnn.forward(xc, train=True, update_running=False), yc),
        {"input": xc, **cnn.store.params})
    out.append(CheckResult("cnn_toy_full", rep.max_rel_error, MODEL_TOL))
    return out


def run_all(seed: int = 12345) -> list:
    return run_layer_checks(seed) + run_model_checks(seed * 2 + 1)
