"""Parameter storage, EITP checkpoints, SGD, and the gradient-check harness.

EITP layout (little-endian): magic "EITP" | u32 version | u64 step |
u32 entry count | entries of u32 name length | utf-8 name | u8 kind
(0 parameter, 1 buffer) | u32 ndim | u32 dims | f64 payload.  Entries are
written in insertion order, so save/load round-trips bit-exactly.
"""

from __future__ import annotations

import struct

import numpy as np

from .engine import NumericalError, Tensor, backward, no_grad

MAGIC = b"EITP"
VERSION = 1
_HEAD = struct.Struct("<4sIQI")


class CheckpointFormatError(RuntimeError):
    pass


class ParameterStore:
    """Named parameter tensors plus non-trained buffers and a step counter."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self.step = 0

    def add_param(self, name: str, values) -> Tensor:
        if name in self.params or name in self.buffers:
            raise ValueError(f"duplicate name {name!r}")
        t = Tensor(values, requires=True)
        self.params[name] = t
        return t

    def add_buffer(self, name: str, values) -> np.ndarray:
        if name in self.params or name in self.buffers:
            raise ValueError(f"duplicate name {name!r}")
        arr = np.array(values, dtype=np.float64)
        self.buffers[name] = arr
        return arr

    def zero_grads(self):
        for t in self.params.values():
            t.grad = None

    def n_parameters(self) -> int:
        return sum(t.size for t in self.params.values())

    def save(self, path: str):
        with open(path, "wb") as fh:
            fh.write(_HEAD.pack(MAGIC, VERSION, self.step,
                                len(self.params) + len(self.buffers)))
            for kind, table in ((0, self.params), (1, self.buffers)):
                for name, entry in table.items():
                    arr = entry.values if kind == 0 else entry
                    raw = name.encode("utf-8")
                    fh.write(struct.pack("<I", len(raw)))
                    fh.write(raw)
                    fh.write(struct.pack("<BI", kind, arr.ndim))
                    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
                    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str) -> "ParameterStore":
        store = cls()
        with open(path, "rb") as fh:
            head = fh.read(_HEAD.size)
            if len(head) < _HEAD.size:
                raise CheckpointFormatError(f"{path}: truncated header")
            magic, version, step, count = _HEAD.unpack(head)
            if magic != MAGIC:
                raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
            if version != VERSION:
                raise CheckpointFormatError(f"{path}: unsupported version {version}")
            store.step = step
            for _ in range(count):
                (nlen,) = struct.unpack("<I", fh.read(4))
                name = fh.read(nlen).decode("utf-8")
                kind, ndim = struct.unpack("<BI", fh.read(5))
                dims = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
                n = int(np.prod(dims)) if ndim else 1
                data = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(dims)
                if kind == 0:
                    store.add_param(name, data)
                elif kind == 1:
                    store.add_buffer(name, data)
                else:
                    raise CheckpointFormatError(f"{path}: bad entry kind {kind}")
        return store

    def load_values_from(self, other: "ParameterStore"):
        """Copy values/buffers from a store with the same names and shapes."""
        if set(other.params) != set(self.params) or set(other.buffers) != set(self.buffers):
            raise CheckpointFormatError("checkpoint names do not match the model")
        for name, t in self.params.items():
            src = other.params[name].values
            if src.shape != t.values.shape:
                raise CheckpointFormatError(f"{name}: shape {src.shape} vs {t.values.shape}")
            t.values[...] = src
        for name, arr in self.buffers.items():
            src = other.buffers[name]
            if src.shape != arr.shape:
                raise CheckpointFormatError(f"{name}: shape {src.shape} vs {arr.shape}")
            arr[...] = src
        self.step = other.step


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """Symmetric uniform in [-1, 1]/sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def sgd_step(store: ParameterStore, alpha: float, momentum: float = 0.0,
             velocity: dict | None = None):
    """Plain gradient descent on every parameter, insertion order.

    Momentum is off by default; pass a persistent velocity dict to enable it.
    Parameters with no gradient are left unchanged.
    """
    if alpha <= 0:
        raise ValueError(f"learning rate must be positive, got {alpha}")
    for name, t in store.params.items():
        if t.grad is None:
            continue
        g = t.grad
        if momentum > 0.0:
            if velocity is None:
                raise ValueError("momentum needs a velocity dict")
            v = velocity.get(name)
            if v is None:
                v = np.zeros_like(t.values)
                velocity[name] = v
            v *= momentum
            v += g
            g = v
        t.values -= alpha * g
        if not np.all(np.isfinite(t.values)):
            raise NumericalError(f"parameter {name!r} left the finite range")
    store.step += 1


class GradCheckReport:
    def __init__(self):
        self.per_tensor: dict[str, float] = {}
        self.max_rel_error = 0.0

    def record(self, name: str, err: float):
        self.per_tensor[name] = err
        self.max_rel_error = max(self.max_rel_error, err)

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_error <= tolerance

    def __repr__(self):
        rows = ", ".join(f"{k}={v:.3e}" for k, v in self.per_tensor.items())
        return f"GradCheckReport(max={self.max_rel_error:.3e}, {rows})"


def grad_check(loss_fn, wrt: dict, step: float = 1e-6,
               max_entries: int | None = None) -> GradCheckReport:
    """Compare backward() against central differences.

    loss_fn re-evaluates the scalar loss from the current values of the
    tensors in wrt (a name -> Tensor dict).  The error measure is
    |ad - fd| / max(1, |ad|, |fd|) per coordinate, so small-magnitude
    gradients are compared absolutely.  max_entries caps the coordinates
    probed per tensor (leading coordinates), for big filters.
    """
    for t in wrt.values():
        t.grad = None
    loss = loss_fn()
    backward(loss)
    analytic = {}
    for name, t in wrt.items():
        analytic[name] = (np.zeros_like(t.values) if t.grad is None
                          else t.grad.copy())
    report = GradCheckReport()
    with no_grad():
        for name, t in wrt.items():
            flat = t.values.reshape(-1)
            ga = analytic[name].reshape(-1)
            count = flat.size if max_entries is None else min(flat.size, max_entries)
            worst = 0.0
            for i in range(count):
                keep = flat[i]
                flat[i] = keep + step
                up = float(loss_fn().values)
                flat[i] = keep - step
                dn = float(loss_fn().values)
                flat[i] = keep
                fd = (up - dn) / (2.0 * step)
                err = abs(ga[i] - fd) / max(1.0, abs(ga[i]), abs(fd))
                worst = max(worst, err)
            report.record(name, worst)
    return report
