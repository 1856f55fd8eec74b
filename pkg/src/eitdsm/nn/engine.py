"""Reverse-mode differentiation over float64 numpy arrays.

Each op computes its result eagerly and records a closure that maps the
output adjoint to input adjoints; backward() replays the closures in exact
reverse topological order.  The graph is rebuilt every forward pass and
dropped after the step, so there is no retained tape state between
iterations.  Every op output is checked for NaN/Inf (set
EITDSM_SKIP_FINITE_CHECKS=1 to disable the scan in long runs).

Array layouts: dense activations are (batch, features); image activations
are (batch, height, width, channels); conv filters are
(kh, kw, in_channels, out_channels); transposed-conv filters are
(kh, kw, out_channels, in_channels).
"""

from __future__ import annotations

import os

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..backend import maxpool2_bwd, maxpool2_fwd


class NumericalError(RuntimeError):
    """NaN/Inf reached a tensor, or a numeric routine diverged."""


_FINITE_CHECKS = os.environ.get("EITDSM_SKIP_FINITE_CHECKS", "") != "1"
_recording = True


class no_grad:
    """Context manager: ops inside do not record backward closures."""

    def __enter__(self):
        global _recording
        self._prev = _recording
        _recording = False
        return self

    def __exit__(self, *exc):
        global _recording
        _recording = self._prev
        return False


def _checked(values, op_name):
    if _FINITE_CHECKS and not np.all(np.isfinite(values)):
        raise NumericalError(f"non-finite values produced by {op_name}")
    return values


class Tensor:
    __slots__ = ("values", "grad", "requires", "_parents", "_backward")

    def __init__(self, values, requires=False):
        self.values = np.asarray(values, dtype=np.float64)
        _checked(self.values, "tensor construction")
        self.grad = None
        self.requires = requires
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def size(self):
        return self.values.size

    def zero_grad(self):
        self.grad = None

    def item(self) -> float:
        return float(self.values)

    def _tracked(self) -> bool:
        return self.requires or bool(self._parents)

    def __add__(self, other):
        if not isinstance(other, Tensor):
            raise TypeError("tensor addition takes two tensors")
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        out = _result(self.values + other.values, "add", (self, other))
        if out._backward is not None:
            def back(gy, a=self, b=other):
                _accumulate(a, gy)
                _accumulate(b, gy)
            out._backward = back
        return out


def _result(values, op_name, parents) -> Tensor:
    """Wrap an op result; hook up a placeholder backward if recording."""
    out = Tensor(_checked(values, op_name))
    if _recording and any(p._tracked() for p in parents if isinstance(p, Tensor)):
        out._parents = tuple(p for p in parents if isinstance(p, Tensor))
        out._backward = _MISSING
    return out


def _MISSING(gy):  # placeholder; ops overwrite it right after _result
    raise RuntimeError("op did not install its backward closure")


def _accumulate(t: Tensor, grad):
    if not t._tracked():
        return
    if t.grad is None:
        t.grad = np.array(grad, dtype=np.float64, copy=True)
    else:
        t.grad += grad


def backward(loss: Tensor):
    """Backpropagate from a scalar loss through the recorded graph."""
    if loss.values.ndim != 0:
        raise ValueError("backward starts from a scalar")
    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    loss.grad = np.ones((), dtype=np.float64)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------- dense ops

def dense(z: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map W z + b for a batch of row vectors; weight is (out, in)."""
    if z.values.ndim != 2 or weight.values.ndim != 2:
        raise ValueError("dense expects 2-d input and weight")
    if z.shape[1] != weight.shape[1] or bias.shape != (weight.shape[0],):
        raise ValueError(
            f"dense shapes incompatible: z {z.shape}, W {weight.shape}, b {bias.shape}"
        )
    out = _result(z.values @ weight.values.T + bias.values, "dense", (z, weight, bias))
    if out._backward is not None:
        def back(gy, z=z, weight=weight, bias=bias):
            _accumulate(z, gy @ weight.values)
            _accumulate(weight, gy.T @ z.values)
            _accumulate(bias, gy.sum(axis=0))
        out._backward = back
    return out


def gaussian_activation(z: Tensor, a: float) -> Tensor:
    """Elementwise exp(-z^2 / (2 a^2)); bell-shaped, values in (0, 1]."""
    if a <= 0:
        raise ValueError(f"bandwidth must be positive, got {a}")
    y = np.exp(-(z.values * z.values) / (2.0 * a * a))
    out = _result(y, "gaussian_activation", (z,))
    if out._backward is not None:
        def back(gy, z=z, y=y, a=a):
            _accumulate(z, gy * y * (-z.values / (a * a)))
        out._backward = back
    return out


def clipped_relu(z: Tensor, cap: float = 0.1) -> Tensor:
    """min(max(0, z), cap); derivative 0 on both closed flat sides."""
    y = np.clip(z.values, 0.0, cap)
    out = _result(y, "clipped_relu", (z,))
    if out._backward is not None:
        mask = (z.values > 0.0) & (z.values < cap)
        def back(gy, z=z, mask=mask):
            _accumulate(z, gy * mask)
        out._backward = back
    return out


def sigmoid(z: Tensor) -> Tensor:
    zv = z.values
    s = np.empty_like(zv)
    pos = zv >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-zv[pos]))
    ez = np.exp(zv[~pos])
    s[~pos] = ez / (1.0 + ez)
    out = _result(s, "sigmoid", (z,))
    if out._backward is not None:
        def back(gy, z=z, s=s):
            _accumulate(z, gy * s * (1.0 - s))
        out._backward = back
    return out


def softmax(logits: Tensor) -> Tensor:
    """Row-wise softmax (stable); rows sum to 1."""
    lv = logits.values
    m = lv.max(axis=-1, keepdims=True)
    e = np.exp(lv - m)
    p = e / e.sum(axis=-1, keepdims=True)
    out = _result(p, "softmax", (logits,))
    if out._backward is not None:
        def back(gy, logits=logits, p=p):
            inner = (gy * p).sum(axis=-1, keepdims=True)
            _accumulate(logits, p * (gy - inner))
        out._backward = back
    return out


def softmax_xent(logits: Tensor, labels) -> Tensor:
    """Mean cross-entropy of row-wise softmax vs integer labels, in the
    fused log-sum-exp form: loss_b = logsumexp(l_b) - l_b[label_b]."""
    lv = logits.values
    if lv.ndim != 2:
        raise ValueError("softmax_xent expects (batch, classes) logits")
    lab = np.asarray(labels)
    if lab.shape != (lv.shape[0],):
        raise ValueError(f"labels shape {lab.shape} does not match batch {lv.shape[0]}")
    lab = lab.astype(np.intp)
    m = lv.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(lv - m).sum(axis=1))
    picked = lv[np.arange(lv.shape[0]), lab]
    loss = np.mean(lse - picked)
    out = _result(loss, "softmax_xent", (logits,))
    if out._backward is not None:
        probs = np.exp(lv - lse[:, None])
        def back(gy, logits=logits, probs=probs, lab=lab):
            g = probs.copy()
            g[np.arange(g.shape[0]), lab] -= 1.0
            _accumulate(logits, g * (gy / g.shape[0]))
        out._backward = back
    return out


def mse(pred: Tensor, target: Tensor) -> Tensor:
    """Mean of squared differences over every element."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    d = pred.values - target.values
    out = _result(np.mean(d * d), "mse", (pred, target))
    if out._backward is not None:
        def back(gy, pred=pred, target=target, d=d):
            g = d * (2.0 * gy / d.size)
            _accumulate(pred, g)
            _accumulate(target, -g)
        out._backward = back
    return out


# ---------------------------------------------------------------- conv ops

def _pad_hw(x, ph, pw):
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))


def _im2col(xp, kh, kw, stride):
    """(B, Hp, Wp, C) -> contiguous (B, Ho, Wo, kh*kw*C) patch matrix."""
    b, hp, wp, c = xp.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    sb, sh, sw, sc = xp.strides
    view = as_strided(
        xp,
        shape=(b, ho, wo, kh, kw, c),
        strides=(sb, sh * stride, sw * stride, sh, sw, sc),
    )
    return np.ascontiguousarray(view).reshape(b, ho, wo, kh * kw * c), ho, wo


def _col2im(dcol, xp_shape, kh, kw, stride):
    b, hp, wp, c = xp_shape
    _, ho, wo, _ = dcol.shape
    d6 = dcol.reshape(b, ho, wo, kh, kw, c)
    dxp = np.zeros(xp_shape)
    for p in range(kh):
        for q in range(kw):
            dxp[:, p : p + ho * stride : stride, q : q + wo * stride : stride, :] += (
                d6[:, :, :, p, q, :]
            )
    return dxp


def _conv_padding(padding, kh, kw):
    if padding == "same":
        if kh % 2 == 0 or kw % 2 == 0:
            raise ValueError("same padding needs odd kernel dims")
        return kh // 2, kw // 2
    if padding == "valid":
        return 0, 0
    return int(padding), int(padding)


def conv2d(x: Tensor, weight: Tensor, bias=None, stride: int = 1,
           padding="same") -> Tensor:
    """Cross-correlation of (B,H,W,Cin) with filters (kh,kw,Cin,Cout)."""
    if x.values.ndim != 4 or weight.values.ndim != 4:
        raise ValueError("conv2d expects 4-d input and filter")
    kh, kw, cin, cout = weight.shape
    if x.shape[3] != cin:
        raise ValueError(f"channel mismatch: input {x.shape[3]}, filter {cin}")
    ph, pw = _conv_padding(padding, kh, kw)
    xp = _pad_hw(x.values, ph, pw)
    cols, ho, wo = _im2col(xp, kh, kw, stride)
    wmat = weight.values.reshape(kh * kw * cin, cout)
    y = cols @ wmat
    if bias is not None:
        if bias.shape != (cout,):
            raise ValueError(f"bias shape {bias.shape}, expected ({cout},)")
        y = y + bias.values
    parents = (x, weight) if bias is None else (x, weight, bias)
    out = _result(y, "conv2d", parents)
    if out._backward is not None:
        def back(gy, x=x, weight=weight, bias=bias, cols=cols,
                 xp_shape=xp.shape, kh=kh, kw=kw, cin=cin, cout=cout,
                 ph=ph, pw=pw, stride=stride):
            gys = gy.reshape(-1, cout)
            _accumulate(weight, (cols.reshape(-1, kh * kw * cin).T @ gys)
                        .reshape(weight.shape))
            if bias is not None:
                _accumulate(bias, gys.sum(axis=0))
            if x._tracked():
                dcol = gy @ weight.values.reshape(kh * kw * cin, cout).T
                dxp = _col2im(dcol, xp_shape, kh, kw, stride)
                if ph or pw:
                    dxp = dxp[:, ph : xp_shape[1] - ph, pw : xp_shape[2] - pw, :]
                _accumulate(x, dxp)
        out._backward = back
    return out


def transposed_conv2d(x: Tensor, weight: Tensor, bias=None) -> Tensor:
    """Stride-2 transposed convolution with a 2x2 kernel: doubles H and W.

    Filter layout (2, 2, out_channels, in_channels); the map is the exact
    adjoint of a stride-2 valid conv2d with the axis-swapped filter.
    """
    if weight.shape[:2] != (2, 2):
        raise ValueError("transposed_conv2d implements the 2x2 stride-2 kernel")
    b, h, w, cin = x.shape
    _, _, cout, wcin = weight.shape
    if cin != wcin:
        raise ValueError(f"channel mismatch: input {cin}, filter {wcin}")
    y6 = np.einsum("bhwc,pqoc->bhpwqo", x.values, weight.values)
    y = y6.reshape(b, 2 * h, 2 * w, cout)
    if bias is not None:
        if bias.shape != (cout,):
            raise ValueError(f"bias shape {bias.shape}, expected ({cout},)")
        y = y + bias.values
    parents = (x, weight) if bias is None else (x, weight, bias)
    out = _result(y, "transposed_conv2d", parents)
    if out._backward is not None:
        def back(gy, x=x, weight=weight, bias=bias, b=b, h=h, w=w,
                 cin=cin, cout=cout):
            g6 = gy.reshape(b, h, 2, w, 2, cout)
            _accumulate(x, np.einsum("bhpwqo,pqoc->bhwc", g6, weight.values))
            _accumulate(weight, np.einsum("bhwc,bhpwqo->pqoc", x.values, g6))
            if bias is not None:
                _accumulate(bias, gy.sum(axis=(0, 1, 2)))
        out._backward = back
    return out


def maxpool2(x: Tensor) -> Tensor:
    """2x2 non-overlapping max over (B,H,W,C); even H and W required.
    The adjoint routes each pooled gradient to its single argmax position."""
    b, h, w, c = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"maxpool2 needs even spatial dims, got {h}x{w}")
    y, arg = maxpool2_fwd(np.ascontiguousarray(x.values))
    out = _result(y, "maxpool2", (x,))
    if out._backward is not None:
        def back(gy, x=x, arg=arg):
            _accumulate(x, maxpool2_bwd(np.ascontiguousarray(gy), arg))
        out._backward = back
    return out


def batchnorm(x: Tensor, scale: Tensor, shift: Tensor, running_mean, running_var,
              train: bool, momentum: float = 0.9, eps: float = 1e-5,
              update_running: bool = True) -> Tensor:
    """Per-channel normalization over (batch, spatial) with affine re-scale.

    Train mode normalizes by biased batch statistics and, unless
    update_running is off (gradient checking re-runs the forward many
    times), folds them into the running buffers.  Eval mode is the fixed
    affine map through the running statistics.
    """
    xv = x.values
    c = xv.shape[-1]
    if scale.shape != (c,) or shift.shape != (c,):
        raise ValueError("scale/shift must be per-channel vectors")
    axes = tuple(range(xv.ndim - 1))
    if train:
        mu = xv.mean(axis=axes)
        xc = xv - mu
        var = np.mean(xc * xc, axis=axes)
        if update_running:
            running_mean *= momentum
            running_mean += (1.0 - momentum) * mu
            running_var *= momentum
            running_var += (1.0 - momentum) * var
        ivar = 1.0 / np.sqrt(var + eps)
        xhat = xc * ivar
        y = scale.values * xhat + shift.values
        out = _result(y, "batchnorm", (x, scale, shift))
        if out._backward is not None:
            m = xv.size // c
            def back(gy, x=x, scale=scale, shift=shift, xhat=xhat,
                     ivar=ivar, axes=axes, m=m):
                _accumulate(scale, (gy * xhat).sum(axis=axes))
                _accumulate(shift, gy.sum(axis=axes))
                if x._tracked():
                    dxhat = gy * scale.values
                    s1 = dxhat.sum(axis=axes)
                    s2 = (dxhat * xhat).sum(axis=axes)
                    _accumulate(x, ivar * (dxhat - (s1 + xhat * s2) / m))
            out._backward = back
        return out
    ivar = 1.0 / np.sqrt(running_var + eps)
    y = scale.values * (xv - running_mean) * ivar + shift.values
    out = _result(y, "batchnorm", (x, scale, shift))
    if out._backward is not None:
        xhat = (xv - running_mean) * ivar
        def back(gy, x=x, scale=scale, shift=shift, xhat=xhat,
                 ivar=ivar, axes=axes):
            _accumulate(scale, (gy * xhat).sum(axis=axes))
            _accumulate(shift, gy.sum(axis=axes))
            if x._tracked():
                _accumulate(x, gy * (scale.values * ivar))
        out._backward = back
    return out


def concat(a: Tensor, b: Tensor) -> Tensor:
    """Channel-wise (last axis) concatenation; adjoint splits the gradient."""
    if a.values.shape[:-1] != b.values.shape[:-1]:
        raise ValueError(f"non-channel dims differ: {a.shape} vs {b.shape}")
    na = a.shape[-1]
    out = _result(np.concatenate([a.values, b.values], axis=-1), "concat", (a, b))
    if out._backward is not None:
        def back(gy, a=a, b=b, na=na):
            _accumulate(a, gy[..., :na])
            _accumulate(b, gy[..., na:])
        out._backward = back
    return out
