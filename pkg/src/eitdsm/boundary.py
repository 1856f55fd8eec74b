"""Closed-loop boundary traces and spectral calculus on the loop.

The grid boundary is treated as a single closed polyline parametrized by arc
length, traversed counter-clockwise starting at the corner (-1,-1).  Spectral
operations use the convention

    trace(s) = sum_k c_k exp(2*pi*i*k*s/L),   k in [-K_f, K_f]

with K_f = floor(n_samples/2) - 1 (content at and beyond Nyquist is
discarded), realized by uniform resampling in arc length plus an FFT.  For
square grids the nodes are already uniform, so resampling is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import CartesianGrid


@dataclass(frozen=True)
class BoundaryLoop:
    """Ordered closed sampling loop with trapezoidal quadrature weights.

    For grid loops, node_idx holds flat indices (j*n1 + i) into interior
    fields; generic loops (e.g. points on a circle) leave it None.
    """

    x1: np.ndarray  # node coordinates along the loop
    x2: np.ndarray
    arc: np.ndarray  # cumulative arc length, arc[0] = 0
    weights: np.ndarray  # per-node quadrature weight (owned arc length)
    length: float  # total perimeter
    node_idx: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.arc)

    @property
    def angles(self) -> np.ndarray:
        """Polar angle of each loop node."""
        return np.arctan2(self.x2, self.x1)


@dataclass
class BoundaryTrace:
    loop: BoundaryLoop
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.loop),):
            raise ValueError("trace length does not match its loop")

    def copy(self) -> "BoundaryTrace":
        return BoundaryTrace(self.loop, self.values.copy())


@dataclass(frozen=True)
class BoundarySpectrum:
    """One-sided Fourier coefficients c_k, k = 0..K_f (real-trace convention:
    c_{-k} is implied as the conjugate of c_k)."""

    coefficients: np.ndarray  # complex, index k
    period: float


@lru_cache(maxsize=32)
def grid_loop(grid: CartesianGrid) -> BoundaryLoop:
    """Boundary loop of a grid: CCW from (-1,-1); 2*(n1+n2) - 4 nodes.

    Edge nodes own one full spacing of arc length; corners own (h1+h2)/2.
    """
    n1, n2 = grid.n1, grid.n2
    h1, h2 = grid.h1, grid.h2
    ii = []
    jj = []
    # bottom row, left to right
    ii.extend(range(n1))
    jj.extend([0] * n1)
    # right column, upward (corner already taken)
    ii.extend([n1 - 1] * (n2 - 2))
    jj.extend(range(1, n2 - 1))
    # top row, right to left
    ii.extend(range(n1 - 1, -1, -1))
    jj.extend([n2 - 1] * n1)
    # left column, downward
    ii.extend([0] * (n2 - 2))
    jj.extend(range(n2 - 2, 0, -1))
    ii = np.asarray(ii)
    jj = np.asarray(jj)
    x1 = -1.0 + h1 * ii
    x2 = -1.0 + h2 * jj
    seg = np.hypot(np.diff(x1, append=x1[:1]), np.diff(x2, append=x2[:1]))
    arc = np.concatenate(([0.0], np.cumsum(seg[:-1])))
    weights = 0.5 * (seg + np.roll(seg, 1))
    length = float(seg.sum())
    return BoundaryLoop(
        x1=x1,
        x2=x2,
        arc=arc,
        weights=weights,
        length=length,
        node_idx=jj * n1 + ii,
    )


def circle_loop(angles: np.ndarray, radius: float = 1.0) -> BoundaryLoop:
    """Loop over points radius*(cos t, sin t) at sorted angles in [-pi, pi).

    Quadrature weights are the owned angle gaps times the radius, so the loop
    integrates over the full circle even though sampling may be nonuniform.
    """
    angles = np.sort(np.asarray(angles, dtype=np.float64))
    gaps = np.diff(angles, append=angles[:1] + 2.0 * np.pi)
    arc = radius * (angles - angles[0])
    weights = radius * 0.5 * (gaps + np.roll(gaps, 1))
    return BoundaryLoop(
        x1=radius * np.cos(angles),
        x2=radius * np.sin(angles),
        arc=arc,
        weights=weights,
        length=float(2.0 * np.pi * radius),
    )


def quadrature_mean(trace: BoundaryTrace) -> float:
    w = trace.loop.weights
    return float((w * trace.values).sum() / w.sum())


def recenter(trace: BoundaryTrace) -> BoundaryTrace:
    """Project onto mean zero with respect to the loop quadrature; idempotent."""
    return BoundaryTrace(trace.loop, trace.values - quadrature_mean(trace))


def l2_norm(trace: BoundaryTrace) -> float:
    """L2 norm over the loop via trapezoidal quadrature."""
    return float(np.sqrt((trace.loop.weights * trace.values**2).sum()))


def to_spectrum(trace: BoundaryTrace) -> BoundarySpectrum:
    """Fourier coefficients of the trace after uniform arc-length resampling.

    The sample count equals the loop's node count; linear interpolation is
    used off the uniform comb (exact when the loop is already uniform).
    """
    m = len(trace.loop)
    length = trace.loop.length
    s = trace.loop.arc
    v = trace.values
    s_ext = np.concatenate((s, [length]))
    v_ext = np.concatenate((v, v[:1]))
    s_uniform = (length / m) * np.arange(m)
    u = np.interp(s_uniform, s_ext, v_ext)
    c = np.fft.rfft(u) / m
    kf = m // 2 - 1
    return BoundarySpectrum(coefficients=c[: kf + 1].copy(), period=length)


def from_spectrum(spectrum: BoundarySpectrum, loop: BoundaryLoop) -> BoundaryTrace:
    """Evaluate the truncated Fourier series at the loop's arc positions."""
    c = spectrum.coefficients
    length = spectrum.period
    k = np.arange(1, len(c))
    phase = np.exp((2j * np.pi / length) * np.outer(loop.arc, k))
    values = c[0].real + 2.0 * (phase * c[1:]).real.sum(axis=1)
    return BoundaryTrace(loop, values)


def spectrum_norm_sq(spectrum: BoundarySpectrum) -> float:
    """Squared L2 norm represented by the spectrum: L * sum_k |c_k|^2."""
    c = spectrum.coefficients
    total = float(np.abs(c[0]) ** 2 + 2.0 * (np.abs(c[1:]) ** 2).sum())
    return spectrum.period * total


def frac_laplacian(trace: BoundaryTrace, gamma: float) -> BoundaryTrace:
    """Fractional surface Laplacian along the loop, defined spectrally.

    Multiplies c_k by (2*pi*|k|/L)^(2*gamma); the mean (k=0) passes through
    unchanged for gamma = 0 and is annihilated for gamma > 0.  gamma = 0
    returns the trace as-is (exact identity, no FFT round trip).
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if gamma == 0.0:
        return trace.copy()
    spec = to_spectrum(trace)
    c = spec.coefficients.copy()
    k = np.arange(len(c), dtype=np.float64)
    factors = np.zeros_like(k)
    factors[1:] = (2.0 * np.pi * k[1:] / spec.period) ** (2.0 * gamma)
    c *= factors
    return from_spectrum(BoundarySpectrum(c, spec.period), trace.loop)


def duality_product(eta: BoundaryTrace, data: BoundaryTrace, gamma: float) -> float:
    """Loop inner product of (-Lap)^gamma eta with data."""
    if eta.loop is not data.loop and len(eta.loop) != len(data.loop):
        raise ValueError("traces live on different loops")
    smoothed = frac_laplacian(eta, gamma)
    return float((eta.loop.weights * smoothed.values * data.values).sum())


def seminorm_h32(trace: BoundaryTrace) -> float:
    """Order-3/2 Sobolev seminorm: (sum_{k!=0} |2 pi k / L|^3 |c_k|^2 L)^(1/2).

    On the unit circle this gives sqrt(pi * k^3) for cos(k*theta).  The L
    factor makes the value discretization-consistent under refinement.
    """
    spec = to_spectrum(trace)
    c = spec.coefficients
    k = np.arange(1, len(c), dtype=np.float64)
    wts = (2.0 * np.pi * k / spec.period) ** 3
    return float(np.sqrt(2.0 * spec.period * (wts * np.abs(c[1:]) ** 2).sum()))


def h32_gram(trace_a: BoundaryTrace, trace_b: BoundaryTrace) -> float:
    """Bilinear form behind seminorm_h32: gram(t, t) = seminorm_h32(t)^2."""
    spec_a = to_spectrum(trace_a)
    spec_b = to_spectrum(trace_b)
    ca = spec_a.coefficients
    cb = spec_b.coefficients
    n = min(len(ca), len(cb))
    k = np.arange(1, n, dtype=np.float64)
    wts = (2.0 * np.pi * k / spec_a.period) ** 3
    cross = (ca[1:n] * np.conj(cb[1:n])).real
    return float(2.0 * spec_a.period * (wts * cross).sum())
