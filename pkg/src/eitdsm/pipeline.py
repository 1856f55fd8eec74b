"""Data generation: current patterns, forward solves, noise, Cauchy
differences, difference-potential stacks, and dataset serialization.

Each record follows one conductivity sample through the full chain: inject
g_omega = cos(omega*theta), solve the forward problem for the boundary
voltage f_omega, subtract the homogeneous-background voltage, and solve the
harmonic problem driven by that difference to obtain the potential phi^omega
and its gradient.  Records stream into the EITD container (dataio).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import dataio
from .boundary import BoundaryTrace, grid_loop, l2_norm, recenter
from .grid import (
    CartesianGrid,
    ConductivitySample,
    IndexField,
    ScalarField,
    VectorField,
    conductivity_on_grid,
    ground_truth_index,
    sample_scenario,
)
from .solver import (
    SolverConfig,
    assemble_operator,
    background_operator,
    extract_trace,
    gradient_field,
    solve_neumann,
    solve_phi,
)


def make_current(omega: int, loop) -> BoundaryTrace:
    """Injected current cos(omega * theta) on the boundary loop, projected
    to exact discrete mean zero."""
    if omega < 1:
        raise ValueError(f"pattern index must be >= 1, got {omega}")
    values = np.cos(omega * loop.angles)
    return recenter(BoundaryTrace(loop=loop, values=values))


@dataclass(frozen=True)
class NoiseSpec:
    delta: float
    seed: int
    per_node: bool = True

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"noise level must be >= 0, got {self.delta}")


def add_noise(f: BoundaryTrace, spec: NoiseSpec, stream: int = 0) -> BoundaryTrace:
    """Multiplicative Gaussian noise (1 + delta*G) on a voltage trace.

    G is standard normal, one draw per node (or one per trace when
    spec.per_node is False).  `stream` separates the draws for different
    traces under one seed; the result is re-centered to mean zero.
    """
    if spec.delta == 0.0:
        return recenter(f)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(stream,)))
    if spec.per_node:
        g = rng.standard_normal(len(f.values))
    else:
        g = float(rng.standard_normal())
    return recenter(BoundaryTrace(loop=f.loop, values=f.values * (1.0 + spec.delta * g)))


@dataclass(frozen=True)
class CauchyPair:
    g: BoundaryTrace
    f: BoundaryTrace
    omega: int


@dataclass
class TrainingRecord:
    sample: ConductivitySample
    sigma: ScalarField
    truth: IndexField
    pairs: list
    phi_stack: list
    grad_stack: list

    @property
    def grid(self) -> CartesianGrid:
        return self.sigma.grid


@lru_cache(maxsize=4)
def _background_pairs(n1: int, n2: int, n_pairs: int, tol: float):
    """Per-grid cache of (g_omega, background voltage) for omega = 1..N."""
    grid = CartesianGrid(n1, n2)
    op = background_operator(grid)
    cfg = SolverConfig(tolerance=tol)
    loop = grid_loop(grid)
    out = []
    for omega in range(1, n_pairs + 1):
        g = make_current(omega, loop)
        u0 = solve_neumann(op, g, cfg)
        out.append((g, extract_trace(op, u0)))
    return tuple(out)


def background_pairs(grid: CartesianGrid, n_pairs: int, config: SolverConfig | None = None):
    cfg = config or SolverConfig()
    return _background_pairs(grid.n1, grid.n2, n_pairs, cfg.tolerance)


def build_record(
    sample: ConductivitySample,
    grid: CartesianGrid,
    n_pairs: int,
    noise: NoiseSpec | None = None,
    config: SolverConfig | None = None,
) -> TrainingRecord:
    """Run the full forward chain for one sample.

    For omega = 1..n_pairs: solve with sigma(sample), optionally perturb the
    voltage, form the Cauchy difference against the homogeneous background,
    and solve the harmonic difference problem (surface operator power 0, the
    data enters as-is).
    """
    if n_pairs < 1:
        raise ValueError(f"pair count must be >= 1, got {n_pairs}")
    cfg = config or SolverConfig()
    sigma = conductivity_on_grid(sample, grid)
    op = assemble_operator(sigma, config=cfg)
    truth = ground_truth_index(sample, grid)
    bg = background_pairs(grid, n_pairs, cfg)
    pairs, phis, grads = [], [], []
    for omega in range(1, n_pairs + 1):
        g, f0 = bg[omega - 1]
        u = solve_neumann(op, g, cfg)
        f = extract_trace(op, u)
        if noise is not None and noise.delta > 0:
            f = add_noise(f, noise, stream=omega)
        diff = BoundaryTrace(loop=f.loop, values=f.values - f0.values)
        phi = solve_phi(grid, diff, cfg, gamma=0.0)
        pairs.append(CauchyPair(g=g, f=f, omega=omega))
        phis.append(phi)
        grads.append(gradient_field(phi))
    return TrainingRecord(
        sample=sample, sigma=sigma, truth=truth, pairs=pairs,
        phi_stack=phis, grad_stack=grads,
    )


def record_rng(master_seed: int, record_index: int) -> np.random.Generator:
    """Counter-based per-record stream: independent of generation order."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(record_index,))
    )


def generate_dataset(
    scenario: int,
    samples: int,
    n_pairs: int,
    grid: CartesianGrid,
    master_seed: int,
    out_path: str,
    noise: NoiseSpec | None = None,
    config: SolverConfig | None = None,
    progress=None,
) -> dict:
    """Generate and serialize a dataset; returns the manifest dict.

    Every byte of the output is a function of (scenario, samples, n_pairs,
    grid, master_seed, noise): per-record streams are split from the master
    seed by record index, so the result does not depend on generation order.
    """
    if samples < 1:
        raise ValueError(f"sample count must be >= 1, got {samples}")
    writer = dataio.DatasetWriter(out_path, grid, samples, n_pairs)
    try:
        for idx in range(samples):
            rng = record_rng(master_seed, idx)
            sample = sample_scenario(scenario, rng)
            rec = build_record(sample, grid, n_pairs, noise=noise, config=config)
            writer.add_record(
                rec.sigma.values,
                rec.truth.values,
                [p.g.values for p in rec.pairs],
                [p.f.values for p in rec.pairs],
                [phi.values for phi in rec.phi_stack],
                [gr.dx_values for gr in rec.grad_stack],
                [gr.dy_values for gr in rec.grad_stack],
            )
            if progress is not None:
                progress(idx + 1, samples)
    except BaseException:
        writer.abort()
        raise
    digest = writer.close()
    manifest = {
        "format": "EITD",
        "version": dataio.VERSION,
        "scenario": scenario,
        "samples": samples,
        "pairs": n_pairs,
        "n1": grid.n1,
        "n2": grid.n2,
        "seed": master_seed,
        "noise_delta": 0.0 if noise is None else noise.delta,
        "noise_seed": "" if noise is None else noise.seed,
        "noise_per_node": "" if noise is None else noise.per_node,
        "blob_sha256": digest,
    }
    dataio.write_manifest(dataio.manifest_path(out_path), manifest)
    return manifest


def relative_difference(f1: BoundaryTrace, f2: BoundaryTrace) -> float:
    """||f1 - f2|| / ||f1|| in the boundary quadrature norm."""
    ref = l2_norm(f1)
    if ref == 0.0:
        raise ValueError("reference trace has zero norm")
    diff = BoundaryTrace(loop=f1.loop, values=f1.values - f2.values)
    return l2_norm(diff) / ref


def sensitivity_pair(kind: str = "circles") -> tuple[ConductivitySample, ConductivitySample]:
    """Two fixed configurations differing only in a small center inclusion.

    The first has a circle of radius 0.2 at the origin surrounded by four
    blocking inclusions; the second drops the center circle and keeps the
    blockers.  The boundary voltages of the two barely differ, which is the
    shielding effect the study quantifies.
    """
    from .grid import Circle, Ellipse

    center = Circle(center=(0.0, 0.0), radius=0.2)
    if kind == "circles":
        blockers = (
            Circle(center=(0.55, 0.0), radius=0.25),
            Circle(center=(-0.55, 0.0), radius=0.25),
            Circle(center=(0.0, 0.55), radius=0.25),
            Circle(center=(0.0, -0.55), radius=0.25),
        )
    elif kind == "ellipses":
        blockers = (
            Ellipse(center=(0.55, 0.0), semi_major=0.35, semi_minor=0.15,
                    rotation=np.pi / 2),
            Ellipse(center=(-0.28, 0.48), semi_major=0.35, semi_minor=0.15,
                    rotation=np.pi / 2 + 2 * np.pi / 3),
            Ellipse(center=(-0.28, -0.48), semi_major=0.35, semi_minor=0.15,
                    rotation=np.pi / 2 + 4 * np.pi / 3),
        )
    else:
        raise ValueError(f"kind must be 'circles' or 'ellipses', got {kind!r}")
    blocked = ConductivitySample(shapes=(center,) + blockers)
    removed = ConductivitySample(shapes=blockers)
    return blocked, removed


def sensitivity_study(
    grid: CartesianGrid,
    max_omega: int = 10,
    kind: str = "circles",
    config: SolverConfig | None = None,
) -> list:
    """Relative voltage differences with and without the shielded center
    inclusion, one value per current pattern omega = 1..max_omega."""
    cfg = config or SolverConfig()
    blocked, removed = sensitivity_pair(kind)
    loop = grid_loop(grid)
    op1 = assemble_operator(conductivity_on_grid(blocked, grid), config=cfg)
    op2 = assemble_operator(conductivity_on_grid(removed, grid), config=cfg)
    out = []
    for omega in range(1, max_omega + 1):
        g = make_current(omega, loop)
        f1 = extract_trace(op1, solve_neumann(op1, g, cfg))
        f2 = extract_trace(op2, solve_neumann(op2, g, cfg))
        out.append(relative_difference(f1, f2))
    return out


def load_record_for_inference(path_or_dataset, index: int):
    """Rehydrate (grid, pairs, phi_stack, grad_stack, truth arrays) from a
    stored dataset record for the online reconstruction paths."""
    ds = path_or_dataset
    if isinstance(ds, str):
        if not os.path.exists(ds):
            raise FileNotFoundError(ds)
        ds = dataio.Dataset(ds)
    rec = ds.record(index)
    loop = grid_loop(ds.grid)
    pairs = [
        CauchyPair(
            g=BoundaryTrace(loop=loop, values=np.asarray(rec["g"][w])),
            f=BoundaryTrace(loop=loop, values=np.asarray(rec["f"][w])),
            omega=w + 1,
        )
        for w in range(ds.pairs)
    ]
    phis = [ScalarField(grid=ds.grid, values=np.asarray(rec["phi"][w]))
            for w in range(ds.pairs)]
    grads = [
        VectorField(grid=ds.grid, dx_values=np.asarray(rec["dphi_dx"][w]),
                    dy_values=np.asarray(rec["dphi_dy"][w]))
        for w in range(ds.pairs)
    ]
    truth = IndexField(grid=ds.grid, values=np.asarray(rec["truth"]))
    return ds.grid, pairs, phis, grads, truth
