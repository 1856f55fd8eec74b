import numpy as np
import pytest

from eitdsm import boundary as bd
from eitdsm import pipeline
from eitdsm.dsm import (
    ExplicitDiskSource,
    NumericDipoleSource,
    index_field_classic,
    kernel_diagnostic,
    probing_trace_disk,
)
from eitdsm.grid import CartesianGrid, Circle, ConductivitySample
from eitdsm.solver import SolverConfig, background_operator

CFG = SolverConfig(tolerance=1e-10)


@pytest.fixture(scope="module")
def circle_pair():
    """Cauchy pair for a single off-center circle on a 33x33 grid."""
    grid = CartesianGrid(33, 33)
    sample = ConductivitySample(shapes=(Circle((0.3, 0.2), 0.3),))
    rec = pipeline.build_record(sample, grid, n_pairs=1, config=CFG)
    return grid, sample, rec.pairs[0]


def _top_decile_center(field):
    vals = field.values
    x1, x2 = field.grid.coords()
    cut = np.quantile(vals, 0.97)
    mask = vals >= cut
    w = vals[mask]
    return (x1[mask] * w).sum() / w.sum(), (x2[mask] * w).sum() / w.sum()


def test_classic_index_localizes_inclusion(circle_pair):
    grid, sample, pair = circle_pair
    source = NumericDipoleSource(background_operator(grid), CFG)
    res = index_field_classic(pair.f, pair.g, grid, source, gamma=1.0, config=CFG)
    vals = res.field.values
    assert not res.zero_contrast
    assert vals.min() >= 0.0 and vals.max() == pytest.approx(1.0)
    cx, cy = _top_decile_center(res.field)
    assert np.hypot(cx - 0.3, cy - 0.2) < 0.25
    # discrimination: mean index inside the true inclusion beats the outside
    x1, x2 = grid.coords()
    inside = np.hypot(x1 - 0.3, x2 - 0.2) < 0.3
    assert vals[inside].mean() > 2.0 * vals[~inside].mean()


def test_gamma_one_beats_gamma_zero(circle_pair):
    grid, sample, pair = circle_pair
    source = NumericDipoleSource(background_operator(grid), CFG)
    res1 = index_field_classic(pair.f, pair.g, grid, source, gamma=1.0, config=CFG)
    res0 = index_field_classic(pair.f, pair.g, grid, source, gamma=0.0, config=CFG)
    err = []
    for res in (res1, res0):
        cx, cy = _top_decile_center(res.field)
        err.append(np.hypot(cx - 0.3, cy - 0.2))
    assert err[0] < err[1]


def test_zero_contrast_short_circuit():
    grid = CartesianGrid(17, 17)
    rec = pipeline.build_record(ConductivitySample(shapes=()), grid, 1, config=CFG)
    pair = rec.pairs[0]
    source = NumericDipoleSource(background_operator(grid), CFG)
    res = index_field_classic(pair.f, pair.g, grid, source, config=CFG)
    assert res.zero_contrast
    assert not res.field.values.any()


def test_index_scale_invariant(circle_pair):
    grid, sample, pair = circle_pair
    source = NumericDipoleSource(background_operator(grid), CFG)
    base = index_field_classic(pair.f, pair.g, grid, source, config=CFG)
    f2 = bd.BoundaryTrace(pair.f.loop, 2.0 * pair.f.values)
    g2 = bd.BoundaryTrace(pair.g.loop, 2.0 * pair.g.values)
    scaled = index_field_classic(f2, g2, grid, source, config=CFG)
    np.testing.assert_array_equal(scaled.field.values, base.field.values)


def test_disk_trace_basics():
    ang = np.linspace(-np.pi, np.pi, 128, endpoint=False)
    loop = bd.circle_loop(ang)
    with pytest.raises(ValueError):
        probing_trace_disk(loop, (1.2, 0.0), (1.0, 0.0))
    t = probing_trace_disk(loop, (0.3, -0.2), (0.6, 0.8))
    assert bd.quadrature_mean(t) == pytest.approx(0.0, abs=1e-12)
    tx = probing_trace_disk(loop, (0.3, -0.2), (1.0, 0.0))
    ty = probing_trace_disk(loop, (0.3, -0.2), (0.0, 1.0))
    np.testing.assert_allclose(
        t.values, 0.6 * tx.values + 0.8 * ty.values, atol=1e-12)


def test_source_seminorm_matches_direct():
    ang = np.linspace(-np.pi, np.pi, 128, endpoint=False)
    src = ExplicitDiskSource(bd.circle_loop(ang))
    d = (0.28, -0.96)
    composed = src.probing_trace((0.1, 0.4), d)
    assert src.seminorm((0.1, 0.4), d) == pytest.approx(
        bd.seminorm_h32(composed), rel=1e-10)


def test_influence_path_matches_direct_solves():
    grid = CartesianGrid(17, 17)
    op = background_operator(grid)
    fast = NumericDipoleSource(op, CFG, use_influence=True)
    slow = NumericDipoleSource(op, CFG, use_influence=False)
    x, d = (0.25, -0.3), (0.5, 0.5)
    np.testing.assert_allclose(
        fast.probing_trace(x, d).values, slow.probing_trace(x, d).values,
        atol=1e-8)


def test_kernel_peaks_on_diagonal_and_decays():
    # x must sit off-center: at the origin the probing trace is a pure first
    # harmonic and the pairing becomes independent of the separation
    ang = np.linspace(-np.pi, np.pi, 256, endpoint=False)
    src = ExplicitDiskSource(bd.circle_loop(ang))
    d = (1.0, 0.0)
    x = (0.4, 0.0)
    vals = [abs(kernel_diagnostic(src, x, y, d, d, 1.0))
            for y in (x, (0.1, 0.0), (-0.35, 0.0))]
    assert vals[0] > vals[1] > vals[2]
