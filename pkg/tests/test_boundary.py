import math

import numpy as np
import pytest

from eitdsm.boundary import (
    BoundaryTrace,
    circle_loop,
    duality_product,
    frac_laplacian,
    from_spectrum,
    grid_loop,
    h32_gram,
    l2_norm,
    quadrature_mean,
    recenter,
    seminorm_h32,
    to_spectrum,
)
from eitdsm.grid import CartesianGrid


def _mode(loop, k, phase=0.0):
    return BoundaryTrace(loop, np.cos(2 * np.pi * k * loop.arc / loop.length + phase))


def test_grid_loop_geometry():
    grid = CartesianGrid(5, 4)
    loop = grid_loop(grid)
    assert len(loop) == 2 * (5 + 4) - 4
    assert loop.x1[0] == -1.0 and loop.x2[0] == -1.0
    # counter-clockwise start: along the bottom edge, x1 increasing
    assert loop.x1[1] > loop.x1[0] and loop.x2[1] == -1.0
    assert loop.length == pytest.approx(8.0)
    assert loop.weights.sum() == pytest.approx(8.0)
    # corner nodes own half of each adjacent edge spacing
    assert loop.weights[0] == pytest.approx(0.5 * (grid.h1 + grid.h2))
    # node_idx maps back onto the loop coordinates
    x1p, x2p = grid.coords()
    np.testing.assert_array_equal(x1p.ravel()[loop.node_idx], loop.x1)
    np.testing.assert_array_equal(x2p.ravel()[loop.node_idx], loop.x2)


def test_circle_loop_quadrature():
    ang = np.linspace(-np.pi, np.pi, 64, endpoint=False)
    loop = circle_loop(ang, radius=2.0)
    assert loop.weights.sum() == pytest.approx(4 * np.pi)
    assert loop.length == pytest.approx(4 * np.pi)


def test_recenter_idempotent(rng):
    loop = grid_loop(CartesianGrid(9, 9))
    t = BoundaryTrace(loop, rng.normal(size=len(loop)))
    c = recenter(t)
    assert quadrature_mean(c) == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(recenter(c).values, c.values, atol=1e-14)
    const = BoundaryTrace(loop, np.full(len(loop), 3.5))
    assert quadrature_mean(const) == pytest.approx(3.5)


def test_spectrum_round_trip_band_limited():
    loop = grid_loop(CartesianGrid(17, 17))
    vals = (0.3 + np.cos(2 * np.pi * loop.arc / loop.length)
            - 0.7 * np.sin(2 * np.pi * 3 * loop.arc / loop.length))
    t = BoundaryTrace(loop, vals)
    back = from_spectrum(to_spectrum(t), loop)
    np.testing.assert_allclose(back.values, vals, atol=1e-12)


def test_spectrum_cutoff_below_nyquist():
    loop = grid_loop(CartesianGrid(9, 9))
    m = len(loop)
    spec = to_spectrum(BoundaryTrace(loop, np.ones(m)))
    assert len(spec.coefficients) == m // 2 - 1 + 1  # k = 0 .. floor(M/2)-1


def test_frac_laplacian_gamma_zero_is_identity(rng):
    loop = grid_loop(CartesianGrid(9, 9))
    t = BoundaryTrace(loop, rng.normal(size=len(loop)))
    out = frac_laplacian(t, 0.0)
    assert out is not t
    np.testing.assert_array_equal(out.values, t.values)
    with pytest.raises(ValueError):
        frac_laplacian(t, -0.5)


@pytest.mark.parametrize("k", [1, 2, 5])
@pytest.mark.parametrize("gamma", [0.5, 1.0])
def test_frac_laplacian_scales_pure_modes(k, gamma):
    loop = grid_loop(CartesianGrid(33, 33))
    t = _mode(loop, k, phase=0.4)
    out = frac_laplacian(t, gamma)
    factor = (2 * np.pi * k / loop.length) ** (2 * gamma)
    np.testing.assert_allclose(out.values, factor * t.values, atol=1e-10 * factor)


def test_frac_laplacian_kills_mean():
    loop = grid_loop(CartesianGrid(17, 17))
    t = BoundaryTrace(loop, np.full(len(loop), 2.0))
    np.testing.assert_allclose(frac_laplacian(t, 1.0).values, 0.0, atol=1e-12)


def test_seminorm_circle_oracle():
    # |cos(k theta)|_{3/2} on the unit circle is sqrt(pi k^3)
    ang = np.linspace(-np.pi, np.pi, 256, endpoint=False)
    loop = circle_loop(ang)
    for k in (1, 2, 4):
        t = BoundaryTrace(loop, np.cos(k * np.arctan2(loop.x2, loop.x1)))
        assert seminorm_h32(t) == pytest.approx(math.sqrt(math.pi * k**3), rel=1e-10)


def test_seminorm_square_loop_analytic():
    # cos(2 pi k s / L) has c_k = 1/2, so the squared seminorm is
    # 2 L (2 pi k / L)^3 / 4
    loop = grid_loop(CartesianGrid(33, 33))
    for k in (1, 3):
        t = _mode(loop, k)
        expected = math.sqrt(0.5 * loop.length * (2 * np.pi * k / loop.length) ** 3)
        assert seminorm_h32(t) == pytest.approx(expected, rel=1e-10)


def test_l2_norm_circle_mode():
    ang = np.linspace(-np.pi, np.pi, 512, endpoint=False)
    loop = circle_loop(ang)
    t = BoundaryTrace(loop, np.cos(3 * np.arctan2(loop.x2, loop.x1)))
    assert l2_norm(t) == pytest.approx(math.sqrt(math.pi), rel=1e-10)


def test_gram_matches_seminorm_and_is_bilinear(rng):
    loop = grid_loop(CartesianGrid(17, 17))
    a = _mode(loop, 1, 0.3)
    b = _mode(loop, 2, 1.1)
    assert h32_gram(a, a) == pytest.approx(seminorm_h32(a) ** 2, rel=1e-12)
    assert h32_gram(a, b) == pytest.approx(h32_gram(b, a), rel=1e-12)
    combo = BoundaryTrace(loop, 2.0 * a.values + 3.0 * b.values)
    expected = 2 * h32_gram(a, a) + 3 * h32_gram(a, b)
    assert h32_gram(combo, a) == pytest.approx(expected, rel=1e-10)


def test_duality_product_gamma_zero_is_weighted_inner(rng):
    loop = grid_loop(CartesianGrid(9, 9))
    a = BoundaryTrace(loop, rng.normal(size=len(loop)))
    b = BoundaryTrace(loop, rng.normal(size=len(loop)))
    direct = float((loop.weights * a.values * b.values).sum())
    assert duality_product(a, b, 0.0) == pytest.approx(direct, rel=1e-13)


def test_trace_length_validated():
    loop = grid_loop(CartesianGrid(9, 9))
    with pytest.raises(ValueError):
        BoundaryTrace(loop, np.zeros(len(loop) + 1))
