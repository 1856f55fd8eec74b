import math

import numpy as np
import pytest

from eitdsm.grid import (
    CartesianGrid,
    Circle,
    ConductivitySample,
    Ellipse,
    ScalarField,
    conductivity_on_grid,
    ground_truth_index,
    level_set,
    sample_scenario,
    union_level_set,
)


def test_grid_spacing_and_shape():
    grid = CartesianGrid(5, 9)
    assert grid.h1 == 2.0 / 4 and grid.h2 == 2.0 / 8
    assert grid.shape == (9, 5)
    assert grid.n_nodes == 45
    x1 = grid.x1_axis()
    x2 = grid.x2_axis()
    assert x1[0] == -1.0 and x1[-1] == 1.0
    assert x2[0] == -1.0 and x2[-1] == 1.0
    np.testing.assert_allclose(np.diff(x1), grid.h1)


def test_node_ordering_row_major():
    # values[j, i] lives at (x1[i], x2[j]); flat index is j*n1 + i
    grid = CartesianGrid(4, 3)
    x1p, x2p = grid.coords()
    assert x1p.shape == grid.shape
    np.testing.assert_array_equal(x1p[0], grid.x1_axis())
    np.testing.assert_array_equal(x2p[:, 0], grid.x2_axis())
    flat = x1p.ravel()
    assert flat[1 * grid.n1 + 2] == grid.x1_axis()[2]


def test_grid_too_small_rejected():
    with pytest.raises(ValueError):
        CartesianGrid(2, 5)


def test_circle_level_set_is_signed_distance(rng):
    c = Circle((0.2, -0.1), 0.3)
    pts = rng.uniform(-1, 1, size=(200, 2))
    d = np.hypot(pts[:, 0] - 0.2, pts[:, 1] + 0.1) - 0.3
    np.testing.assert_allclose(level_set(c, pts[:, 0], pts[:, 1]), d)


def test_ellipse_rotation_swaps_axes():
    e = Ellipse((0.0, 0.0), semi_major=0.35, semi_minor=0.15, rotation=math.pi / 2)
    # rotated 90 degrees: long axis along x2
    assert level_set(e, 0.0, 0.3) < 0
    assert level_set(e, 0.3, 0.0) > 0
    e0 = Ellipse((0.0, 0.0), 0.35, 0.15, 0.0)
    assert level_set(e0, 0.3, 0.0) < 0
    assert level_set(e0, 0.0, 0.3) > 0


def test_union_is_pointwise_min(rng):
    shapes = (Circle((0.3, 0.3), 0.2), Ellipse((-0.4, -0.2), 0.3, 0.1, 0.7))
    sample = ConductivitySample(shapes=shapes)
    pts = rng.uniform(-1, 1, size=(50, 2))
    expected = np.minimum(
        level_set(shapes[0], pts[:, 0], pts[:, 1]),
        level_set(shapes[1], pts[:, 0], pts[:, 1]),
    )
    np.testing.assert_array_equal(union_level_set(sample, pts[:, 0], pts[:, 1]), expected)


def test_ground_truth_binary_and_matches_level_set(one_circle, small_grid):
    truth = ground_truth_index(one_circle, small_grid)
    assert set(np.unique(truth.values)) <= {0.0, 1.0}
    x1, x2 = small_grid.coords()
    inside = union_level_set(one_circle, x1, x2) < 0
    np.testing.assert_array_equal(truth.values, inside.astype(float))


def test_ground_truth_empty_sample_is_zero(small_grid):
    truth = ground_truth_index(ConductivitySample(shapes=()), small_grid)
    assert not truth.values.any()


def test_conductivity_values(one_circle, small_grid):
    sigma = conductivity_on_grid(one_circle, small_grid)
    assert set(np.unique(sigma.values)) == {1.0, 10.0}
    assert sigma.values[10, 10] == 10.0  # node (0.25, 0.25) is inside the circle
    assert sigma.values[0, 0] == 1.0
    background = conductivity_on_grid(None, small_grid)
    np.testing.assert_array_equal(background.values, 1.0)


def test_scalar_field_shape_check(small_grid):
    with pytest.raises(ValueError):
        ScalarField(small_grid, np.zeros((3, 3)))


def _extents(shape):
    if isinstance(shape, Circle):
        return shape.radius, shape.radius
    c, s = math.cos(shape.rotation), math.sin(shape.rotation)
    a, b = shape.semi_major, shape.semi_minor
    return (math.sqrt((a * c) ** 2 + (b * s) ** 2),
            math.sqrt((a * s) ** 2 + (b * c) ** 2))


@pytest.mark.parametrize("scenario,count,kind", [(1, 3, Circle), (2, 5, Circle), (3, 4, Ellipse)])
def test_scenarios_shape_counts_and_ranges(scenario, count, kind):
    rng = np.random.default_rng(7)
    for _ in range(5):
        sample = sample_scenario(scenario, rng)
        assert len(sample.shapes) == count
        for sh in sample.shapes:
            assert isinstance(sh, kind)
            if scenario == 1:
                assert 0.2 <= sh.radius <= 0.4
            elif scenario == 2:
                assert 0.2 <= sh.radius <= 0.3
            else:
                assert 0.2 <= sh.semi_major <= 0.4
                assert 0.1 <= sh.semi_minor <= 0.2
            # margin rule: the whole shape stays 0.1 away from the boundary
            e1, e2 = _extents(sh)
            assert abs(sh.center[0]) + e1 <= 0.9 + 1e-12
            assert abs(sh.center[1]) + e2 <= 0.9 + 1e-12


def test_scenario_sampling_deterministic():
    a = sample_scenario(1, np.random.default_rng(123))
    b = sample_scenario(1, np.random.default_rng(123))
    assert a == b


def test_unknown_scenario_rejected():
    with pytest.raises(ValueError):
        sample_scenario(4, np.random.default_rng(0))
