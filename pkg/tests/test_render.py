import numpy as np

from eitdsm.grid import CartesianGrid, IndexField
from eitdsm.render import field_to_rgb, render_heatmap


def test_rgb_shape_and_scale():
    grid = CartesianGrid(5, 3)
    field = IndexField(grid, np.zeros(grid.shape))
    rgb = field_to_rgb(field, scale=4)
    assert rgb.shape == (12, 20, 3)
    assert rgb.dtype == np.uint8


def test_color_endpoints_and_orientation():
    grid = CartesianGrid(3, 3)
    vals = np.zeros((3, 3))
    vals[0, 0] = 1.0  # the node at (-1, -1)
    rgb = field_to_rgb(IndexField(grid, vals), scale=1)
    # row 0 of the field (x2 = -1) is drawn at the bottom of the image
    hot = rgb[2, 0]
    cold = rgb[0, 0]
    assert hot[0] > hot[2]  # high values are red-dominated
    assert cold[2] > cold[0]  # low values are blue-dominated
    # value extremes hit the ramp endpoints
    assert tuple(hot) == (128, 0, 0)
    assert tuple(cold) == (0, 0, 128)


def test_out_of_range_values_clipped():
    grid = CartesianGrid(3, 3)
    vals = np.array([[-5.0, 0.0, 0.5], [2.0, 1.0, 0.5], [0.5, 0.5, 0.5]])
    rgb = field_to_rgb(IndexField(grid, vals), scale=1)
    assert tuple(rgb[2, 0]) == (0, 0, 128)  # clipped low
    assert tuple(rgb[1, 0]) == (128, 0, 0)  # clipped high


def test_png_bytes_stable(tmp_path):
    grid = CartesianGrid(8, 8)
    rng = np.random.default_rng(12)
    field = IndexField(grid, rng.uniform(size=grid.shape))
    p1 = str(tmp_path / "a.png")
    p2 = str(tmp_path / "b.png")
    render_heatmap(field, p1)
    render_heatmap(field, p2)
    with open(p1, "rb") as fa, open(p2, "rb") as fb:
        assert fa.read() == fb.read()
