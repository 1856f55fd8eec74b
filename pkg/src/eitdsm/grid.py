"""Domain geometry: Cartesian grids, random inclusion shapes, index fields.

The domain is the square (-1,1)^2.  Interior fields are stored as (n2, n1)
C-contiguous float64 arrays; entry [j, i] lives at the node
(-1 + i*h1, -1 + j*h2), and flattened vectors use C order (index j*n1 + i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CENTER_BOX = 0.9  # inclusion centers are drawn from (-0.9, 0.9)^2
BOUNDARY_MARGIN = 0.1  # minimum distance from any shape to the boundary
MAX_SHAPE_ATTEMPTS = 1000

SIGMA_INCLUSION = 10.0
SIGMA_BACKGROUND = 1.0


class ShapeSamplingError(RuntimeError):
    """Rejection sampling could not place a shape within the margin box."""


@dataclass(frozen=True)
class CartesianGrid:
    """Uniform n1 x n2 node grid on [-1,1]^2."""

    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 3 or self.n2 < 3:
            raise ValueError("grid needs at least 3 nodes per direction")

    @property
    def h1(self) -> float:
        return 2.0 / (self.n1 - 1)

    @property
    def h2(self) -> float:
        return 2.0 / (self.n2 - 1)

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape of a field on this grid: (n2, n1)."""
        return (self.n2, self.n1)

    @property
    def n_nodes(self) -> int:
        return self.n1 * self.n2

    def x1_axis(self) -> np.ndarray:
        return -1.0 + self.h1 * np.arange(self.n1)

    def x2_axis(self) -> np.ndarray:
        return -1.0 + self.h2 * np.arange(self.n2)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """(X1, X2) node coordinate planes, each of shape (n2, n1)."""
        x2, x1 = np.meshgrid(self.x2_axis(), self.x1_axis(), indexing="ij")
        return x1, x2


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    semi_major: float
    semi_minor: float
    rotation: float  # radians, in [0, 2*pi)

    def __post_init__(self):
        if self.semi_major <= 0 or self.semi_minor <= 0:
            raise ValueError("semi-axes must be positive")


Shape = Circle | Ellipse


@dataclass(frozen=True)
class ConductivitySample:
    """Union-of-shapes inclusion with inside/background conductivities."""

    shapes: tuple[Shape, ...]
    sigma_inclusion: float = SIGMA_INCLUSION
    sigma_background: float = SIGMA_BACKGROUND

    def __post_init__(self):
        if self.sigma_inclusion <= 0 or self.sigma_background <= 0:
            raise ValueError("conductivities must be strictly positive")


@dataclass
class ScalarField:
    grid: CartesianGrid
    values: np.ndarray  # (n2, n1) float64

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )


@dataclass
class VectorField:
    grid: CartesianGrid
    dx_values: np.ndarray  # (n2, n1) d/dx1
    dy_values: np.ndarray  # (n2, n1) d/dx2

    def __post_init__(self):
        self.dx_values = np.asarray(self.dx_values, dtype=np.float64)
        self.dy_values = np.asarray(self.dy_values, dtype=np.float64)
        if self.dx_values.shape != self.grid.shape or self.dy_values.shape != self.grid.shape:
            raise ValueError("vector field shape does not match grid")


@dataclass
class IndexField:
    """A [0,1]-valued field over the grid; ground truths are exactly {0,1}."""

    grid: CartesianGrid
    values: np.ndarray  # (n2, n1) in [0,1]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError("index field shape does not match grid")


def level_set(shape: Shape, x1, x2):
    """Signed level function: negative inside, zero on the curve, positive outside.

    Circle: |x - center| - r (exact signed distance).  Ellipse: the rotated
    quadratic form q = sqrt((xi/a)^2 + (eta/b)^2), rescaled to (q - 1) * b so
    the value approximates signed distance near the boundary; only the sign is
    load-bearing downstream.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if isinstance(shape, Circle):
        return np.hypot(x1 - shape.center[0], x2 - shape.center[1]) - shape.radius
    if isinstance(shape, Ellipse):
        c, s = math.cos(shape.rotation), math.sin(shape.rotation)
        u1 = x1 - shape.center[0]
        u2 = x2 - shape.center[1]
        xi = c * u1 + s * u2
        eta = -s * u1 + c * u2
        q = np.sqrt((xi / shape.semi_major) ** 2 + (eta / shape.semi_minor) ** 2)
        return (q - 1.0) * shape.semi_minor
    raise TypeError(f"unknown shape type {type(shape).__name__}")


def union_level_set(sample: ConductivitySample, x1, x2):
    """Pointwise min of the per-shape level sets; negative iff inside the union."""
    if not sample.shapes:
        raise ValueError("sample has no shapes")
    out = level_set(sample.shapes[0], x1, x2)
    for shape in sample.shapes[1:]:
        out = np.minimum(out, level_set(shape, x1, x2))
    return out


def _axis_extents(shape: Shape) -> tuple[float, float]:
    """Half-widths of the shape along the coordinate axes (support function)."""
    if isinstance(shape, Circle):
        return shape.radius, shape.radius
    c, s = math.cos(shape.rotation), math.sin(shape.rotation)
    a, b = shape.semi_major, shape.semi_minor
    ext1 = math.sqrt((a * c) ** 2 + (b * s) ** 2)
    ext2 = math.sqrt((a * s) ** 2 + (b * c) ** 2)
    return ext1, ext2


def _within_margin(shape: Shape) -> bool:
    ext1, ext2 = _axis_extents(shape)
    cx, cy = shape.center
    limit = 1.0 - BOUNDARY_MARGIN
    return abs(cx) + ext1 <= limit and abs(cy) + ext2 <= limit


def sample_scenario(scenario: int, rng: np.random.Generator) -> ConductivitySample:
    """Draw a random inclusion sample for one of the three scenarios.

    1: three circles, radius U(0.2, 0.4)
    2: five circles, radius U(0.2, 0.3)
    3: four ellipses, semi-minor U(0.1, 0.2), semi-major U(0.2, 0.4),
       rotation U(0, 2*pi)

    Centers are uniform over (-0.9, 0.9)^2.  Shapes may overlap each other,
    but any shape that comes closer than 0.1 to the boundary is redrawn
    (whole-shape rejection, up to MAX_SHAPE_ATTEMPTS draws per shape).
    """
    if scenario == 1:
        counts, maker = 3, _draw_circle_1
    elif scenario == 2:
        counts, maker = 5, _draw_circle_2
    elif scenario == 3:
        counts, maker = 4, _draw_ellipse
    else:
        raise ValueError(f"scenario must be 1, 2 or 3, got {scenario}")
    shapes = []
    for _ in range(counts):
        for attempt in range(MAX_SHAPE_ATTEMPTS):
            shape = maker(rng)
            if _within_margin(shape):
                shapes.append(shape)
                break
        else:
            raise ShapeSamplingError(
                f"no admissible shape after {MAX_SHAPE_ATTEMPTS} attempts"
            )
    return ConductivitySample(shapes=tuple(shapes))


def _draw_center(rng) -> tuple[float, float]:
    c = rng.uniform(-CENTER_BOX, CENTER_BOX, size=2)
    return float(c[0]), float(c[1])


def _draw_circle_1(rng) -> Circle:
    center = _draw_center(rng)
    return Circle(center, float(rng.uniform(0.2, 0.4)))


def _draw_circle_2(rng) -> Circle:
    center = _draw_center(rng)
    return Circle(center, float(rng.uniform(0.2, 0.3)))


def _draw_ellipse(rng) -> Ellipse:
    center = _draw_center(rng)
    semi_minor = float(rng.uniform(0.1, 0.2))
    semi_major = float(rng.uniform(0.2, 0.4))
    rotation = float(rng.uniform(0.0, 2.0 * math.pi))
    return Ellipse(center, semi_major, semi_minor, rotation)


def ground_truth_index(sample: ConductivitySample, grid: CartesianGrid) -> IndexField:
    """1 at nodes strictly inside the union, 0 elsewhere."""
    if not sample.shapes:
        return IndexField(grid, np.zeros(grid.shape))
    x1, x2 = grid.coords()
    inside = union_level_set(sample, x1, x2) < 0.0
    return IndexField(grid, inside.astype(np.float64))


def conductivity_on_grid(sample: ConductivitySample | None, grid: CartesianGrid) -> ScalarField:
    """Per-node conductivity; a None or shapeless sample gives the background."""
    if sample is None or not sample.shapes:
        bg = sample.sigma_background if sample is not None else SIGMA_BACKGROUND
        return ScalarField(grid, np.full(grid.shape, bg))
    x1, x2 = grid.coords()
    inside = union_level_set(sample, x1, x2) < 0.0
    values = np.where(inside, sample.sigma_inclusion, sample.sigma_background)
    return ScalarField(grid, values)
