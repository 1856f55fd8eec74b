"""PNG heatmaps of index fields.

Values are clamped to [0,1] and mapped through a fixed 256-entry blue-to-red
lookup table; row 0 of the field is drawn at the bottom of the image (x2
grows upward).  Identical fields produce identical bytes.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .grid import IndexField


def _lut() -> np.ndarray:
    """256x3 uint8 colormap: blue, cyan, yellow, red ramps."""
    t = np.linspace(0.0, 1.0, 256)

    def ramp(x):
        return np.clip(1.5 - np.abs(x), 0.0, 1.0)

    r = ramp(4.0 * (t - 0.75))
    g = ramp(4.0 * (t - 0.50))
    b = ramp(4.0 * (t - 0.25))
    return (np.stack([r, g, b], axis=1) * 255.0).round().astype(np.uint8)


_LUT = _lut()


def field_to_rgb(field: IndexField, scale: int = 4) -> np.ndarray:
    """(H*scale, W*scale, 3) uint8 image array, row 0 at the bottom."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    vals = np.clip(field.values, 0.0, 1.0)
    idx = np.minimum((vals * 256.0).astype(np.intp), 255)
    rgb = _LUT[idx]
    rgb = rgb[::-1, :, :]  # row 0 at the bottom
    if scale > 1:
        rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    return np.ascontiguousarray(rgb)


def render_heatmap(field: IndexField, out_path: str, scale: int = 4):
    """Write the field as a PNG file (bit-stable for identical inputs)."""
    img = Image.fromarray(field_to_rgb(field, scale), mode="RGB")
    img.save(out_path, format="PNG")
