"""Reconstruction quality metrics and the evaluation report."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .grid import IndexField

DEFAULT_THRESHOLD = 0.5


def _masks(pred: IndexField, truth: IndexField, threshold: float):
    if pred.grid.shape != truth.grid.shape:
        raise ValueError(
            f"grid mismatch: {pred.grid.shape} vs {truth.grid.shape}")
    return pred.values > threshold, truth.values > threshold


def iou(pred: IndexField, truth: IndexField,
        threshold: float = DEFAULT_THRESHOLD) -> float:
    """Intersection over union of thresholded masks; 1 when both are empty."""
    p, t = _masks(pred, truth, threshold)
    union = np.logical_or(p, t).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, t).sum() / union)


def dice(pred: IndexField, truth: IndexField,
         threshold: float = DEFAULT_THRESHOLD) -> float:
    """2|A and B| / (|A| + |B|); 1 when both masks are empty."""
    p, t = _masks(pred, truth, threshold)
    denom = int(p.sum()) + int(t.sum())
    if denom == 0:
        return 1.0
    return float(2.0 * np.logical_and(p, t).sum() / denom)


def accuracy(pred: IndexField, truth: IndexField,
             threshold: float = DEFAULT_THRESHOLD) -> float:
    p, t = _masks(pred, truth, threshold)
    return float((p == t).mean())


def mse_field(pred: IndexField, truth: IndexField) -> float:
    if pred.grid.shape != truth.grid.shape:
        raise ValueError(
            f"grid mismatch: {pred.grid.shape} vs {truth.grid.shape}")
    d = pred.values - truth.values
    return float(np.mean(d * d))


def config_digest(payload: dict) -> str:
    """Stable digest of a config/seed mapping (sorted-key JSON, sha256)."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"),
                      default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclass
class EvalReport:
    """Per-sample rows plus aggregates; aggregates are recomputed from the
    rows so the report stays an exact function of them."""

    digest: str
    rows: list = field(default_factory=list)  # dicts: sample, iou, dice, ...

    def add(self, sample: int, pred: IndexField, truth: IndexField,
            threshold: float = DEFAULT_THRESHOLD):
        self.rows.append({
            "sample": sample,
            "iou": iou(pred, truth, threshold),
            "dice": dice(pred, truth, threshold),
            "accuracy": accuracy(pred, truth, threshold),
            "mse": mse_field(pred, truth),
        })

    def aggregate(self) -> dict:
        out = {}
        for key in ("iou", "dice", "accuracy", "mse"):
            vals = np.array([r[key] for r in self.rows], dtype=np.float64)
            out[f"{key}_mean"] = float(vals.mean()) if vals.size else float("nan")
            out[f"{key}_std"] = float(vals.std()) if vals.size else float("nan")
        out["count"] = len(self.rows)
        return out

    def to_text(self) -> str:
        lines = [f"digest={self.digest}"]
        agg = self.aggregate()
        for key in sorted(agg):
            lines.append(f"{key}={agg[key]!r}")
        lines.append("sample\tiou\tdice\taccuracy\tmse")
        for r in self.rows:
            lines.append(
                f"{r['sample']}\t{r['iou']!r}\t{r['dice']!r}"
                f"\t{r['accuracy']!r}\t{r['mse']!r}")
        return "\n".join(lines) + "\n"

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())
