"""Classification/confidence losses (BCE, focal, varifocal) with their
analytic derivatives, and IoU/GIoU box-regression losses.

Every loss is a per-sample value. Inputs may be scalars or numpy arrays
(broadcast together); scalar inputs give a Python float back. Predicted
scores are clamped to ``[EPS, 1 - EPS]`` before any log is taken.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .boxes import BoundingBox, giou, iou

EPS = 1e-12


@dataclass(frozen=True)
class FocalConfig:
    alpha: float = 0.25
    gamma: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")


FOCAL_DEFAULT = FocalConfig(alpha=0.25, gamma=2.0)
VARIFOCAL_DEFAULT = FocalConfig(alpha=0.75, gamma=2.0)


@dataclass(frozen=True)
class VarifocalSample:
    y_hat: float
    q: float

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"target quality q must lie in [0, 1], got {self.q}")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def clamp_prob(y_hat):
    return np.clip(np.asarray(y_hat, dtype=np.float64), EPS, 1.0 - EPS)


def _labels(y):
    y = np.asarray(y)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return y.astype(bool)


def bce_loss(y_hat, y):
    """-log(p) for positives, -log(1 - p) for negatives."""
    p = clamp_prob(y_hat)
    pos = _labels(y)
    return _out(np.where(pos, -np.log(p), -np.log1p(-p)))


def focal_loss(y_hat, y, cfg: FocalConfig = FOCAL_DEFAULT):
    p = clamp_prob(y_hat)
    pos = _labels(y)
    a, g = cfg.alpha, cfg.gamma
    lp = -a * (1.0 - p) ** g * np.log(p)
    ln = -(1.0 - a) * p ** g * np.log1p(-p)
    return _out(np.where(pos, lp, ln))


def varifocal_loss(y_hat, q=None, cfg: FocalConfig = VARIFOCAL_DEFAULT):
    """Positives (q > 0) get BCE against the soft target q, weighted by q.
    Negatives (q == 0) get focal down-weighting ``alpha * p**gamma``, with p
    the predicted score itself. ``y_hat`` may also be a ``VarifocalSample``.
    """
    if isinstance(y_hat, VarifocalSample):
        y_hat, q = y_hat.y_hat, y_hat.q
    elif q is None:
        raise TypeError("target quality q is required")
    p = clamp_prob(y_hat)
    q = np.asarray(q, dtype=np.float64)
    if np.any((q < 0) | (q > 1)):
        raise ValueError("q must lie in [0, 1]")
    lp = -q * (q * np.log(p) + (1.0 - q) * np.log1p(-p))
    ln = -cfg.alpha * p ** cfg.gamma * np.log1p(-p)
    return _out(np.where(q > 0, lp, ln))


# derivatives w.r.t. the (unclamped) predicted score, valid inside (EPS, 1 - EPS)

def bce_grad(y_hat, y):
    p = clamp_prob(y_hat)
    pos = _labels(y)
    return _out(np.where(pos, -1.0 / p, 1.0 / (1.0 - p)))


def _neg_focal_grad(p, weight, g):
    # d/dp [-w * p**g * log(1 - p)]
    dg = g * p ** (g - 1.0) if g != 0 else 0.0
    return -weight * (dg * np.log1p(-p) - p ** g / (1.0 - p))


def focal_grad(y_hat, y, cfg: FocalConfig = FOCAL_DEFAULT):
    p = clamp_prob(y_hat)
    pos = _labels(y)
    a, g = cfg.alpha, cfg.gamma
    dg = g * (1.0 - p) ** (g - 1.0) if g != 0 else 0.0
    gp = a * (dg * np.log(p) - (1.0 - p) ** g / p)
    gn = _neg_focal_grad(p, 1.0 - a, g)
    return _out(np.where(pos, gp, gn))


def varifocal_grad(y_hat, q, cfg: FocalConfig = VARIFOCAL_DEFAULT):
    p = clamp_prob(y_hat)
    q = np.asarray(q, dtype=np.float64)
    gp = -q * (q / p - (1.0 - q) / (1.0 - p))
    gn = _neg_focal_grad(p, cfg.alpha, cfg.gamma)
    return _out(np.where(q > 0, gp, gn))


def iou_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    return 1.0 - iou(pred, gt)


def giou_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    return 1.0 - giou(pred, gt)


def reduce_losses(values, reduction: str = "mean") -> float:
    values = np.asarray(values, dtype=np.float64)
    if reduction == "mean":
        return float(values.mean()) if values.size else 0.0
    if reduction == "sum":
        return float(values.sum())
    raise ValueError(f"unknown reduction {reduction!r}")


def finite_diff_grad(f: Callable[[float], float], x: float, h: float = 1e-6) -> float:
    """Central difference (f(x + h) - f(x - h)) / 2h."""
    return (f(x + h) - f(x - h)) / (2.0 * h)


def loss_table(grid=None, focal: FocalConfig = FOCAL_DEFAULT,
               varifocal: FocalConfig = VARIFOCAL_DEFAULT, q: float = 1.0) -> list[dict]:
    """Loss values over a grid of predicted scores, one row per score."""
    if grid is None:
        grid = np.round(np.linspace(0.05, 0.95, 19), 2)
    rows = []
    for p in grid:
        p = float(p)
        rows.append({
            "y_hat": p,
            "bce_pos": bce_loss(p, 1),
            "bce_neg": bce_loss(p, 0),
            "focal_pos": focal_loss(p, 1, focal),
            "focal_neg": focal_loss(p, 0, focal),
            "varifocal_pos": varifocal_loss(p, q, varifocal),
            "varifocal_neg": varifocal_loss(p, 0.0, varifocal),
        })
    return rows
