"""Focal, L1 + GIoU box, and weighted total loss evaluators."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import BoundingBox
from .errors import InvalidBoxError

# Stand-ins: the weights and focal parameters are not reported for the model.
DEFAULT_ALPHA = 0.25
DEFAULT_GAMMA = 2.0
P_FLOOR = 2.220446049250313e-16  # float64 machine epsilon


@dataclass(frozen=True)
class LossWeights:
    lambda_class: float = 2.0
    lambda_ref: float = 2.0
    lambda_box: float = 5.0

    def __post_init__(self):
        for name in ("lambda_class", "lambda_ref", "lambda_box"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


def focal_loss(p_t: float, alpha_t: float = DEFAULT_ALPHA, gamma: float = DEFAULT_GAMMA) -> float:
    """-alpha_t * (1 - p_t)**gamma * log(p_t).

    p_t = 0 is clamped to machine epsilon, giving a large finite loss
    (about 36.04 * alpha_t for gamma >= 0) instead of infinity.
    """
    if not 0.0 <= p_t <= 1.0 or math.isnan(p_t):
        raise ValueError(f"p_t must lie in [0, 1], got {p_t}")
    if not 0.0 <= alpha_t <= 1.0:
        raise ValueError(f"alpha_t must lie in [0, 1], got {alpha_t}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    p = max(p_t, P_FLOOR)
    if p == 1.0:
        return 0.0
    return -alpha_t * (1.0 - p) ** gamma * math.log(p)


def _corners(b: BoundingBox):
    if not (b.w > 0 and b.h > 0):
        raise InvalidBoxError(f"degenerate box {b}")
    return b.corners()


def iou(a: BoundingBox, b: BoundingBox) -> float:
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    iw = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    ih = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def giou(a: BoundingBox, b: BoundingBox) -> float:
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    iw = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    ih = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = iw * ih
    # areas from corners so identical boxes give exactly 1
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    hull = (max(ax2, bx2) - min(ax1, bx1)) * (max(ay2, by2) - min(ay1, by1))
    return inter / union - (hull - union) / hull


def box_loss(pred: BoundingBox, gt: BoundingBox) -> float:
    """L1 over (x, y, w, h) plus 1 - GIoU. Boxes are expected normalised."""
    l1 = abs(pred.x - gt.x) + abs(pred.y - gt.y) + abs(pred.w - gt.w) + abs(pred.h - gt.h)
    return l1 + (1.0 - giou(pred, gt))


def total_loss(class_term: float, ref_term: float, box_term: float, w: LossWeights = LossWeights()) -> float:
    for name, v in (("class_term", class_term), ("ref_term", ref_term), ("box_term", box_term)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    return w.lambda_class * class_term + w.lambda_ref * ref_term + w.lambda_box * box_term
