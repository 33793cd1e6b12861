"""Motion-guided prediction head.

Word-level motion tokens first attend over the reference tokens; the aligned
query then attends over that motion-reference fusion, picks up the
sentence-level motion feature through a residual, and goes through a linear
layer. Class and referring confidences and box offsets are read from the
fused feature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, List, Optional, Tuple

import numpy as np
from scipy.special import expit

from .core import BoundingBox, FrameContext
from .errors import ShapeError
from .features import FeatureMatrix
from .tensor import DEFAULT_HEADS, AttentionParams, Linear, as_matrix, mha

CLASS_THRESHOLD = 0.6
REFERRING_THRESHOLD = 0.4
MIN_BOX_SIZE = 1.0


class TemporalEnhancer:
    """Identity pass-through; the slot where a temporal module would plug in."""

    def __call__(self, query: np.ndarray, history=None) -> np.ndarray:
        return query


@dataclass
class HeadParams:
    motion_reference: AttentionParams
    query_motion: AttentionParams
    fuse: Linear
    class_branch: Linear
    referring_branch: Linear
    box_hidden: Linear
    box_out: Linear

    @property
    def dim(self) -> int:
        return self.fuse.in_dim

    @classmethod
    def init(cls, rng: np.random.Generator, dim: int, heads: int = DEFAULT_HEADS) -> "HeadParams":
        return cls(
            AttentionParams.init(rng, dim, heads),
            AttentionParams.init(rng, dim, heads),
            Linear.init(rng, dim, dim),
            Linear.init(rng, dim, 1),
            Linear.init(rng, dim, 1),
            Linear.init(rng, dim, dim),
            Linear.init(rng, dim, 4),
        )

    @classmethod
    def identity(
        cls,
        dim: int,
        heads: int = DEFAULT_HEADS,
        class_logit: float = 0.0,
        referring_logit: float = 0.0,
    ) -> "HeadParams":
        """Residual-only head: zero attention outputs, identity fuse, zero box MLP.

        Confidences are the sigmoid of the given constant logits.
        """
        zero_attn = AttentionParams.identity(dim, heads).with_zero_output()
        cls_b = Linear.zeros(dim, 1)
        cls_b.bias[:] = class_logit
        ref_b = Linear.zeros(dim, 1)
        ref_b.bias[:] = referring_logit
        return cls(
            zero_attn,
            zero_attn,
            Linear.identity(dim),
            cls_b,
            ref_b,
            Linear.zeros(dim, dim),
            Linear.zeros(dim, 4),
        )

    def to_dict(self) -> dict:
        out = {}
        for stage in ("motion_reference", "query_motion"):
            for k, v in getattr(self, stage).to_dict().items():
                out[f"head.{stage}.{k}"] = v
        for name in ("fuse", "class_branch", "referring_branch", "box_hidden", "box_out"):
            lin = getattr(self, name)
            out[f"head.{name}.weight"] = lin.weight
            out[f"head.{name}.bias"] = lin.bias
        return out


@dataclass
class Prediction:
    class_confidence: float
    referring_confidence: float
    box_offsets: Tuple[float, float, float, float]
    refined_box: BoundingBox
    id: Optional[Hashable] = None
    frame: Optional[int] = None


def fuse(
    track_feature,
    word_motion: FeatureMatrix,
    sent_motion,
    reference: FeatureMatrix,
    params: HeadParams,
) -> np.ndarray:
    track = as_matrix(track_feature, "track_feature")
    sent = as_matrix(sent_motion, "sent_motion")
    if track.shape != (1, params.dim) or sent.shape != (1, params.dim):
        raise ShapeError(f"expected 1x{params.dim} features, got {track.shape} and {sent.shape}")
    words = word_motion.valid_rows()
    if words.shape[0] == 0:
        return params.fuse(track + sent)
    ref = reference.valid_rows()
    if ref.shape[0] == 0:
        raise ShapeError("reference features are empty but motion tokens are present")
    f_mr = mha(words, ref, ref, params.motion_reference) + words
    return params.fuse(mha(track, f_mr, f_mr, params.query_motion) + track + sent)


def apply_offsets(prior: BoundingBox, offsets, ctx: FrameContext) -> BoundingBox:
    """Add normalised (dx, dy, dw, dh) to the prior box; w, h clamp at 1 px."""
    dx, dy, dw, dh = (float(v) for v in offsets)
    W, H = ctx.width, ctx.height
    # pixel-space form of (prior / size + offset) * size; exact for zero offsets
    x = prior.x + dx * W
    y = prior.y + dy * H
    w = max(prior.w + dw * W, MIN_BOX_SIZE)
    h = max(prior.h + dh * H, MIN_BOX_SIZE)
    return BoundingBox(x, y, w, h)


def predict(fused, prior_box: BoundingBox, ctx: FrameContext, params: HeadParams) -> Prediction:
    prior_box.check()
    f = as_matrix(fused, "fused")
    cls_conf = float(expit(params.class_branch(f))[0, 0])
    ref_conf = float(expit(params.referring_branch(f))[0, 0])
    hidden = np.maximum(params.box_hidden(f), 0.0)
    offsets = tuple(float(v) for v in params.box_out(hidden)[0])
    return Prediction(cls_conf, ref_conf, offsets, apply_offsets(prior_box, offsets, ctx))


def filter_outputs(
    predictions: Iterable[Prediction],
    class_threshold: float = CLASS_THRESHOLD,
    referring_threshold: float = REFERRING_THRESHOLD,
) -> List[Prediction]:
    """Keep predictions strictly above both thresholds."""
    for t in (class_threshold, referring_threshold):
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"threshold {t} outside [0, 1]")
    return [
        p
        for p in predictions
        if p.class_confidence > class_threshold and p.referring_confidence > referring_threshold
    ]
