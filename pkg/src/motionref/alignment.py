"""Vision-motion-reference alignment of track queries.

Three chained residual cross-attentions refine the track queries:

1. each track query attends over its own object's word-level motion tokens;
2. the result attends over the sentence-level motion features of all tracks;
3. the result attends over the reference-expression tokens.

Detection queries are passed through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, List, Sequence

import numpy as np

from .errors import ShapeError
from .features import FeatureMatrix
from .tensor import DEFAULT_HEADS, AttentionParams, as_matrix, mha


@dataclass
class QuerySet:
    track_queries: np.ndarray
    detection_queries: np.ndarray
    track_ids: List[Hashable] = field(default_factory=list)
    detection_ids: List[Hashable] = field(default_factory=list)

    def __post_init__(self):
        self.track_queries = as_matrix(self.track_queries, "track_queries")
        self.detection_queries = as_matrix(self.detection_queries, "detection_queries")
        if self.track_queries.shape[0] != len(self.track_ids):
            raise ShapeError(
                f"{self.track_queries.shape[0]} track queries but {len(self.track_ids)} ids"
            )


@dataclass
class AlignmentParams:
    motion_word: AttentionParams
    motion_sentence: AttentionParams
    reference: AttentionParams

    @classmethod
    def init(cls, rng: np.random.Generator, dim: int, heads: int = DEFAULT_HEADS) -> "AlignmentParams":
        return cls(*(AttentionParams.init(rng, dim, heads) for _ in range(3)))

    def with_zero_outputs(self) -> "AlignmentParams":
        return AlignmentParams(
            self.motion_word.with_zero_output(),
            self.motion_sentence.with_zero_output(),
            self.reference.with_zero_output(),
        )

    def to_dict(self) -> dict:
        out = {}
        for stage in ("motion_word", "motion_sentence", "reference"):
            for k, v in getattr(self, stage).to_dict().items():
                out[f"align.{stage}.{k}"] = v
        return out


def align_tracks(
    track_queries: np.ndarray,
    word_motion: Sequence[FeatureMatrix],
    sent_motion: np.ndarray,
    reference: FeatureMatrix,
    params: AlignmentParams,
) -> np.ndarray:
    tq = as_matrix(track_queries, "track_queries")
    t = tq.shape[0]
    if len(word_motion) != t:
        raise ShapeError(f"{t} track queries but {len(word_motion)} word-motion matrices")
    sent = as_matrix(sent_motion, "sent_motion")
    if t == 0:
        return tq.copy()
    if sent.shape[0] != t:
        raise ShapeError(f"{t} track queries but {sent.shape[0]} sentence features")
    ref = reference.valid_rows()
    if ref.shape[0] == 0:
        raise ShapeError("reference features are empty; cannot align track queries")

    f_vm = tq.copy()
    for i, words in enumerate(word_motion):
        keys = words.valid_rows()
        # no description yet: nothing to attend over, residual only
        if keys.shape[0]:
            f_vm[i] = mha(tq[i : i + 1], keys, keys, params.motion_word)[0] + tq[i]

    f_vms = mha(f_vm, sent, sent, params.motion_sentence) + f_vm
    return mha(f_vms, ref, ref, params.reference) + f_vms


def align(
    queries: QuerySet,
    word_motion: Sequence[FeatureMatrix],
    sent_motion: np.ndarray,
    reference: FeatureMatrix,
    params: AlignmentParams,
) -> QuerySet:
    """Refine track queries; detection queries come back byte-identical."""
    updated = align_tracks(queries.track_queries, word_motion, sent_motion, reference, params)
    return QuerySet(
        updated,
        queries.detection_queries.copy(),
        list(queries.track_ids),
        list(queries.detection_ids),
    )
