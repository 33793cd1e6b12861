"""Per-frame tracking pipeline.

For every frame: each observed object gets a motion description from its
memory-bank window, the description and the reference expression are
encoded by the feature provider, track queries are aligned, every query goes
through the prediction head, predictions above both thresholds are kept and
the bank is updated with the refined boxes.

The upstream detector/transformer is not modelled. Its queries are replaced by
a seeded affine embedding of the normalised box (x/W, y/H, w/W, h/H), and the
object ids in the input file stand in for its identity propagation. Objects
seen for the first time are detection queries; objects with stored history are
track queries.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Hashable, Iterable, List, Optional, Tuple

import numpy as np

from . import tensor
from .alignment import AlignmentParams, QuerySet, align
from .core import TRACK, BoundingBox, FrameContext, MemoryBank
from .describe import MotionDescription, compose_description
from .errors import ConfigError
from .features import DEFAULT_DIM, FeatureMatrix, FileProvider, HashProvider, pool_sentence, project
from .head import (
    CLASS_THRESHOLD,
    REFERRING_THRESHOLD,
    HeadParams,
    Prediction,
    TemporalEnhancer,
    filter_outputs,
    fuse,
    predict,
)
from .io import Observation, SequenceInfo
from .tensor import DEFAULT_HEADS, AttentionParams, Linear

log = logging.getLogger(__name__)

# logit used by the identity preset's class branch and by oracle relevance
CONFIDENT_LOGIT = 4.0


@dataclass
class SessionConfig:
    """Runtime constants of a tracking session.

    ``preset`` is "random" (seeded weights) or "identity" (residual-only
    alignment and head, zero box offsets, confident class branch).
    ``referring`` is "model" (referring branch output) or "oracle" (relevance
    taken from the sequence metadata). ``bank_update`` chooses whether the
    memory bank stores the refined ("predicted") or ingested ("observed") box.
    """

    memory_capacity: int = 4
    feature_dim: int = DEFAULT_DIM
    heads: int = DEFAULT_HEADS
    class_threshold: float = CLASS_THRESHOLD
    referring_threshold: float = REFERRING_THRESHOLD
    provider: str = "hash"
    provider_path: Optional[str] = None
    seed: int = 0
    preset: str = "random"
    referring: str = "model"
    bank_update: str = "predicted"
    params_path: Optional[str] = None

    def __post_init__(self):
        if self.memory_capacity < 1:
            raise ConfigError("memory_capacity must be >= 1")
        if self.feature_dim < 1 or self.heads < 1 or self.feature_dim % self.heads:
            raise ConfigError(f"heads={self.heads} must divide feature_dim={self.feature_dim}")
        for name in ("class_threshold", "referring_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        choices = {
            "provider": ("hash", "file"),
            "preset": ("random", "identity"),
            "referring": ("model", "oracle"),
            "bank_update": ("predicted", "observed"),
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.provider == "file" and not self.provider_path:
            raise ConfigError("provider 'file' needs provider_path")

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SessionConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FrameResult:
    frame: int
    descriptions: Dict[Hashable, MotionDescription]
    predictions: List[Prediction]
    kept: List[Prediction]


def _attention_from(d: dict, prefix: str, heads: int) -> AttentionParams:
    keys = ("w_q", "w_k", "w_v", "w_o", "b_q", "b_k", "b_v", "b_o")
    vals = [d[f"{prefix}.{k}"] for k in keys]
    return AttentionParams(heads, *vals[:4], *(np.asarray(v).reshape(-1) for v in vals[4:]))


def _linear_from(d: dict, prefix: str) -> Linear:
    return Linear(d[f"{prefix}.weight"], np.asarray(d[f"{prefix}.bias"]).reshape(-1))


class Session:
    """Holds the memory bank, provider and parameters of one tracking run."""

    def __init__(self, config: SessionConfig, info: SequenceInfo, reference: Optional[str] = None):
        self.config = config
        self.info = info
        self.reference_text = info.reference if reference is None else reference
        if not self.reference_text.split():
            raise ConfigError("a reference expression is required (none given and none in the sequence info)")
        self.bank = MemoryBank(config.memory_capacity)
        self.temporal = TemporalEnhancer()
        d = config.feature_dim

        hash_provider = HashProvider(d, config.seed)
        if config.provider == "file":
            self.provider = FileProvider.load(config.provider_path, dim=d, fallback=hash_provider)
        else:
            self.provider = hash_provider

        rng = np.random.default_rng(config.seed)
        self.embed = Linear(rng.uniform(-1.0, 1.0, size=(4, d)), rng.uniform(-1.0, 1.0, size=d))
        if config.preset == "identity":
            self.align_params = AlignmentParams.init(rng, d, config.heads).with_zero_outputs()
            self.head_params = HeadParams.identity(d, config.heads, class_logit=CONFIDENT_LOGIT)
            self.motion_proj = Linear.identity(d)
        else:
            self.align_params = AlignmentParams.init(rng, d, config.heads)
            self.head_params = HeadParams.init(rng, d, config.heads)
            self.motion_proj = Linear.init(rng, d, d)
        if config.params_path:
            self.load_params(config.params_path)

        self.relevant = None
        if config.referring == "oracle":
            if info.relevant_ids is None:
                raise ConfigError("referring 'oracle' needs relevant_ids in the sequence info")
            self.relevant = set(info.relevant_ids)
        self._reference_features: Optional[FeatureMatrix] = None

    # -- parameters ---------------------------------------------------------

    def params_dict(self) -> Dict[str, np.ndarray]:
        out = {"embed.weight": self.embed.weight, "embed.bias": self.embed.bias,
               "motion_proj.weight": self.motion_proj.weight,
               "motion_proj.bias": self.motion_proj.bias}
        out.update(self.align_params.to_dict())
        out.update(self.head_params.to_dict())
        return out

    def save_params(self, path) -> None:
        tensor.save_matrices(path, self.params_dict())

    def load_params(self, path) -> None:
        d = tensor.load_matrices(path)
        h = self.config.heads
        self.embed = _linear_from(d, "embed")
        self.motion_proj = _linear_from(d, "motion_proj")
        self.align_params = AlignmentParams(
            *(_attention_from(d, f"align.{s}", h) for s in ("motion_word", "motion_sentence", "reference"))
        )
        self.head_params = HeadParams(
            _attention_from(d, "head.motion_reference", h),
            _attention_from(d, "head.query_motion", h),
            *(_linear_from(d, f"head.{n}") for n in
              ("fuse", "class_branch", "referring_branch", "box_hidden", "box_out")),
        )

    # -- per-frame work -----------------------------------------------------

    @property
    def reference_features(self) -> FeatureMatrix:
        if self._reference_features is None:
            self._reference_features = self.provider.encode_words(self.reference_text)
        return self._reference_features

    def is_tracked(self, id) -> bool:
        return any(b.is_valid for _, b in self.bank.history(id))

    def query_for(self, box: BoundingBox) -> np.ndarray:
        W, H = self.info.width, self.info.height
        return self.embed(np.array([[box.x / W, box.y / H, box.w / W, box.h / H]]))

    def describe(self, id, frame: int, box: BoundingBox, ctx: FrameContext) -> MotionDescription:
        window = (self.bank.history(id) + [(frame, box)])[-self.config.memory_capacity:]
        return compose_description(window, ctx)

    def motion_features(self, desc: MotionDescription) -> Tuple[FeatureMatrix, np.ndarray]:
        words = self.provider.encode_words(desc.sentence)
        if words.rows == 0 or words.mask.sum() == 0:
            return words, np.zeros((1, self.config.feature_dim))
        return words, project(pool_sentence(words), self.motion_proj.weight, self.motion_proj.bias)

    def step(self, frame: int, observations: List[Tuple[Hashable, BoundingBox]]) -> FrameResult:
        ctx = FrameContext(frame, self.info.width, self.info.height)
        valid = [(i, b) for i, b in observations if b.is_valid]
        descs: Dict[Hashable, MotionDescription] = {}
        words: Dict[Hashable, FeatureMatrix] = {}
        sents: Dict[Hashable, np.ndarray] = {}
        for id_, box in valid:
            descs[id_] = self.describe(id_, frame, box, ctx)
            words[id_], sents[id_] = self.motion_features(descs[id_])

        track = [(i, b) for i, b in valid if self.is_tracked(i)]
        det = [(i, b) for i, b in valid if not self.is_tracked(i)]
        dim = self.config.feature_dim
        qs = QuerySet(
            np.vstack([self.query_for(b) for _, b in track]) if track else np.zeros((0, dim)),
            np.vstack([self.query_for(b) for _, b in det]) if det else np.zeros((0, dim)),
            [i for i, _ in track],
            [i for i, _ in det],
        )
        ref = self.reference_features
        if track:
            qs = align(
                qs,
                [words[i] for i, _ in track],
                np.vstack([sents[i] for i, _ in track]),
                ref,
                self.align_params,
            )

        preds: List[Prediction] = []
        rows = [(i, b, qs.track_queries[k]) for k, (i, b) in enumerate(track)]
        rows += [(i, b, qs.detection_queries[k]) for k, (i, b) in enumerate(det)]
        for id_, box, q in rows:
            q = self.temporal(q[None, :], self.bank.history(id_))
            fused = fuse(q, words[id_], sents[id_], ref, self.head_params)
            p = predict(fused, box, ctx, self.head_params)
            p.id, p.frame = id_, frame
            if self.relevant is not None:
                logit = CONFIDENT_LOGIT if id_ in self.relevant else -CONFIDENT_LOGIT
                p.referring_confidence = float(1.0 / (1.0 + np.exp(-logit)))
            preds.append(p)
        preds.sort(key=lambda p: repr(p.id))

        ingested = dict(valid)
        for p in preds:
            stored = p.refined_box if self.config.bank_update == "predicted" else ingested[p.id]
            self.bank.push(p.id, frame, stored, role=TRACK)
        for id_, box in observations:
            if box.is_sentinel:
                self.bank.push(id_, frame, box)

        kept = filter_outputs(preds, self.config.class_threshold, self.config.referring_threshold)
        return FrameResult(frame, descs, preds, kept)


def group_observations(observations: Iterable[Observation]) -> Dict[int, List[Tuple[Hashable, BoundingBox]]]:
    frames: Dict[int, List[Tuple[Hashable, BoundingBox]]] = {}
    for o in observations:
        frames.setdefault(o.frame, []).append((o.id, o.box))
    for f, items in frames.items():
        ids = [i for i, _ in items]
        if len(ids) != len(set(ids)):
            raise ValueError(f"frame {f}: duplicate object id")
        items.sort(key=lambda t: repr(t[0]))
    return dict(sorted(frames.items()))


@dataclass
class PipelineOutput:
    predictions: List[Prediction] = field(default_factory=list)
    descriptions: List[Tuple[int, Hashable, str]] = field(default_factory=list)
    frames: List[FrameResult] = field(default_factory=list)


def run_pipeline(
    observations: Iterable[Observation],
    info: SequenceInfo,
    config: SessionConfig,
    reference: Optional[str] = None,
) -> PipelineOutput:
    session = Session(config, info, reference)
    out = PipelineOutput()
    for frame, items in group_observations(observations).items():
        res = session.step(frame, items)
        out.frames.append(res)
        out.predictions.extend(res.kept)
        out.descriptions.extend((frame, i, d.sentence) for i, d in sorted(res.descriptions.items(), key=lambda t: repr(t[0])))
    log.info("processed %d frames, kept %d predictions", len(out.frames), len(out.predictions))
    return out


def describe_sequence(
    observations: Iterable[Observation], info: SequenceInfo, capacity: int = 4
) -> List[Tuple[int, Hashable, str]]:
    """Descriptions from ingested boxes only (no model in the loop)."""
    bank = MemoryBank(capacity)
    rows = []
    for frame, items in group_observations(observations).items():
        ctx = FrameContext(frame, info.width, info.height)
        for id_, box in items:
            bank.push(id_, frame, box)
            if box.is_valid:
                rows.append((frame, id_, compose_description(bank.history(id_), ctx).sentence))
    return rows
