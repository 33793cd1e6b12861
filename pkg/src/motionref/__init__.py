"""Motion-aware referring multi-object tracking toolkit."""

from .core import BoundingBox, FrameContext, MemoryBank, TrackRecord, push_observation, retrieve_history
from .describe import MotionDescription, compose_description
from .features import FeatureMatrix, FileProvider, HashProvider, pool_sentence, project
from .metrics import EvalFrameSet, hota, idf1, mota
from .pipeline import SessionConfig, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "EvalFrameSet",
    "FeatureMatrix",
    "FileProvider",
    "FrameContext",
    "HashProvider",
    "MemoryBank",
    "MotionDescription",
    "SessionConfig",
    "TrackRecord",
    "compose_description",
    "hota",
    "idf1",
    "mota",
    "pool_sentence",
    "project",
    "push_observation",
    "retrieve_history",
    "run_pipeline",
]
