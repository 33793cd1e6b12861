"""Boxes, frame context and the bounded per-object memory bank."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Hashable, Iterator, List, Tuple

from .errors import InvalidBoxError, OutOfOrderError

TRACK = "track"
DETECTION = "detection"


@dataclass(frozen=True)
class BoundingBox:
    """Center-format box in pixels.

    The all-zero box is a sentinel for a missing observation; it can be stored
    in a history but never counts as a valid frame.
    """

    x: float
    y: float
    w: float
    h: float

    @classmethod
    def sentinel(cls) -> "BoundingBox":
        return cls(0.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "BoundingBox":
        return cls((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)

    @property
    def is_sentinel(self) -> bool:
        return self.x == 0 and self.y == 0 and self.w == 0 and self.h == 0

    @property
    def is_valid(self) -> bool:
        return (
            self.w > 0
            and self.h > 0
            and all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h))
        )

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> Tuple[float, float, float, float]:
        hw, hh = self.w / 2.0, self.h / 2.0
        return self.x - hw, self.y - hh, self.x + hw, self.y + hh

    def check(self) -> "BoundingBox":
        """Return self, raising InvalidBoxError unless the box is valid."""
        if not self.is_valid:
            raise InvalidBoxError(f"invalid box {self}")
        return self


@dataclass(frozen=True)
class FrameContext:
    frame_index: int
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"frame size must be positive, got {self.width}x{self.height}")
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")


@dataclass
class TrackRecord:
    id: Hashable
    capacity: int
    role: str = TRACK
    history: Deque[Tuple[int, BoundingBox]] = field(default_factory=deque)

    def __post_init__(self):
        self.history = deque(self.history, maxlen=self.capacity)

    @property
    def last_frame(self) -> int | None:
        return self.history[-1][0] if self.history else None


class MemoryBank:
    """Rolling store of the last ``capacity`` boxes per object.

    Single writer per session; readers may run concurrently with no writer.
    """

    def __init__(self, capacity: int = 4):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.records: Dict[Hashable, TrackRecord] = {}

    def __contains__(self, id) -> bool:
        return id in self.records

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self.records)

    def push(self, id, frame_index: int, box: BoundingBox, role: str | None = None) -> "MemoryBank":
        if not box.is_sentinel:
            box.check()
        rec = self.records.get(id)
        if rec is None:
            rec = TrackRecord(id=id, capacity=self.capacity, role=role or DETECTION)
            self.records[id] = rec
        else:
            last = rec.last_frame
            if last is not None and frame_index <= last:
                raise OutOfOrderError(
                    f"id {id!r}: frame {frame_index} is not after last stored frame {last}"
                )
            if role is not None:
                rec.role = role
        rec.history.append((frame_index, box))
        return self

    def history(self, id) -> List[Tuple[int, BoundingBox]]:
        rec = self.records.get(id)
        return list(rec.history) if rec is not None else []

    def role(self, id) -> str | None:
        rec = self.records.get(id)
        return rec.role if rec is not None else None


def push_observation(bank: MemoryBank, id, frame_index: int, box: BoundingBox) -> MemoryBank:
    return bank.push(id, frame_index, box)


def retrieve_history(bank: MemoryBank, id) -> List[Tuple[int, BoundingBox]]:
    """Stored window for ``id``, oldest first; empty for an unknown id."""
    return bank.history(id)
