"""Rule-based motion descriptions from a box history.

Four descriptors are evaluated on the most recent valid boxes of a window:
position (where the box sits relative to the frame center), motion direction
(sign of the per-step displacement), distance trend (relative area change) and
speed trend (change of displacement magnitude). Every rule table is an ordered
if/else chain with strict comparisons; an input sitting exactly on a threshold
falls through to the table's "otherwise" branch.

Displacements are normalised by the frame size (pixels / W, pixels / H) so the
thresholds are independent of resolution.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from .core import BoundingBox, FrameContext
from .errors import InvalidBoxError, UndefinedDescriptorError

TAU_X = 0.005
TAU_Y = 0.001
EPSILON = 0.05
DELTA = 0.001

POSITION_PHRASES = (
    "in front",
    "ahead",
    "behind",
    "on the left",
    "on the right",
    "front-left",
    "front-right",
    "back-left",
    "back-right",
)
DIRECTION_CORE_PHRASES = (
    "moving forward",
    "moving backward",
    "moving left",
    "moving right",
    "motion unclear",
)
LATERAL_SUFFIXES = (" slightly left", " slightly right")
DIRECTION_PHRASES = DIRECTION_CORE_PHRASES + tuple(
    core + suffix
    for core in ("moving forward", "moving backward")
    for suffix in LATERAL_SUFFIXES
)
DISTANCE_PHRASES = ("approaching", "moving away", "keeping distance")
SPEED_PHRASES = ("accelerating", "decelerating", "constant speed")


@dataclass(frozen=True)
class MotionQuantities:
    """Normalised kinematics of the latest step(s) of a window.

    Fields that need more history than is available are None.
    """

    d_x: float
    d_y: float
    area: float
    delta_x: Optional[float] = None
    delta_y: Optional[float] = None
    delta_area: Optional[float] = None
    speed: Optional[float] = None
    delta_speed: Optional[float] = None


@dataclass(frozen=True)
class MotionDescription:
    position: str = ""
    direction: str = ""
    distance_trend: str = ""
    speed_trend: str = ""
    n_valid: int = 0
    sentence: str = ""


# ---------------------------------------------------------------------------
# rule tables on scalar inputs


def classify_position(d_x: float, d_y: float) -> str:
    if abs(d_x) < 0.05 and abs(d_y) < 0.05:
        return "in front"
    if d_y < -0.05 and abs(d_x) < 0.1:
        return "ahead"
    if d_y > 0.05 and abs(d_x) < 0.1:
        return "behind"
    if d_x < -0.05 and abs(d_y) < 0.1:
        return "on the left"
    if d_x > 0.05 and abs(d_y) < 0.1:
        return "on the right"
    if d_y < -0.05 and d_x < -0.05:
        return "front-left"
    if d_y < -0.05 and d_x > 0.05:
        return "front-right"
    if d_y > 0.05 and d_x < -0.05:
        return "back-left"
    if d_y > 0.05 and d_x > 0.05:
        return "back-right"
    return "in front"


def classify_direction(delta_x: float, delta_y: float, tau_x: float = TAU_X, tau_y: float = TAU_Y) -> str:
    if delta_y < -tau_y:
        md = "moving forward"
    elif delta_y > tau_y:
        md = "moving backward"
    elif abs(delta_y) <= tau_y and delta_x < -tau_x:
        md = "moving left"
    elif abs(delta_y) <= tau_y and delta_x > tau_x:
        md = "moving right"
    else:
        md = "motion unclear"

    if abs(delta_y) > tau_y and delta_x < -tau_x:
        md += " slightly left"
    elif abs(delta_y) > tau_y and delta_x > tau_x:
        md += " slightly right"
    return md


def classify_distance(prev_area: float, curr_area: float, epsilon: float = EPSILON) -> str:
    if curr_area > prev_area * (1 + epsilon):
        return "approaching"
    if curr_area < prev_area * (1 - epsilon):
        return "moving away"
    return "keeping distance"


def classify_speed(delta_speed: float, delta: float = DELTA) -> str:
    if delta_speed > delta:
        return "accelerating"
    if delta_speed < -delta:
        return "decelerating"
    return "constant speed"


# ---------------------------------------------------------------------------
# box-level quantities


def center_offsets(box: BoundingBox, ctx: FrameContext) -> Tuple[float, float]:
    """Normalised offset of the box center from the frame center.

    Computed as (x - W/2) / W rather than x/W - 0.5: the two agree in exact
    arithmetic, but the latter rounds 0.55 - 0.5 up past the 0.05 threshold.
    """
    return (box.x - ctx.width / 2.0) / ctx.width, (box.y - ctx.height / 2.0) / ctx.height


def displacement(prev: BoundingBox, curr: BoundingBox, ctx: FrameContext) -> Tuple[float, float]:
    return (curr.x - prev.x) / ctx.width, (curr.y - prev.y) / ctx.height


def _require_valid(*boxes: BoundingBox) -> None:
    for b in boxes:
        if not b.is_valid:
            raise InvalidBoxError(f"invalid box {b}")


def position_descriptor(box: BoundingBox, ctx: FrameContext) -> str:
    _require_valid(box)
    return classify_position(*center_offsets(box, ctx))


def direction_descriptor(prev: BoundingBox, curr: BoundingBox, ctx: FrameContext) -> str:
    _require_valid(prev, curr)
    return classify_direction(*displacement(prev, curr, ctx))


def distance_descriptor(prev: BoundingBox, curr: BoundingBox) -> str:
    _require_valid(prev, curr)
    return classify_distance(prev.area, curr.area)


def _speed_change(window: Sequence[BoundingBox], ctx: FrameContext) -> Tuple[float, float]:
    b0, b1, b2 = window[-3:]
    v_prev = math.hypot(*displacement(b0, b1, ctx))
    v_curr = math.hypot(*displacement(b1, b2, ctx))
    return v_curr, v_curr - v_prev


def speed_descriptor(window: Sequence[BoundingBox], ctx: FrameContext) -> str:
    """Speed trend over the last three boxes of ``window``."""
    if len(window) < 3:
        raise UndefinedDescriptorError(f"speed trend needs 3 valid boxes, got {len(window)}")
    _require_valid(*window[-3:])
    return classify_speed(_speed_change(window, ctx)[1])


def valid_boxes(history: Iterable) -> List[BoundingBox]:
    """Valid boxes of a history, accepting (frame, box) pairs or bare boxes."""
    out = []
    for item in history:
        box = item[1] if isinstance(item, tuple) else item
        if box.is_valid:
            out.append(box)
    return out


def motion_quantities(history: Iterable, ctx: FrameContext) -> MotionQuantities:
    boxes = valid_boxes(history)
    if not boxes:
        raise UndefinedDescriptorError("no valid boxes in window")
    curr = boxes[-1]
    d_x, d_y = center_offsets(curr, ctx)
    kw = {}
    if len(boxes) >= 2:
        prev = boxes[-2]
        dx, dy = displacement(prev, curr, ctx)
        kw.update(
            delta_x=dx,
            delta_y=dy,
            delta_area=(curr.area - prev.area) / (ctx.width * ctx.height),
            speed=math.hypot(dx, dy),
        )
    if len(boxes) >= 3:
        kw["delta_speed"] = _speed_change(boxes, ctx)[1]
    return MotionQuantities(d_x=d_x, d_y=d_y, area=curr.area / (ctx.width * ctx.height), **kw)


def render_sentence(position: str, direction: str = "", distance_trend: str = "", speed_trend: str = "") -> str:
    if not position:
        return ""
    if not direction:
        return f"Target is {position}"
    if not speed_trend:
        return f"Target is {position}, {direction}, {distance_trend}"
    return f"Target is {position}, {direction}, {distance_trend} and {speed_trend}"


def compose_description(history: Iterable, ctx: FrameContext) -> MotionDescription:
    """Describe a retrieved window; the phrase set grows with the valid count."""
    boxes = valid_boxes(history)
    n_valid = len(boxes)
    if n_valid == 0:
        return MotionDescription()

    pos = position_descriptor(boxes[-1], ctx)
    md = dt = st = ""
    if n_valid >= 2:
        md = direction_descriptor(boxes[-2], boxes[-1], ctx)
        dt = distance_descriptor(boxes[-2], boxes[-1])
    if n_valid >= 3:
        st = speed_descriptor(boxes, ctx)
    return MotionDescription(
        position=pos,
        direction=md,
        distance_trend=dt,
        speed_trend=st,
        n_valid=n_valid,
        sentence=render_sentence(pos, md, dt, st),
    )


_SENTENCE_RE = re.compile(
    r"^Target is (?P<pos>[a-z -]+?)"
    r"(?:, (?P<md>[a-z ]+), (?P<dt>[a-z ]+?)(?: and (?P<st>[a-z ]+))?)?$"
)


def parse_description(sentence: str) -> MotionDescription:
    """Inverse of the sentence template.

    ``n_valid`` is recovered only up to the phrase count (1, 2 or 3). Raises
    ValueError on anything outside the closed vocabulary.
    """
    if sentence == "":
        return MotionDescription()
    m = _SENTENCE_RE.match(sentence)
    if m is None:
        raise ValueError(f"not a motion description: {sentence!r}")
    pos, md, dt, st = (m.group(k) or "" for k in ("pos", "md", "dt", "st"))
    if pos not in POSITION_PHRASES:
        raise ValueError(f"unknown position phrase {pos!r}")
    if md and md not in DIRECTION_PHRASES:
        raise ValueError(f"unknown direction phrase {md!r}")
    if dt and dt not in DISTANCE_PHRASES:
        raise ValueError(f"unknown distance phrase {dt!r}")
    if st and st not in SPEED_PHRASES:
        raise ValueError(f"unknown speed phrase {st!r}")
    n = 1 + bool(md) + bool(st)
    return MotionDescription(pos, md, dt, st, n, sentence)
