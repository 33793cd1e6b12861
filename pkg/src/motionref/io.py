"""CSV / JSON file formats.

Trajectories and ground truth::

    frame,id,x_center,y_center,w,h

Predictions::

    frame,id,x_center,y_center,w,h,class_conf,ref_conf

Description log::

    frame,id,"sentence"

All box columns are center-format pixels. A header line is written and
optional on read. Every trajectory CSV has a sidecar JSON (same stem,
``.json``) with ``width``, ``height`` and ``fps``; it may also carry
``reference`` and ``relevant_ids``.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Hashable, Iterable, List, Optional, Tuple

from .core import BoundingBox
from .errors import ParseError
from .head import Prediction

TRAJ_HEADER = ["frame", "id", "x_center", "y_center", "w", "h"]
PRED_HEADER = TRAJ_HEADER + ["class_conf", "ref_conf"]
DESC_HEADER = ["frame", "id", "sentence"]


@dataclass
class Observation:
    frame: int
    id: Hashable
    box: BoundingBox


@dataclass
class SequenceInfo:
    width: float
    height: float
    fps: float = 10.0
    reference: str = ""
    relevant_ids: Optional[List[Hashable]] = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"width": self.width, "height": self.height, "fps": self.fps}
        if self.reference:
            out["reference"] = self.reference
        if self.relevant_ids is not None:
            out["relevant_ids"] = list(self.relevant_ids)
        out.update(self.extra)
        return out


def fmt(v: float) -> str:
    """Shortest round-trip text for a float."""
    return repr(float(v))


def parse_id(s: str) -> Hashable:
    s = s.strip()
    try:
        return int(s)
    except ValueError:
        return s


def _rows(path) -> Iterable[Tuple[int, List[str]]]:
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1 and row[0].strip().lower() == "frame":
                continue
            yield lineno, row


def read_boxes(path, with_scores: bool = False):
    """Parse a trajectory/GT CSV (or a prediction CSV with ``with_scores``).

    Returns a list of Observation, or (Observation, class_conf, ref_conf)
    tuples when ``with_scores`` is set.
    """
    ncols = len(PRED_HEADER) if with_scores else len(TRAJ_HEADER)
    out = []
    for lineno, row in _rows(path):
        if len(row) != ncols:
            raise ParseError(f"{path}:{lineno}: expected {ncols} columns, got {len(row)}")
        try:
            frame = int(row[0])
            vals = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        if frame < 0:
            raise ParseError(f"{path}:{lineno}: negative frame index {frame}")
        box = BoundingBox(*vals[:4])
        if not box.is_sentinel and not box.is_valid:
            raise ParseError(f"{path}:{lineno}: invalid box {vals[:4]}")
        obs = Observation(frame, parse_id(row[1]), box)
        out.append((obs, vals[4], vals[5]) if with_scores else obs)
    return out


def write_boxes(path, observations: Iterable[Observation]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJ_HEADER)
        for o in observations:
            b = o.box
            w.writerow([o.frame, o.id, fmt(b.x), fmt(b.y), fmt(b.w), fmt(b.h)])


def write_predictions(path, predictions: Iterable[Prediction]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRED_HEADER)
        for p in predictions:
            b = p.refined_box
            w.writerow([
                p.frame, p.id, fmt(b.x), fmt(b.y), fmt(b.w), fmt(b.h),
                fmt(p.class_confidence), fmt(p.referring_confidence),
            ])


def read_predictions(path) -> List[Prediction]:
    return [
        Prediction(c, r, (0.0, 0.0, 0.0, 0.0), o.box, id=o.id, frame=o.frame)
        for o, c, r in read_boxes(path, with_scores=True)
    ]


def group_by_frame(observations: Iterable[Observation]) -> Dict[int, List[Tuple[Hashable, BoundingBox]]]:
    out: Dict[int, List[Tuple[Hashable, BoundingBox]]] = defaultdict(list)
    for o in observations:
        if o.box.is_valid:
            out[o.frame].append((o.id, o.box))
    return dict(out)


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def read_info(path) -> SequenceInfo:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    missing = [k for k in ("width", "height") if k not in raw]
    if missing:
        raise ParseError(f"{path}: missing keys {missing}")
    known = {"width", "height", "fps", "reference", "relevant_ids"}
    info = SequenceInfo(
        width=float(raw["width"]),
        height=float(raw["height"]),
        fps=float(raw.get("fps", 10.0)),
        reference=raw.get("reference", ""),
        relevant_ids=raw.get("relevant_ids"),
        extra={k: v for k, v in raw.items() if k not in known},
    )
    if info.width <= 0 or info.height <= 0:
        raise ParseError(f"{path}: width and height must be positive")
    return info


def write_info(path, info: SequenceInfo) -> None:
    Path(path).write_text(json.dumps(info.to_json(), indent=2) + "\n")


def write_descriptions(path, rows: Iterable[Tuple[int, Hashable, str]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_NONNUMERIC)
        w.writerow(DESC_HEADER)
        for frame, id_, sentence in rows:
            w.writerow([frame, id_, sentence])


def read_descriptions(path) -> List[Tuple[int, Hashable, str]]:
    out = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if lineno == 1 and row and row[0] == "frame":
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            out.append((int(float(row[0])), parse_id(row[1]), row[2]))
    return out
