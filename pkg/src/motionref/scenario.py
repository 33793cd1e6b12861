"""Synthetic multi-object scenarios with scripted motion.

A scenario is described by a JSON object::

    {
      "frames": 30, "width": 1242, "height": 375, "fps": 10,
      "reference": "left cars which are parking",
      "noise_px": 0.0,
      "objects": [
        {"id": 1, "motion": "parked", "x": 200, "y": 250, "w": 80, "h": 50,
         "relevant": true},
        {"id": 2, "motion": "constant_velocity", "x": 600, "y": 200, "w": 60,
         "h": 40, "vx": 2.0, "vy": 0.0},
        {"id": 3, "motion": "accelerating", "x": 900, "y": 300, "w": 50,
         "h": 40, "vx": 0.0, "vy": -1.0, "ax": 0.0, "ay": -0.5},
        {"id": 4, "motion": "turning", "x": 400, "y": 100, "w": 40, "h": 30,
         "speed": 3.0, "heading": 0.0, "turn_rate": 0.1, "scale_rate": 0.01}
      ]
    }

Per-step displacement: parked 0; constant_velocity (vx, vy); accelerating
(vx + ax*(k-1), vy + ay*(k-1)) at step k, i.e. growing linearly; turning moves
``speed`` px per step along a heading that rotates by ``turn_rate`` rad per
step. ``scale_rate`` multiplies w and h by (1 + scale_rate) each step.
Optional ``start``/``end`` bound the frames an object exists in. Frames where
the center leaves the image are dropped for that object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, List, Optional, Tuple

import numpy as np

from .core import BoundingBox
from .io import Observation, SequenceInfo, write_boxes, write_info

MOTIONS = ("parked", "constant_velocity", "accelerating", "turning")


@dataclass
class ObjectSpec:
    id: Hashable
    motion: str
    x: float
    y: float
    w: float
    h: float
    vx: float = 0.0
    vy: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    speed: float = 0.0
    heading: float = 0.0
    turn_rate: float = 0.0
    scale_rate: float = 0.0
    start: int = 0
    end: Optional[int] = None
    relevant: bool = False

    def step(self, k: int) -> Tuple[float, float]:
        """Displacement from frame k-1 to frame k (k >= 1, relative to start)."""
        if self.motion == "parked":
            return 0.0, 0.0
        if self.motion == "constant_velocity":
            return self.vx, self.vy
        if self.motion == "accelerating":
            return self.vx + self.ax * (k - 1), self.vy + self.ay * (k - 1)
        theta = self.heading + self.turn_rate * (k - 1)
        return self.speed * math.cos(theta), self.speed * math.sin(theta)


@dataclass
class Scenario:
    frames: int
    width: float
    height: float
    objects: List[ObjectSpec]
    reference: str = ""
    fps: float = 10.0
    noise_px: float = 0.0

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("a scenario needs at least one frame")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame size must be positive")
        seen = set()
        for o in self.objects:
            if o.motion not in MOTIONS:
                raise ValueError(f"object {o.id}: unknown motion {o.motion!r}")
            if o.id in seen:
                raise ValueError(f"duplicate object id {o.id}")
            seen.add(o.id)
            if o.w <= 0 or o.h <= 0:
                raise ValueError(f"object {o.id}: size must be positive")
            if not (0 <= o.x <= self.width and 0 <= o.y <= self.height):
                raise ValueError(f"object {o.id}: initial center ({o.x}, {o.y}) is outside the frame")
            if o.scale_rate <= -1:
                raise ValueError(f"object {o.id}: scale_rate must be > -1")
            if not 0 <= o.start < self.frames:
                raise ValueError(f"object {o.id}: start frame {o.start} outside [0, {self.frames})")

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        objects = [ObjectSpec(**o) for o in d.get("objects", [])]
        return cls(
            frames=int(d["frames"]),
            width=float(d["width"]),
            height=float(d["height"]),
            objects=objects,
            reference=d.get("reference", ""),
            fps=float(d.get("fps", 10.0)),
            noise_px=float(d.get("noise_px", 0.0)),
        )

    @property
    def relevant_ids(self) -> List[Hashable]:
        return [o.id for o in self.objects if o.relevant]


@dataclass
class GeneratedScenario:
    observations: List[Observation]
    ground_truth: List[Observation]
    reference: str
    info: SequenceInfo = field(repr=False, default=None)


def object_track(o: ObjectSpec, sc: Scenario, rng: np.random.Generator) -> List[Observation]:
    out = []
    x, y, w, h = o.x, o.y, o.w, o.h
    last = sc.frames - 1 if o.end is None else min(o.end, sc.frames - 1)
    for k, frame in enumerate(range(o.start, last + 1)):
        if k > 0:
            dx, dy = o.step(k)
            x, y = x + dx, y + dy
            w, h = w * (1 + o.scale_rate), h * (1 + o.scale_rate)
        bx, by = x, y
        if sc.noise_px > 0:
            bx, by = bx + rng.normal(0, sc.noise_px), by + rng.normal(0, sc.noise_px)
        if 0 <= bx <= sc.width and 0 <= by <= sc.height:
            out.append(Observation(frame, o.id, BoundingBox(bx, by, w, h)))
    return out


def generate_scenario(spec: Scenario, seed: int = 0) -> GeneratedScenario:
    rng = np.random.default_rng(seed)
    obs: List[Observation] = []
    for o in spec.objects:
        obs.extend(object_track(o, spec, rng))
    obs.sort(key=lambda ob: (ob.frame, repr(ob.id)))
    relevant = set(spec.relevant_ids)
    gt = [ob for ob in obs if ob.id in relevant]
    info = SequenceInfo(
        width=spec.width,
        height=spec.height,
        fps=spec.fps,
        reference=spec.reference,
        relevant_ids=spec.relevant_ids,
    )
    return GeneratedScenario(obs, gt, spec.reference, info)


def write_scenario(gen: GeneratedScenario, out_dir) -> dict:
    """Write trajectories.csv/.json and gt.csv/.json; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectories": out_dir / "trajectories.csv",
        "gt": out_dir / "gt.csv",
    }
    write_boxes(paths["trajectories"], gen.observations)
    write_info(paths["trajectories"].with_suffix(".json"), gen.info)
    write_boxes(paths["gt"], gen.ground_truth)
    write_info(paths["gt"].with_suffix(".json"), gen.info)
    return paths
