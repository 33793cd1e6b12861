"""Tracking metrics over identity-labelled boxes: MOTA, IDF1 and HOTA.

Ground truth is assumed to contain only the objects the reference expression
refers to, so a prediction counts as a true positive only if it matches one of
those objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import BoundingBox
from .errors import UndefinedMetricError

IOU_THRESHOLD = 0.5
ALPHAS = np.arange(1, 20) * 0.05
_EPS = np.finfo(float).eps
_MISSING = object()

FrameBoxes = List[Tuple[Hashable, BoundingBox]]


@dataclass
class EvalFrameSet:
    gt: Dict[int, FrameBoxes] = field(default_factory=dict)
    pred: Dict[int, FrameBoxes] = field(default_factory=dict)
    iou_threshold: float = IOU_THRESHOLD

    def __post_init__(self):
        for side, frames in (("gt", self.gt), ("pred", self.pred)):
            for f, items in frames.items():
                ids = [i for i, _ in items]
                if len(set(ids)) != len(ids):
                    raise ValueError(f"duplicate {side} id in frame {f}")

    @property
    def frames(self) -> List[int]:
        return sorted(set(self.gt) | set(self.pred))

    def frame(self, f: int) -> Tuple[FrameBoxes, FrameBoxes]:
        return self.gt.get(f, []), self.pred.get(f, [])

    @property
    def num_gt(self) -> int:
        return sum(len(v) for v in self.gt.values())

    @property
    def num_pred(self) -> int:
        return sum(len(v) for v in self.pred.values())

    def _require_gt(self):
        if self.num_gt == 0:
            raise UndefinedMetricError("no ground-truth objects to evaluate against")


def iou_matrix(a: Sequence[BoundingBox], b: Sequence[BoundingBox]) -> np.ndarray:
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    ca = np.array([bx.corners() for bx in a])
    cb = np.array([bx.corners() for bx in b])
    lt = np.maximum(ca[:, None, :2], cb[None, :, :2])
    rb = np.minimum(ca[:, None, 2:], cb[None, :, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = (ca[:, 2] - ca[:, 0]) * (ca[:, 3] - ca[:, 1])
    area_b = (cb[:, 2] - cb[:, 0]) * (cb[:, 3] - cb[:, 1])
    return inter / (area_a[:, None] + area_b[None, :] - inter)


# ---------------------------------------------------------------------------
# CLEAR


@dataclass
class ClearCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    idsw: int = 0
    num_gt: int = 0

    @property
    def mota(self) -> float:
        return 1.0 - (self.fn + self.fp + self.idsw) / self.num_gt


def clear_counts(e: EvalFrameSet) -> ClearCounts:
    """Per-frame matching at the IoU threshold.

    Pairs that continue the previous frame's match take priority over any new
    pair, the rest is resolved by Hungarian assignment on IoU. An identity
    switch is counted when a ground-truth object is matched to a different
    prediction id than at its most recent match.
    """
    e._require_gt()
    out = ClearCounts(num_gt=e.num_gt)
    last_match: Dict[Hashable, Hashable] = {}
    prev_frame: Dict[Hashable, Hashable] = {}
    for f in e.frames:
        gts, preds = e.frame(f)
        cur: Dict[Hashable, Hashable] = {}
        if gts and preds:
            sim = iou_matrix([b for _, b in gts], [b for _, b in preds])
            ok = sim >= e.iou_threshold - _EPS
            score = np.where(ok, sim, 0.0)
            for i, (gid, _) in enumerate(gts):
                for j, (pid, _) in enumerate(preds):
                    if ok[i, j] and prev_frame.get(gid, _MISSING) == pid:
                        score[i, j] += 1000.0
            rows, cols = linear_sum_assignment(score, maximize=True)
            for i, j in zip(rows, cols):
                if not ok[i, j]:
                    continue
                gid, pid = gts[i][0], preds[j][0]
                if gid in last_match and last_match[gid] != pid:
                    out.idsw += 1
                last_match[gid] = pid
                cur[gid] = pid
        out.tp += len(cur)
        out.fn += len(gts) - len(cur)
        out.fp += len(preds) - len(cur)
        prev_frame = cur
    return out


def mota(e: EvalFrameSet) -> float:
    return clear_counts(e).mota


# ---------------------------------------------------------------------------
# Identity


def _index(e: EvalFrameSet):
    gt_ids = sorted({i for v in e.gt.values() for i, _ in v}, key=repr)
    pr_ids = sorted({i for v in e.pred.values() for i, _ in v}, key=repr)
    return {g: k for k, g in enumerate(gt_ids)}, {p: k for k, p in enumerate(pr_ids)}


@dataclass
class IdentityCounts:
    idtp: int
    idfp: int
    idfn: int

    @property
    def idf1(self) -> float:
        denom = 2 * self.idtp + self.idfp + self.idfn
        return 2 * self.idtp / denom if denom else 0.0


def identity_counts(e: EvalFrameSet) -> IdentityCounts:
    """Global one-to-one id assignment maximising identity true positives."""
    e._require_gt()
    gix, pix = _index(e)
    co = np.zeros((len(gix), len(pix)))
    for f in e.frames:
        gts, preds = e.frame(f)
        if not gts or not preds:
            continue
        sim = iou_matrix([b for _, b in gts], [b for _, b in preds])
        for i, j in zip(*np.nonzero(sim >= e.iou_threshold - _EPS)):
            co[gix[gts[i][0]], pix[preds[j][0]]] += 1
    idtp = 0
    if co.size:
        rows, cols = linear_sum_assignment(co, maximize=True)
        idtp = int(co[rows, cols].sum())
    return IdentityCounts(idtp, e.num_pred - idtp, e.num_gt - idtp)


def idf1(e: EvalFrameSet) -> float:
    return identity_counts(e).idf1


# ---------------------------------------------------------------------------
# HOTA


@dataclass
class HotaResult:
    hota: float
    deta: float
    assa: float
    detre: float
    detpr: float
    assre: float
    asspr: float
    per_alpha: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.hota, self.deta, self.assa, self.detre, self.detpr, self.assre, self.asspr)


def global_alignment(e: EvalFrameSet, gix, pix):
    """Soft id-pair co-occurrence score used to rank candidate matches.

    Returns (alignment [G x P], gt detections per id, pred detections per id).
    """
    pmc = np.zeros((len(gix), len(pix)))
    gt_count = np.zeros(len(gix))
    pr_count = np.zeros(len(pix))
    for f in e.frames:
        gts, preds = e.frame(f)
        gi = [gix[i] for i, _ in gts]
        pi = [pix[i] for i, _ in preds]
        gt_count[gi] += 1
        pr_count[pi] += 1
        if not gts or not preds:
            continue
        sim = iou_matrix([b for _, b in gts], [b for _, b in preds])
        denom = sim.sum(0)[None, :] + sim.sum(1)[:, None] - sim
        soft = np.divide(sim, denom, out=np.zeros_like(sim), where=denom > _EPS)
        pmc[np.ix_(gi, pi)] += soft
    align = pmc / (gt_count[:, None] + pr_count[None, :] - pmc)
    return align, gt_count, pr_count


def match_frame(sim: np.ndarray, align: np.ndarray, alpha: float) -> List[Tuple[int, int]]:
    """Pairs with IoU >= alpha: most matches first, then largest sum of align * IoU."""
    ok = sim >= alpha - _EPS
    if not ok.any():
        return []
    k = min(sim.shape)
    # secondary term summed over <= k pairs stays below 1, so cardinality dominates
    weight = np.where(ok, 1.0 + align * sim / (k + 1), 0.0)
    rows, cols = linear_sum_assignment(weight, maximize=True)
    return [(i, j) for i, j in zip(rows, cols) if ok[i, j]]


def hota(e: EvalFrameSet, alphas=ALPHAS) -> HotaResult:
    e._require_gt()
    gix, pix = _index(e)
    align, gt_count, pr_count = global_alignment(e, gix, pix)

    frames = []
    for f in e.frames:
        gts, preds = e.frame(f)
        gi = [gix[i] for i, _ in gts]
        pi = [pix[i] for i, _ in preds]
        sim = iou_matrix([b for _, b in gts], [b for _, b in preds])
        frames.append((gi, pi, sim, align[np.ix_(gi, pi)]))

    keys = ("hota", "deta", "assa", "detre", "detpr", "assre", "asspr")
    res = {k: np.zeros(len(alphas)) for k in keys}
    n_gt, n_pr = e.num_gt, e.num_pred
    for a_i, alpha in enumerate(alphas):
        mc = np.zeros_like(align)
        tp = 0
        for gi, pi, sim, al in frames:
            if not gi or not pi:
                continue
            for i, j in match_frame(sim, al, alpha):
                mc[gi[i], pi[j]] += 1
                tp += 1
        fn, fp = n_gt - tp, n_pr - tp
        ass = mc / np.maximum(1.0, gt_count[:, None] + pr_count[None, :] - mc)
        denom = max(1, tp)
        assa = float((mc * ass).sum() / denom)
        assre = float((mc * mc / np.maximum(1.0, gt_count[:, None])).sum() / denom)
        asspr = float((mc * mc / np.maximum(1.0, pr_count[None, :])).sum() / denom)
        deta = tp / max(1, tp + fn + fp)
        res["deta"][a_i] = deta
        res["assa"][a_i] = assa
        res["detre"][a_i] = tp / max(1, tp + fn)
        res["detpr"][a_i] = tp / max(1, tp + fp)
        res["assre"][a_i] = assre
        res["asspr"][a_i] = asspr
        res["hota"][a_i] = np.sqrt(deta * assa)
    means = {k: float(v.mean()) for k, v in res.items()}
    return HotaResult(**means, per_alpha=res)


def evaluate(e: EvalFrameSet) -> Dict[str, float]:
    h = hota(e)
    return {
        "HOTA": h.hota,
        "DetA": h.deta,
        "AssA": h.assa,
        "DetRe": h.detre,
        "DetPr": h.detpr,
        "AssRe": h.assre,
        "AssPr": h.asspr,
        "MOTA": mota(e),
        "IDF1": idf1(e),
    }
