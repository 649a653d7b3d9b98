"""Evaluation metrics: IoU, localization recall, and detection AP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingPrediction
from .geometry import BBox
from .voting import Detection


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated frame: its predictions and its ground-truth boxes."""

    frame_id: str
    predictions: tuple[Detection, ...]
    ground_truth: tuple[BBox, ...]


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def recall_at(records, threshold: float) -> float:
    """Fraction of frames whose single prediction reaches the IoU threshold
    against the best-matching ground truth (localization mode)."""
    records = list(records)
    if not records:
        raise ValueError("no records to evaluate")
    hits = 0
    for rec in records:
        if len(rec.predictions) == 0:
            raise MissingPrediction(f"frame {rec.frame_id!r} has no prediction")
        if len(rec.predictions) > 1:
            raise ValueError(
                f"frame {rec.frame_id!r} has {len(rec.predictions)} predictions; "
                "localization mode expects exactly one"
            )
        if not rec.ground_truth:
            raise ValueError(f"frame {rec.frame_id!r} has no ground truth")
        box = rec.predictions[0].box
        if max(iou(box, gt) for gt in rec.ground_truth) >= threshold:
            hits += 1
    return hits / len(records)


def mean_recall(groups, threshold: float) -> float:
    """Unweighted mean of per-object recalls: ``groups`` maps an object name
    to its records."""
    if not groups:
        raise ValueError("no object groups to evaluate")
    return float(
        np.mean([recall_at(records, threshold) for records in groups.values()])
    )


def average_precision(records, threshold: float) -> float:
    """Detection AP at one IoU threshold, all-points interpolation.

    Detections are pooled across frames and walked in descending score; each
    is greedily matched to the highest-IoU unmatched ground truth of its own
    frame (IoU >= threshold), else counted as a false positive.
    """
    records = list(records)
    total_gt = sum(len(r.ground_truth) for r in records)
    if total_gt == 0:
        return 0.0
    scores = []
    owner = []
    dets = []
    for fi, rec in enumerate(records):
        for det in rec.predictions:
            scores.append(det.score)
            owner.append(fi)
            dets.append(det)
    if not dets:
        return 0.0
    order = np.argsort(-np.asarray(scores), kind="stable")
    matched = [np.zeros(len(r.ground_truth), dtype=bool) for r in records]
    tp = np.zeros(len(dets))
    for rank, di in enumerate(order):
        rec = records[owner[di]]
        used = matched[owner[di]]
        best, best_iou = -1, -1.0
        for gi, gt in enumerate(rec.ground_truth):
            if used[gi]:
                continue
            v = iou(dets[di].box, gt)
            if v >= threshold and v > best_iou:
                best, best_iou = gi, v
        if best >= 0:
            used[best] = True
            tp[rank] = 1.0
    cum_tp = np.cumsum(tp)
    rec_curve = cum_tp / total_gt
    prec_curve = cum_tp / np.arange(1, len(dets) + 1)
    mrec = np.concatenate(([0.0], rec_curve, [1.0]))
    mpre = np.concatenate(([0.0], prec_curve, [0.0]))
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))
