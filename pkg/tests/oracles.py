"""Brute-force metric references shared by the evaluation and acceptance
suites.  Everything here is written from the metric definitions, not from the
library code, so agreement is evidence rather than tautology."""

import numpy as np

from voteloc.geometry import BBox
from voteloc.metrics import EvalRecord
from voteloc.voting import Detection


def oracle_iou(a, b):
    """Interval-overlap IoU from center/size coordinates."""
    ax0, ax1 = a.cx - a.w / 2.0, a.cx + a.w / 2.0
    ay0, ay1 = a.cy - a.h / 2.0, a.cy + a.h / 2.0
    bx0, bx1 = b.cx - b.w / 2.0, b.cx + b.w / 2.0
    by0, by1 = b.cy - b.h / 2.0, b.cy + b.h / 2.0
    ix = min(ax1, bx1) - max(ax0, bx0)
    iy = min(ay1, by1) - max(ay0, by0)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


def oracle_recall(records, threshold):
    """Localization recall: one prediction per frame, hit when its best IoU
    against any ground truth reaches the threshold."""
    hits = 0
    for r in records:
        (pred,) = r.predictions
        if max(oracle_iou(pred.box, gt) for gt in r.ground_truth) >= threshold:
            hits += 1
    return hits / len(records)


def oracle_ap(records, threshold):
    """All-points interpolated AP, written from the definition."""
    pool = []
    for fi, r in enumerate(records):
        for d in r.predictions:
            pool.append((d.score, fi, d.box))
    total_gt = sum(len(r.ground_truth) for r in records)
    if total_gt == 0 or not pool:
        return 0.0
    order = sorted(range(len(pool)), key=lambda i: (-pool[i][0], i))
    taken = [set() for _ in records]
    flags = []
    for i in order:
        _, fi, box = pool[i]
        best_gi, best_v = None, -1.0
        for gi, gt in enumerate(records[fi].ground_truth):
            if gi in taken[fi]:
                continue
            v = oracle_iou(box, gt)
            if v >= threshold and v > best_v:
                best_gi, best_v = gi, v
        if best_gi is not None:
            taken[fi].add(best_gi)
            flags.append(1)
        else:
            flags.append(0)
    prec, recall = [], []
    tp = 0
    for k, f in enumerate(flags, start=1):
        tp += f
        prec.append(tp / k)
        recall.append(tp / total_gt)
    ap, prev_r = 0.0, 0.0
    for k, f in enumerate(flags):
        if f:
            ap += (recall[k] - prev_r) * max(prec[k:])
            prev_r = recall[k]
    return ap


def random_records(rng, max_frames=2):
    """Randomized evaluation cases: up to 2 frames, 0-2 ground truths and 0-3
    detections each, most detections perturbed off a ground truth so IoU
    straddles the threshold, scores occasionally rounded to force ties."""
    records = []
    for fi in range(rng.integers(1, max_frames + 1)):
        gts = [
            BBox(*rng.uniform(2, 14, 2), *rng.uniform(1, 6, 2))
            for _ in range(rng.integers(0, 3))
        ]
        preds = []
        for _ in range(rng.integers(0, 4)):
            if gts and rng.random() < 0.6:
                g = gts[rng.integers(0, len(gts))]
                box = BBox(
                    g.cx + rng.normal(0, 1.2), g.cy + rng.normal(0, 1.2),
                    max(0.3, g.w * rng.uniform(0.5, 1.5)),
                    max(0.3, g.h * rng.uniform(0.5, 1.5)),
                )
            else:
                box = BBox(*rng.uniform(2, 14, 2), *rng.uniform(1, 6, 2))
            score = float(rng.choice([rng.random(), round(rng.random(), 1)]))
            preds.append(Detection(box, score))
        records.append(EvalRecord(f"f{fi}", tuple(preds), tuple(gts)))
    return records
