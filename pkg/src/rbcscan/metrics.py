"""Detection-evaluation metrics: IoU, greedy matching, interpolated AP.

Everything here is computed from scratch on axis-aligned pixel boxes.
Average precision uses the 101-point recall sampling with a monotone
precision envelope, so results are comparable to the usual COCO-style
reports: mAP averages AP over the ten IoU thresholds 0.50 to 0.95, and
the small-object score restricts ground truth to boxes with area below
a pixel cutoff (32 px by default).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError, UsageError

ImageId = str | int

#: The ten IoU thresholds 0.50, 0.55, ..., 0.95 used for mAP.
STANDARD_IOU_THRESHOLDS: tuple[float, ...] = tuple((50 + 5 * i) / 100 for i in range(10))

#: Ground-truth boxes with area below this side length squared count as small.
SMALL_OBJECT_CUTOFF_PX = 32.0

_RECALL_SAMPLES = 101


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle in pixel coordinates, top-left origin, y down.

    Boxes follow the minimum-circumscribed-rectangle convention: (x, y) is
    the top-left corner and w, h extend right and down.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w < 0 or self.h < 0:
            raise DomainError(f"box width/height must be >= 0, got ({self.w}, {self.h})")

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    """A scored, labeled box predicted for one image."""

    image_id: ImageId
    bbox: BBox
    score: float
    class_label: str = "smartphone"

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise DomainError(f"detection score must be within [0, 1], got {self.score}")


@dataclass(frozen=True)
class GroundTruthObject:
    """An annotated, labeled box for one image."""

    image_id: ImageId
    bbox: BBox
    class_label: str = "smartphone"


@dataclass(frozen=True)
class EvalResult:
    """Per-threshold AP plus the derived mAP and small-object AP."""

    ap_per_threshold: dict[float, float]
    map_value: float
    ap_small: float

    def __post_init__(self) -> None:
        if not self.ap_per_threshold:
            raise DomainError("ap_per_threshold must be non-empty")
        for t, ap in self.ap_per_threshold.items():
            if not 0.0 <= ap <= 1.0:
                raise DomainError(f"AP at threshold {t} outside [0, 1]: {ap}")
        if not 0.0 <= self.ap_small <= 1.0:
            raise DomainError(f"ap_small outside [0, 1]: {self.ap_small}")
        mean = sum(self.ap_per_threshold.values()) / len(self.ap_per_threshold)
        if abs(self.map_value - mean) > 1e-12:
            raise DomainError(
                f"map_value {self.map_value} is not the mean of ap_per_threshold ({mean})"
            )


@dataclass(frozen=True)
class MatchResult:
    """Outcome of greedy matching on a single image and class.

    ``matched_gt_index[i]`` is the index (into the ground-truth list) the
    i-th detection matched, or None for a false positive; order follows
    the detection input order.
    """

    matched_gt_index: tuple[int | None, ...]
    gt_matched: tuple[bool, ...]

    @property
    def tp_flags(self) -> tuple[bool, ...]:
        return tuple(m is not None for m in self.matched_gt_index)


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0 when the union is empty.

    Areas are taken from the same rounded corner coordinates as the
    intersection, so identical boxes score exactly 1.0 even for
    non-representable float extents.
    """
    ax2, ay2 = a.x + a.w, a.y + a.h
    bx2, by2 = b.x + b.w, b.y + b.h
    iw = min(ax2, bx2) - max(a.x, b.x)
    ih = min(ay2, by2) - max(a.y, b.y)
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    union = (ax2 - a.x) * (ay2 - a.y) + (bx2 - b.x) * (by2 - b.y) - inter
    if union <= 0:
        return 0.0
    return inter / union


def match_detections(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthObject],
    iou_threshold: float,
) -> MatchResult:
    """Greedily match detections to ground truth on one image and class.

    Detections are considered in descending score order (ties keep input
    order); each takes the still-unmatched ground-truth box of highest IoU
    provided that IoU reaches the threshold, otherwise it is a false
    positive. Each ground-truth box matches at most once.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise UsageError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    ids = {d.image_id for d in dets} | {g.image_id for g in gts}
    if len(ids) > 1:
        raise UsageError(f"match_detections expects a single image_id, got {sorted(map(str, ids))}")
    labels = {d.class_label for d in dets} | {g.class_label for g in gts}
    if len(labels) > 1:
        raise UsageError(f"match_detections expects a single class_label, got {sorted(labels)}")

    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    matched_gt: list[int | None] = [None] * len(dets)
    gt_taken = [False] * len(gts)
    for i in order:
        best_j = None
        best_iou = 0.0
        for j, gt in enumerate(gts):
            if gt_taken[j]:
                continue
            v = iou(dets[i].bbox, gt.bbox)
            if v > best_iou:
                best_iou = v
                best_j = j
        if best_j is not None and best_iou >= iou_threshold:
            matched_gt[i] = best_j
            gt_taken[best_j] = True
    return MatchResult(tuple(matched_gt), tuple(gt_taken))


def average_precision(tp_flags: Sequence[bool], total_gt: int) -> float:
    """101-point interpolated AP from TP/FP flags in descending-score order.

    The precision-recall sequence is built cumulatively, precision is made
    monotone non-increasing in recall, and the envelope is sampled at the
    101 recall points 0.00, 0.01, ..., 1.00. When there is no ground truth
    the score is 1.0 for an empty detection list and 0.0 otherwise.
    """
    if total_gt < 0:
        raise DomainError(f"total_gt must be >= 0, got {total_gt}")
    if total_gt == 0:
        return 1.0 if not tp_flags else 0.0

    precisions: list[float] = []
    recalls: list[float] = []
    tp = 0
    for i, flag in enumerate(tp_flags):
        if flag:
            tp += 1
        precisions.append(tp / (i + 1))
        recalls.append(tp / total_gt)

    # Monotone envelope: precision at recall r becomes max precision at any
    # recall >= r.
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])

    total = 0.0
    idx = 0
    for k in range(_RECALL_SAMPLES):
        r = k / (_RECALL_SAMPLES - 1)
        while idx < len(recalls) and recalls[idx] < r:
            idx += 1
        if idx < len(precisions):
            total += precisions[idx]
    return total / _RECALL_SAMPLES


def _pooled_flags(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthObject],
    class_label: str,
    iou_threshold: float,
) -> tuple[list[bool], int]:
    """Match per image, then pool flags globally by descending score.

    Score ties across the pool are broken by position in the original
    detection list, which keeps results independent of how images are
    partitioned across workers.
    """
    det_groups: dict[ImageId, list[tuple[int, Detection]]] = {}
    for idx, d in enumerate(dets):
        if d.class_label == class_label:
            det_groups.setdefault(d.image_id, []).append((idx, d))
    gt_groups: dict[ImageId, list[GroundTruthObject]] = {}
    for g in gts:
        if g.class_label == class_label:
            gt_groups.setdefault(g.image_id, []).append(g)

    scored: list[tuple[float, int, bool]] = []
    for image_id, pairs in det_groups.items():
        image_dets = [d for _, d in pairs]
        result = match_detections(image_dets, gt_groups.get(image_id, []), iou_threshold)
        for (orig_idx, d), flag in zip(pairs, result.tp_flags):
            scored.append((d.score, orig_idx, flag))
    scored.sort(key=lambda t: (-t[0], t[1]))
    total_gt = sum(len(v) for v in gt_groups.values())
    return [flag for _, _, flag in scored], total_gt


def _small_object_flags(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthObject],
    class_label: str,
    small_cutoff_px: float,
) -> tuple[list[bool], int]:
    """Flags restricted to small ground truth at IoU 0.50.

    Matching runs against all ground truth first; detections matched to a
    large (excluded) box are then dropped entirely, so they count neither
    as hits nor as false positives for the small-object score.
    """
    max_area = small_cutoff_px * small_cutoff_px
    det_groups: dict[ImageId, list[tuple[int, Detection]]] = {}
    for idx, d in enumerate(dets):
        if d.class_label == class_label:
            det_groups.setdefault(d.image_id, []).append((idx, d))
    gt_groups: dict[ImageId, list[GroundTruthObject]] = {}
    for g in gts:
        if g.class_label == class_label:
            gt_groups.setdefault(g.image_id, []).append(g)

    scored: list[tuple[float, int, bool]] = []
    total_small = sum(
        1 for image_gts in gt_groups.values() for g in image_gts if g.bbox.area < max_area
    )
    for image_id, pairs in det_groups.items():
        image_dets = [d for _, d in pairs]
        image_gts = gt_groups.get(image_id, [])
        result = match_detections(image_dets, image_gts, 0.5)
        for (orig_idx, d), gt_idx in zip(pairs, result.matched_gt_index):
            if gt_idx is None:
                scored.append((d.score, orig_idx, False))
            elif image_gts[gt_idx].bbox.area < max_area:
                scored.append((d.score, orig_idx, True))
            # matched to an excluded (large) box: ignored
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [flag for _, _, flag in scored], total_small


def evaluate(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthObject],
    thresholds: Sequence[float] = STANDARD_IOU_THRESHOLDS,
    small_cutoff_px: float = SMALL_OBJECT_CUTOFF_PX,
) -> EvalResult:
    """Full evaluation: AP per IoU threshold, their mean, and small-object AP.

    AP at each threshold is computed per class (classes taken from the
    union of detections and ground truth) and averaged; with a single
    class this is plain AP. ``ap_small`` is always computed at IoU 0.50.
    """
    if not thresholds:
        raise UsageError("thresholds must be non-empty")
    for t in thresholds:
        if not 0.0 < t <= 1.0:
            raise UsageError(f"thresholds must be in (0, 1], got {t}")

    classes = sorted({d.class_label for d in dets} | {g.class_label for g in gts})
    ap_per_threshold: dict[float, float] = {}
    for t in thresholds:
        if classes:
            aps = []
            for cls in classes:
                flags, total_gt = _pooled_flags(dets, gts, cls, t)
                aps.append(average_precision(flags, total_gt))
            ap_per_threshold[t] = sum(aps) / len(aps)
        else:
            ap_per_threshold[t] = 1.0  # nothing to detect, nothing detected

    if classes:
        small_aps = []
        for cls in classes:
            flags, total_small = _small_object_flags(dets, gts, cls, small_cutoff_px)
            small_aps.append(average_precision(flags, total_small))
        ap_small = sum(small_aps) / len(small_aps)
    else:
        ap_small = 1.0

    map_value = sum(ap_per_threshold.values()) / len(ap_per_threshold)
    return EvalResult(ap_per_threshold=ap_per_threshold, map_value=map_value, ap_small=ap_small)


def flip_augment(gt: GroundTruthObject, image_width: int) -> GroundTruthObject:
    """Mirror an annotation across the vertical image axis.

    The flip maps x to image_width - x - w and leaves y, w, h and the
    class label unchanged; applying it twice restores the original box.
    """
    b = gt.bbox
    if b.x < 0 or b.x + b.w > image_width:
        raise DomainError(
            f"box spans [{b.x}, {b.x + b.w}], outside image width {image_width}"
        )
    flipped = BBox(image_width - b.x - b.w, b.y, b.w, b.h)
    return GroundTruthObject(image_id=gt.image_id, bbox=flipped, class_label=gt.class_label)
