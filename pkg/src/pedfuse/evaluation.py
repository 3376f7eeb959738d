"""Detection evaluation: greedy matching and average precision.

Matching runs independently per (image, class): detections in descending
confidence order each claim the unmatched ground truth with the highest
IoU, provided it reaches the threshold (inclusive). Ground truths flagged
`ignore` absorb detections that land on them without producing either a
true or a false positive, and unmatched ignored boxes are not counted as
misses or included in the GT denominator.

AP is the all-point interpolated area under the precision envelope. The
legacy 11-point average is available behind `ap_mode="11point"`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .fusion import Detection
from .geometry import BBox, iou

AP_MODES = ("all_point", "11point")


class UndefinedMetricError(ValueError):
    """Raised when AP is requested for a class with no ground truth."""


@dataclass(frozen=True)
class GroundTruth:
    image_id: str
    class_name: str
    box: BBox
    ignore: bool = False


@dataclass(frozen=True)
class MatchedDetection:
    det: Detection
    kind: str  # "tp" | "fp" | "ignored"


def match_detections(dets: list[Detection], gts: list[GroundTruth],
                     iou_thr: float = 0.5) -> list[MatchedDetection]:
    """Label every detection tp/fp/ignored against the ground truth.

    Detections are processed in descending confidence (stable, so equal
    confidences keep their input order); each claims the still-unmatched
    ground truth with the highest IoU at or above the threshold, with GT
    input order breaking exact IoU ties. A claim on an ignore-flagged GT
    labels the detection "ignored". Output follows the processing order,
    which is the order AP consumes.
    """
    if not 0.0 < iou_thr <= 1.0:
        raise ValueError(f"iou_thr must be in (0, 1], got {iou_thr}")
    gt_groups: dict[tuple[str, str], list[GroundTruth]] = {}
    for gt in gts:
        gt_groups.setdefault((gt.image_id, gt.class_name), []).append(gt)
    taken: dict[tuple[str, str], list[bool]] = {
        key: [False] * len(v) for key, v in gt_groups.items()
    }
    out: list[MatchedDetection] = []
    ordered = sorted(dets, key=lambda d: -d.conf)
    for det in ordered:
        key = (det.image_id, det.class_name)
        candidates = gt_groups.get(key, [])
        flags = taken.get(key, [])
        best_idx, best_iou = -1, 0.0
        for idx, gt in enumerate(candidates):
            if flags[idx]:
                continue
            v = iou(det.box, gt.box)
            if v >= iou_thr and v > best_iou:
                best_idx, best_iou = idx, v
        if best_idx >= 0:
            flags[best_idx] = True
            kind = "ignored" if candidates[best_idx].ignore else "tp"
            out.append(MatchedDetection(det, kind))
        else:
            out.append(MatchedDetection(det, "fp"))
    return out


def average_precision(matches: list[MatchedDetection], n_gt: int,
                      ap_mode: str = "all_point") -> float:
    """AP from confidence-ordered matches and the non-ignored GT count.

    All-point mode integrates the precision envelope exactly: every true
    positive contributes the maximum precision attained at or beyond its
    recall level, divided by n_gt once at the end.
    """
    if ap_mode not in AP_MODES:
        raise ValueError(f"ap_mode must be one of {AP_MODES}, got {ap_mode!r}")
    if n_gt < 1:
        raise UndefinedMetricError("AP undefined with no ground-truth boxes")
    tp, fp = 0, 0
    precisions: list[float] = []  # precision after each counted detection
    tp_mask: list[bool] = []
    for m in matches:
        if m.kind == "ignored":
            continue
        if m.kind == "tp":
            tp += 1
        else:
            fp += 1
        precisions.append(tp / (tp + fp))
        tp_mask.append(m.kind == "tp")
    if tp == 0:
        return 0.0
    # Envelope: max precision from each position onward.
    envelope = list(precisions)
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    if ap_mode == "all_point":
        total = 0.0
        for i, is_tp in enumerate(tp_mask):
            if is_tp:
                total += envelope[i]
        return total / n_gt
    # 11-point legacy mode: mean of max precision at recall >= r.
    recalls = []
    running = 0
    for is_tp in tp_mask:
        if is_tp:
            running += 1
        recalls.append(running / n_gt)
    total = 0.0
    for r10 in range(11):
        r = r10 / 10
        best = 0.0
        for i in range(len(recalls)):
            if recalls[i] >= r:
                best = envelope[i]
                break
        total += best
    return total / 11


@dataclass(frozen=True)
class ClassResult:
    ap: float
    n_gt: int
    n_det: int
    tp: int
    fp: int


@dataclass(frozen=True)
class EvalReport:
    iou_thr: float
    ap_mode: str
    per_class: dict[str, ClassResult]
    mean_ap: float
    per_group: dict[str, dict[str, float]] = field(default_factory=dict)
    group_mean_ap: dict[str, float] = field(default_factory=dict)


def _group_of(image_id: str) -> str:
    return image_id.split("/", 1)[0] if "/" in image_id else ""


def _eval_classes(dets: list[Detection], gts: list[GroundTruth],
                  iou_thr: float, ap_mode: str) -> dict[str, ClassResult]:
    classes = sorted({g.class_name for g in gts})
    results: dict[str, ClassResult] = {}
    for cls in classes:
        cls_gts = [g for g in gts if g.class_name == cls]
        n_gt = sum(1 for g in cls_gts if not g.ignore)
        cls_dets = [d for d in dets if d.class_name == cls]
        matches = match_detections(cls_dets, cls_gts, iou_thr)
        ap = average_precision(matches, n_gt, ap_mode) if n_gt > 0 else 0.0
        results[cls] = ClassResult(
            ap=ap,
            n_gt=n_gt,
            n_det=len(cls_dets),
            tp=sum(1 for m in matches if m.kind == "tp"),
            fp=sum(1 for m in matches if m.kind == "fp"),
        )
    return results


def evaluate_run(dets: list[Detection], gts: list[GroundTruth],
                 iou_thr: float = 0.5, ap_mode: str = "all_point") -> EvalReport:
    """Per-class AP plus mean AP, with per-group breakdowns when image ids
    carry a "group/" prefix (e.g. "seq3/000017")."""
    if not gts:
        raise UndefinedMetricError("evaluation requires ground-truth boxes")
    per_class = _eval_classes(dets, gts, iou_thr, ap_mode)
    scored = [c for c in per_class.values() if c.n_gt > 0]
    mean_ap = sum(c.ap for c in scored) / len(scored) if scored else 0.0

    per_group: dict[str, dict[str, float]] = {}
    group_mean: dict[str, float] = {}
    groups = sorted({_group_of(g.image_id) for g in gts})
    if groups != [""]:
        for grp in groups:
            g_gts = [g for g in gts if _group_of(g.image_id) == grp]
            g_dets = [d for d in dets if _group_of(d.image_id) == grp]
            g_res = _eval_classes(g_dets, g_gts, iou_thr, ap_mode)
            per_group[grp] = {cls: r.ap for cls, r in g_res.items()}
            g_scored = [r for r in g_res.values() if r.n_gt > 0]
            group_mean[grp] = (
                sum(r.ap for r in g_scored) / len(g_scored) if g_scored else 0.0
            )
    return EvalReport(iou_thr=iou_thr, ap_mode=ap_mode, per_class=per_class,
                      mean_ap=mean_ap, per_group=per_group, group_mean_ap=group_mean)
