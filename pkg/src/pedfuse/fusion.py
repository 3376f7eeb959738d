"""Part-detection fusion pipeline.

Body-part detections (heads, legs) are restored to whole-body candidate
boxes using fixed body-proportion rules, then head-derived and leg-derived
candidates are fused: pairs agreeing above an IoU threshold collapse to the
more confident member, while unmatched candidates — typically occluded
pedestrians visible through one part only — are kept.

Restoration rules, in center/size form with y growing downward:

    head: cy' = cy + 2*h,   w' = 2*w,    h' = 5*h
    leg:  cy' = cy - h/2,   w' = 4/3*w,  h' = 2*h

The full pipeline is nms -> classify -> restore -> fuse and is a pure,
deterministic transformation of its input.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .geometry import BBox, iou

WHOLE_BODY_CLASS = "person"

HEAD_CLASS = "head"
LEG_CLASS = "leg"

TIE_BREAKS = ("prefer-head", "prefer-leg", "prefer-higher-conf")


class UnknownClassError(ValueError):
    """Raised in strict mode when a detection's class has no restore rule."""


class RuleMismatchError(ValueError):
    """Raised when a restore rule is applied to a detection of another class."""


@dataclass(frozen=True)
class Detection:
    """A scored box attached to an image and a class label.

    `extras` carries unrecognized record fields through I/O untouched.
    """

    image_id: str
    class_name: str
    box: BBox
    conf: float
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.conf <= 1.0:
            raise ValueError(f"conf must be in (0, 1], got {self.conf}")

    def sort_key(self) -> tuple:
        # Descending confidence; box coordinates as final tie-break.
        return (-self.conf, self.image_id, self.class_name, self.box.sort_key())


@dataclass(frozen=True)
class RestoreRule:
    """Maps a part box to a whole-body candidate.

    cy' = cy + dy_factor*h, cx' = cx + dx_factor*w, w' = w_factor*w,
    h' = h_factor*h.
    """

    part_class: str
    dy_factor: float
    dx_factor: float = 0.0
    w_factor: float = 1.0
    h_factor: float = 1.0

    def __post_init__(self) -> None:
        if self.w_factor <= 0 or self.h_factor <= 0:
            raise ValueError("w_factor and h_factor must be positive")


HEAD_RULE = RestoreRule(HEAD_CLASS, dy_factor=2.0, w_factor=2.0, h_factor=5.0)
LEG_RULE = RestoreRule(LEG_CLASS, dy_factor=-0.5, w_factor=4.0 / 3.0, h_factor=2.0)
DEFAULT_RULES = (HEAD_RULE, LEG_RULE)


@dataclass(frozen=True)
class FusionConfig:
    iou_threshold: float = 0.5
    tie_break: str = "prefer-head"
    strict_classes: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold must be in (0, 1], got {self.iou_threshold}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}, got {self.tie_break!r}")


@dataclass(frozen=True)
class NmsConfig:
    conf_thr: float = 0.25
    iou_thr: float = 0.45

    def __post_init__(self) -> None:
        if not 0.0 <= self.conf_thr <= 1.0:
            raise ValueError(f"conf_thr must be in [0, 1], got {self.conf_thr}")
        if not 0.0 < self.iou_thr <= 1.0:
            raise ValueError(f"iou_thr must be in (0, 1], got {self.iou_thr}")


@dataclass(frozen=True)
class ClassifiedDetections:
    by_class: dict[str, list[Detection]]
    passthrough: list[Detection]


def classify(dets: list[Detection], rules: tuple[RestoreRule, ...],
             strict: bool = True) -> ClassifiedDetections:
    """Group detections by part class, preserving input order within groups.

    Unknown classes raise UnknownClassError in strict mode and land in
    `passthrough` otherwise.
    """
    seen = [r.part_class for r in rules]
    if len(set(seen)) != len(seen):
        raise ValueError(f"restore rules have duplicate part classes: {seen}")
    by_class: dict[str, list[Detection]] = {r.part_class: [] for r in rules}
    passthrough: list[Detection] = []
    for det in dets:
        if det.class_name in by_class:
            by_class[det.class_name].append(det)
        elif strict:
            raise UnknownClassError(
                f"no restore rule for class {det.class_name!r} (strict mode)"
            )
        else:
            passthrough.append(det)
    return ClassifiedDetections(by_class, passthrough)


def restore(det: Detection, rule: RestoreRule) -> Detection:
    """Restore a part detection to a whole-body candidate.

    Confidence is copied unchanged; the result is labeled as a whole body.
    """
    if det.class_name != rule.part_class:
        raise RuleMismatchError(
            f"rule for {rule.part_class!r} applied to detection of class "
            f"{det.class_name!r}"
        )
    b = det.box
    restored = BBox(
        b.cx + rule.dx_factor * b.w,
        b.cy + rule.dy_factor * b.h,
        rule.w_factor * b.w,
        rule.h_factor * b.h,
    )
    return replace(det, class_name=WHOLE_BODY_CLASS, box=restored)


def _pair_winner(head: Detection, leg: Detection, tie_break: str) -> Detection:
    if head.conf > leg.conf:
        return head
    if leg.conf > head.conf:
        return leg
    if tie_break == "prefer-head":
        return head
    if tie_break == "prefer-leg":
        return leg
    # prefer-higher-conf with equal confidence: fall back to coordinate order.
    return min(head, leg, key=lambda d: d.box.sort_key())


def fuse(head_candidates: list[Detection], leg_candidates: list[Detection],
         cfg: FusionConfig = FusionConfig()) -> list[Detection]:
    """Fuse whole-body candidates restored from heads and from legs.

    Cross-set pairs with IoU >= cfg.iou_threshold are matched one-to-one,
    greedily by descending IoU; within each matched pair only the more
    confident member survives. Unmatched candidates are kept. The result
    is sorted by descending confidence and always satisfies

        len(result) == len(heads) + len(legs) - (matched pairs)
    """
    pairs = []
    for i, hd in enumerate(head_candidates):
        for j, lg in enumerate(leg_candidates):
            v = iou(hd.box, lg.box)
            if v >= cfg.iou_threshold:
                pairs.append((v, i, j))
    # Greedy one-to-one matching; box coordinates break IoU ties.
    pairs.sort(key=lambda p: (
        -p[0],
        head_candidates[p[1]].box.sort_key(),
        leg_candidates[p[2]].box.sort_key(),
    ))
    head_taken = [False] * len(head_candidates)
    leg_taken = [False] * len(leg_candidates)
    out: list[Detection] = []
    for _, i, j in pairs:
        if head_taken[i] or leg_taken[j]:
            continue
        head_taken[i] = True
        leg_taken[j] = True
        out.append(_pair_winner(head_candidates[i], leg_candidates[j], cfg.tie_break))
    out.extend(d for i, d in enumerate(head_candidates) if not head_taken[i])
    out.extend(d for j, d in enumerate(leg_candidates) if not leg_taken[j])
    out.sort(key=Detection.sort_key)
    return out


def nms(dets: list[Detection], cfg: NmsConfig = NmsConfig()) -> list[Detection]:
    """Greedy non-maximum suppression, independently per image and class.

    Detections below cfg.conf_thr are dropped; survivors suppress same-class
    boxes overlapping them at IoU >= cfg.iou_thr. Output is sorted by
    descending confidence (box coordinates as tie-break).
    """
    kept: list[Detection] = []
    groups: dict[tuple[str, str], list[Detection]] = {}
    for det in dets:
        if det.conf < cfg.conf_thr:
            continue
        groups.setdefault((det.image_id, det.class_name), []).append(det)
    for key in sorted(groups):
        pool = sorted(groups[key], key=Detection.sort_key)
        while pool:
            best = pool.pop(0)
            kept.append(best)
            pool = [d for d in pool if iou(best.box, d.box) < cfg.iou_thr]
    kept.sort(key=Detection.sort_key)
    return kept


def run_pipeline(dets: list[Detection],
                 rules: tuple[RestoreRule, ...] = DEFAULT_RULES,
                 cfg: FusionConfig = FusionConfig(),
                 nms_cfg: NmsConfig = NmsConfig()) -> list[Detection]:
    """Full pipeline: nms -> classify -> restore -> fuse, per image.

    Exactly two restore rules are supported; the first names the class whose
    candidates win `prefer-head` ties, the second `prefer-leg`. In lenient
    mode, detections of unknown classes pass through NMS and are returned
    alongside the fused bodies. Output is sorted by image_id, then by
    descending confidence.
    """
    if len(rules) != 2:
        raise ValueError(f"exactly two restore rules are supported, got {len(rules)}")
    survivors = nms(dets, nms_cfg)
    grouped = classify(survivors, rules, strict=cfg.strict_classes)
    out: list[Detection] = list(grouped.passthrough)
    by_image: dict[str, tuple[list[Detection], list[Detection]]] = {}
    for rule_idx, rule in enumerate(rules):
        for det in grouped.by_class[rule.part_class]:
            slot = by_image.setdefault(det.image_id, ([], []))
            slot[rule_idx].append(restore(det, rule))
    for image_id in sorted(by_image):
        heads, legs = by_image[image_id]
        out.extend(fuse(heads, legs, cfg))
    out.sort(key=lambda d: (d.image_id, d.sort_key()))
    return out
