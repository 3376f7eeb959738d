"""Box regression losses.

`wiou_loss` multiplies the plain IoU loss by a distance penalty
R = exp(d2 / D) where d2 is the squared center distance and D is the
squared diagonal (Wg^2 + Hg^2) of the smallest box enclosing both inputs.
D is treated as a constant when differentiating, so the penalty cannot
shrink the loss by inflating the enclosing box.
"""
from __future__ import annotations

import math

from .geometry import BBox, enclosing_box, iou


class BoundaryError(ValueError):
    """Raised when a gradient is requested at a non-differentiable configuration."""


def iou_loss(pred: BBox, gt: BBox) -> float:
    """1 - IoU(pred, gt), in [0, 1]."""
    return 1.0 - iou(pred, gt)


def distance_penalty(pred: BBox, gt: BBox) -> float:
    """R = exp(((cxp-cxg)^2 + (cyp-cyg)^2) / D), D from the enclosing box."""
    enc = enclosing_box(pred, gt)
    d2 = (pred.cx - gt.cx) ** 2 + (pred.cy - gt.cy) ** 2
    return math.exp(d2 / (enc.w**2 + enc.h**2))


def wiou_loss(pred: BBox, gt: BBox) -> float:
    """Distance-weighted IoU loss: R * (1 - IoU).

    Equals iou_loss when the centers coincide (R = 1) and exceeds it
    strictly otherwise.
    """
    return distance_penalty(pred, gt) * iou_loss(pred, gt)


def _edge_weight(pred_edge: float, gt_edge: float, pred_is_max: bool) -> float:
    # 1.0 when the pred box supplies this intersection edge, 0.0 when the gt
    # box does; exact ties take the symmetric subgradient 0.5.
    if pred_edge == gt_edge:
        return 0.5
    if pred_is_max:
        return 1.0 if pred_edge > gt_edge else 0.0
    return 1.0 if pred_edge < gt_edge else 0.0


def loss_gradient(pred: BBox, gt: BBox) -> tuple[float, float, float, float]:
    """Analytical gradient of wiou_loss w.r.t. (cx, cy, w, h) of pred.

    D (enclosing-box diagonal) is held constant. The boxes must overlap
    with non-degenerate intersection; otherwise BoundaryError is raised.
    """
    iw = min(pred.x2, gt.x2) - max(pred.x1, gt.x1)
    ih = min(pred.y2, gt.y2) - max(pred.y1, gt.y1)
    if iw <= 0 or ih <= 0:
        raise BoundaryError(
            "gradient undefined: boxes do not overlap with positive area"
        )

    a_l = _edge_weight(pred.x1, gt.x1, pred_is_max=True)   # pred supplies left edge
    a_r = _edge_weight(pred.x2, gt.x2, pred_is_max=False)  # pred supplies right edge
    b_t = _edge_weight(pred.y1, gt.y1, pred_is_max=True)
    b_b = _edge_weight(pred.y2, gt.y2, pred_is_max=False)

    diw = {"cx": a_r - a_l, "w": (a_r + a_l) / 2, "cy": 0.0, "h": 0.0}
    dih = {"cy": b_b - b_t, "h": (b_b + b_t) / 2, "cx": 0.0, "w": 0.0}
    dap = {"cx": 0.0, "cy": 0.0, "w": pred.h, "h": pred.w}

    inter = iw * ih
    union = pred.area + gt.area - inter
    iou_val = inter / union

    enc = enclosing_box(pred, gt)
    d_const = enc.w**2 + enc.h**2
    r_val = math.exp(((pred.cx - gt.cx) ** 2 + (pred.cy - gt.cy) ** 2) / d_const)
    dr = {
        "cx": r_val * 2 * (pred.cx - gt.cx) / d_const,
        "cy": r_val * 2 * (pred.cy - gt.cy) / d_const,
        "w": 0.0,
        "h": 0.0,
    }

    grad = []
    for k in ("cx", "cy", "w", "h"):
        d_inter = ih * diw[k] + iw * dih[k]
        d_iou = (d_inter * (union + inter) - inter * dap[k]) / union**2
        grad.append(dr[k] * (1.0 - iou_val) - r_val * d_iou)
    return (grad[0], grad[1], grad[2], grad[3])
