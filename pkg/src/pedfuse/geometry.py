"""Axis-aligned box geometry in center/size form.

Coordinates are real-valued pixels with y growing downward. Boxes are
immutable; every operation returns a new box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


class InvalidBoxError(ValueError):
    """Raised when a box has non-positive or non-finite dimensions."""


class EmptyBoxError(ValueError):
    """Raised when an operation would produce a zero-area box."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: center (cx, cy) and positive size (w, h)."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("cx", "cy", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidBoxError(f"{name} must be finite, got {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise InvalidBoxError(
                f"box dimensions must be positive, got w={self.w}, h={self.h}"
            )

    @property
    def x1(self) -> float:
        return self.cx - self.w / 2

    @property
    def y1(self) -> float:
        return self.cy - self.h / 2

    @property
    def x2(self) -> float:
        return self.cx + self.w / 2

    @property
    def y2(self) -> float:
        return self.cy + self.h / 2

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> tuple[float, float, float, float]:
        """Return (x1, y1, x2, y2)."""
        return (self.x1, self.y1, self.x2, self.y2)

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "BBox":
        if x2 <= x1 or y2 <= y1:
            raise InvalidBoxError(
                f"corners must satisfy x1 < x2 and y1 < y2, got ({x1}, {y1}, {x2}, {y2})"
            )
        return cls((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)

    def sort_key(self) -> tuple[float, float, float, float]:
        """Deterministic ordering key used as the final tie-break in sorts."""
        return (self.cx, self.cy, self.w, self.h)


def intersection_area(a: BBox, b: BBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1].

    Both box areas are recomputed from the same corner differences that
    the intersection uses, so intersection <= min(area) holds exactly and
    iou(a, a) is exactly 1 despite center/size <-> corner rounding.
    """
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    area_a = (a.x2 - a.x1) * (a.y2 - a.y1)
    area_b = (b.x2 - b.x1) * (b.y2 - b.y1)
    return inter / (area_a + area_b - inter)


def enclosing_box(a: BBox, b: BBox) -> BBox:
    """Smallest box containing both inputs."""
    return BBox.from_corners(
        min(a.x1, b.x1), min(a.y1, b.y1), max(a.x2, b.x2), max(a.y2, b.y2)
    )


def clip_to_image(box: BBox, img_w: float, img_h: float) -> BBox:
    """Clip a box to the image rectangle [0, img_w] x [0, img_h].

    Raises EmptyBoxError if the box lies entirely outside the image.
    """
    if img_w <= 0 or img_h <= 0:
        raise InvalidBoxError(f"image dims must be positive, got {img_w}x{img_h}")
    x1 = max(box.x1, 0.0)
    y1 = max(box.y1, 0.0)
    x2 = min(box.x2, float(img_w))
    y2 = min(box.y2, float(img_h))
    if x2 <= x1 or y2 <= y1:
        raise EmptyBoxError(
            f"box {box.corners()} lies outside image {img_w}x{img_h}"
        )
    return BBox.from_corners(x1, y1, x2, y2)
