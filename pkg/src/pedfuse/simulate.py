"""Synthetic occlusion scenes for benchmarking part-based fusion.

Scenes hold upright pedestrians (fixed width/height aspect), rectangular
occluders, exact whole-body and part ground truth, and two simulated
detector streams:

* part stream — a head and a leg detection per pedestrian, each emitted
  only while the part's visible-area fraction stays at or above the
  visibility threshold;
* whole-body baseline stream — one person detection per pedestrian,
  emitted under the same rule applied to the full body box.

Part ground truth is the algebraic inverse of the restore rules in
`fusion`, so restoring a derived part reproduces the body box exactly.

Determinism: every scene is a pure function of its config. Randomness
comes from a single `numpy.random.default_rng` (PCG64) stream seeded
with `config.seed`, consumed in a fixed documented order: pedestrian
heights (one vectorized draw), per-pedestrian placement, the occluded
subset, per-occluder geometry, then per emitted detection five normals
(dcx, dcy, dw, dh, dconf) in pedestrian order, head before leg before
body. Multi-scene batches derive child seeds from a SeedSequence over
the master seed, so scenes are independent and reproducible in any
order.

Occluders target the lower body: each selected pedestrian gets a
rectangle spanning its full width and covering the bottom 45-65% of its
height (configurable), which leaves heads visible — the regime where
part-level detection pays off. Setting `lower_body_bias=False` scatters
the occluders uniformly over the scene instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .evaluation import GroundTruth
from .fusion import Detection, HEAD_CLASS, LEG_CLASS, WHOLE_BODY_CLASS
from .geometry import BBox, iou

_MIN_CONF = 1e-6
_MIN_DIM = 1e-3


class PlacementError(RuntimeError):
    """Raised when a pedestrian cannot be placed within bounded retries."""

    def __init__(self, index: int, message: str) -> None:
        super().__init__(f"pedestrian {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class Pedestrian:
    id: int
    body: BBox


@dataclass(frozen=True)
class Occluder:
    box: BBox


@dataclass(frozen=True)
class SceneConfig:
    img_w: int = 640
    img_h: int = 640
    n_pedestrians: int = 8
    height_range: tuple[float, float] = (60.0, 160.0)
    body_aspect: float = 0.41
    occlusion_rate: float = 0.0
    visibility_threshold: float = 0.5
    noise_eta: float = 0.02
    conf_base: float = 0.95
    seed: int = 0
    occluder_cover: tuple[float, float] = (0.45, 0.65)
    lower_body_bias: bool = True
    occlusion_penalty: float = 0.25
    max_body_iou: float | None = None
    max_place_tries: int = 200

    def __post_init__(self) -> None:
        if self.img_w <= 0 or self.img_h <= 0:
            raise ValueError("image dimensions must be positive")
        if self.n_pedestrians < 0:
            raise ValueError("n_pedestrians must be non-negative")
        lo, hi = self.height_range
        if not 0 < lo <= hi:
            raise ValueError(f"height_range must satisfy 0 < lo <= hi, got {self.height_range}")
        if self.body_aspect <= 0:
            raise ValueError("body_aspect must be positive")
        if not 0.0 <= self.occlusion_rate <= 1.0:
            raise ValueError(f"occlusion_rate must lie in [0, 1], got {self.occlusion_rate}")
        if not 0.0 < self.visibility_threshold <= 1.0:
            raise ValueError(
                f"visibility_threshold must lie in (0, 1], got {self.visibility_threshold}"
            )
        if self.noise_eta < 0:
            raise ValueError("noise_eta must be non-negative")
        if not 0.0 < self.conf_base <= 1.0:
            raise ValueError("conf_base must lie in (0, 1]")
        clo, chi = self.occluder_cover
        if not 0.0 <= clo <= chi <= 1.0:
            raise ValueError(f"occluder_cover must be an ordered pair in [0, 1], got {self.occluder_cover}")
        if self.occlusion_penalty < 0:
            raise ValueError("occlusion_penalty must be non-negative")
        if self.max_body_iou is not None and not 0.0 <= self.max_body_iou <= 1.0:
            raise ValueError("max_body_iou must lie in [0, 1] when set")
        if self.max_place_tries < 1:
            raise ValueError("max_place_tries must be at least 1")


@dataclass(frozen=True)
class Scene:
    config: SceneConfig
    image_id: str
    pedestrians: list[Pedestrian]
    occluders: list[Occluder]
    body_gts: list[GroundTruth]
    part_gts: list[GroundTruth]
    part_dets: list[Detection] = field(default_factory=list)
    body_dets: list[Detection] = field(default_factory=list)


def derive_head(body: BBox) -> BBox:
    """Head box implied by a whole-body box (inverse of the head restore
    rule): centered horizontally, two fifths of the height above center,
    half the width, one fifth the height."""
    return BBox(body.cx, body.cy - 0.4 * body.h, body.w / 2, body.h / 5)


def derive_leg(body: BBox) -> BBox:
    """Leg box implied by a whole-body box (inverse of the leg restore
    rule): a quarter height below center, three quarters of the width,
    half the height."""
    return BBox(body.cx, body.cy + body.h / 4, 0.75 * body.w, body.h / 2)


def visibility(part: BBox, occluders: list[Occluder] | list[BBox]) -> float:
    """Fraction of the part's area not covered by the union of occluders.

    Exact: the union area comes from a coordinate-compression sweep over
    the occluder rectangles clipped to the part, so overlapping occluders
    are never double counted.
    """
    boxes = [o.box if isinstance(o, Occluder) else o for o in occluders]
    clipped: list[tuple[float, float, float, float]] = []
    for b in boxes:
        x1, y1 = max(b.x1, part.x1), max(b.y1, part.y1)
        x2, y2 = min(b.x2, part.x2), min(b.y2, part.y2)
        if x2 > x1 and y2 > y1:
            clipped.append((x1, y1, x2, y2))
    if not clipped:
        return 1.0
    xs = sorted({v for c in clipped for v in (c[0], c[2])})
    ys = sorted({v for c in clipped for v in (c[1], c[3])})
    covered = 0.0
    for xi in range(len(xs) - 1):
        x_lo, x_hi = xs[xi], xs[xi + 1]
        cell_w = x_hi - x_lo
        if cell_w <= 0:
            continue
        for yi in range(len(ys) - 1):
            y_lo, y_hi = ys[yi], ys[yi + 1]
            if y_hi <= y_lo:
                continue
            for (cx1, cy1, cx2, cy2) in clipped:
                if cx1 <= x_lo and x_hi <= cx2 and cy1 <= y_lo and y_hi <= cy2:
                    covered += cell_w * (y_hi - y_lo)
                    break
    area = part.area
    return (area - covered) / area


def _place_bodies(cfg: SceneConfig, rng: np.random.Generator) -> list[Pedestrian]:
    heights = rng.uniform(cfg.height_range[0], cfg.height_range[1], cfg.n_pedestrians)
    peds: list[Pedestrian] = []
    for i in range(cfg.n_pedestrians):
        h = float(heights[i])
        w = cfg.body_aspect * h
        if w > cfg.img_w or h > cfg.img_h:
            raise PlacementError(i, f"body {w:.1f}x{h:.1f} does not fit the {cfg.img_w}x{cfg.img_h} scene")
        for _ in range(cfg.max_place_tries):
            cx = float(rng.uniform(w / 2, cfg.img_w - w / 2))
            cy = float(rng.uniform(h / 2, cfg.img_h - h / 2))
            body = BBox(cx, cy, w, h)
            if cfg.max_body_iou is None or all(
                iou(body, p.body) <= cfg.max_body_iou for p in peds
            ):
                peds.append(Pedestrian(id=i, body=body))
                break
        else:
            raise PlacementError(
                i, f"no placement with pairwise body IoU <= {cfg.max_body_iou} after {cfg.max_place_tries} tries"
            )
    return peds


def _make_occluders(cfg: SceneConfig, peds: list[Pedestrian],
                    rng: np.random.Generator) -> list[Occluder]:
    k = int(round(cfg.occlusion_rate * len(peds)))
    if k == 0:
        return []
    chosen = sorted(int(i) for i in rng.choice(len(peds), size=k, replace=False))
    occluders: list[Occluder] = []
    if cfg.lower_body_bias:
        for idx in chosen:
            body = peds[idx].body
            f = float(rng.uniform(cfg.occluder_cover[0], cfg.occluder_cover[1]))
            width_factor = float(rng.uniform(1.2, 1.8))
            jitter_max = (width_factor - 1.0) * body.w / 2
            jitter = float(rng.uniform(-0.9, 0.9)) * jitter_max
            occ_h = (f + 0.1) * body.h
            top = body.y2 - f * body.h
            occluders.append(
                Occluder(BBox(body.cx + jitter, top + occ_h / 2, width_factor * body.w, occ_h))
            )
    else:
        h_mean = (cfg.height_range[0] + cfg.height_range[1]) / 2
        for _ in chosen:
            cx = float(rng.uniform(0, cfg.img_w))
            cy = float(rng.uniform(0, cfg.img_h))
            w = float(rng.uniform(0.6, 1.8)) * cfg.body_aspect * h_mean
            h = float(rng.uniform(0.4, 0.9)) * h_mean
            occluders.append(Occluder(BBox(cx, cy, w, h)))
    return occluders


def _emit(det_box: BBox, vis: float, cls: str, image_id: str, cfg: SceneConfig,
          rng: np.random.Generator) -> Detection:
    z = rng.standard_normal(5)
    eta = cfg.noise_eta
    w = max(det_box.w * (1 + eta * z[2]), _MIN_DIM)
    h = max(det_box.h * (1 + eta * z[3]), _MIN_DIM)
    box = BBox(det_box.cx + eta * det_box.w * z[0],
               det_box.cy + eta * det_box.h * z[1], w, h)
    conf = cfg.conf_base - cfg.occlusion_penalty * (1.0 - vis) + eta * z[4]
    conf = min(max(conf, _MIN_CONF), 1.0)
    return Detection(image_id=image_id, class_name=cls, box=box, conf=conf)


def generate(config: SceneConfig, image_id: str = "scene0000") -> Scene:
    """Build one scene: place bodies, drop occluders, derive exact GT, and
    emit the noisy part and whole-body detection streams."""
    rng = np.random.default_rng(config.seed)
    peds = _place_bodies(config, rng)
    occluders = _make_occluders(config, peds, rng)

    body_gts: list[GroundTruth] = []
    part_gts: list[GroundTruth] = []
    for p in peds:
        body_gts.append(GroundTruth(image_id, WHOLE_BODY_CLASS, p.body))
        part_gts.append(GroundTruth(image_id, HEAD_CLASS, derive_head(p.body)))
        part_gts.append(GroundTruth(image_id, LEG_CLASS, derive_leg(p.body)))

    part_dets: list[Detection] = []
    body_dets: list[Detection] = []
    occ_boxes = [o.box for o in occluders]
    v_min = config.visibility_threshold
    for p in peds:
        for cls, box in ((HEAD_CLASS, derive_head(p.body)), (LEG_CLASS, derive_leg(p.body))):
            vis = visibility(box, occ_boxes)
            if vis >= v_min:
                part_dets.append(_emit(box, vis, cls, image_id, config, rng))
        body_vis = visibility(p.body, occ_boxes)
        if body_vis >= v_min:
            body_dets.append(_emit(p.body, body_vis, WHOLE_BODY_CLASS, image_id, config, rng))

    return Scene(config=config, image_id=image_id, pedestrians=peds,
                 occluders=occluders, body_gts=body_gts, part_gts=part_gts,
                 part_dets=part_dets, body_dets=body_dets)


def generate_scenes(config: SceneConfig, n_scenes: int) -> list[Scene]:
    """Independent scenes scene0000..scene{n-1}, with per-scene seeds spawned
    from `config.seed` through a SeedSequence so each scene stays a pure
    function of its own derived config."""
    if n_scenes < 0:
        raise ValueError("n_scenes must be non-negative")
    child_seeds = np.random.SeedSequence(config.seed).generate_state(max(n_scenes, 1), dtype=np.uint64)
    scenes = []
    for i in range(n_scenes):
        cfg_i = replace(config, seed=int(child_seeds[i]))
        scenes.append(generate(cfg_i, image_id=f"scene{i:04d}"))
    return scenes
