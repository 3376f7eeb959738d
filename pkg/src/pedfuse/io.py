"""Canonical file formats: detection/GT JSONL and JSON config schemas.

Detection records are one JSON object per line with keys in fixed order
(image_id, class, cx, cy, w, h, conf, then any extra keys sorted); all
known numeric fields are serialized with exactly six decimal places.
Writers sort records by image_id then confidence descending, so a rerun
with identical inputs produces identical bytes. Unknown fields survive a
read/write cycle, and parse → serialize is idempotent on canonical
records.

Config parsing validates every key and reports failures with the full
key path (e.g. "fusion.iou_threshold"), which the CLI maps to exit code
2. Data-file problems (malformed JSONL, invalid boxes) raise DataError
with file and line number, mapped to exit code 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .evaluation import AP_MODES, GroundTruth
from .fusion import (
    DEFAULT_RULES,
    Detection,
    FusionConfig,
    NmsConfig,
    RestoreRule,
    TIE_BREAKS,
)
from .geometry import BBox, InvalidBoxError
from .simulate import SceneConfig


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""


class DataError(ValueError):
    """Invalid data file; the message starts with file:line."""


def format_float(x: float) -> str:
    """Canonical six-decimal rendering used for all known numeric fields."""
    return f"{x:.6f}"


_DET_KEYS = ("image_id", "class", "cx", "cy", "w", "h", "conf")
_GT_KEYS = ("image_id", "class", "cx", "cy", "w", "h", "ignore")


def detection_to_line(det: Detection) -> str:
    parts = [
        f'"image_id": {json.dumps(det.image_id)}',
        f'"class": {json.dumps(det.class_name)}',
        f'"cx": {format_float(det.box.cx)}',
        f'"cy": {format_float(det.box.cy)}',
        f'"w": {format_float(det.box.w)}',
        f'"h": {format_float(det.box.h)}',
        f'"conf": {format_float(det.conf)}',
    ]
    for key in sorted(det.extras):
        parts.append(f"{json.dumps(key)}: {json.dumps(det.extras[key])}")
    return "{" + ", ".join(parts) + "}"


def ground_truth_to_line(gt: GroundTruth) -> str:
    parts = [
        f'"image_id": {json.dumps(gt.image_id)}',
        f'"class": {json.dumps(gt.class_name)}',
        f'"cx": {format_float(gt.box.cx)}',
        f'"cy": {format_float(gt.box.cy)}',
        f'"w": {format_float(gt.box.w)}',
        f'"h": {format_float(gt.box.h)}',
        f'"ignore": {json.dumps(gt.ignore)}',
    ]
    return "{" + ", ".join(parts) + "}"


def _parse_line(raw: str, where: str) -> dict[str, Any]:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataError(f"{where}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected a JSON object, got {type(obj).__name__}")
    return obj


def _field(obj: dict[str, Any], key: str, where: str) -> Any:
    if key not in obj:
        raise DataError(f"{where}: missing required field {key!r}")
    return obj[key]


def _num_field(obj: dict[str, Any], key: str, where: str) -> float:
    v = _field(obj, key, where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DataError(f"{where}: field {key!r} must be a number, got {v!r}")
    return float(v)


def detection_from_obj(obj: dict[str, Any], where: str = "<record>") -> Detection:
    image_id = _field(obj, "image_id", where)
    cls = _field(obj, "class", where)
    if not isinstance(image_id, str) or not isinstance(cls, str):
        raise DataError(f"{where}: image_id and class must be strings")
    nums = {k: _num_field(obj, k, where) for k in ("cx", "cy", "w", "h", "conf")}
    try:
        box = BBox(nums["cx"], nums["cy"], nums["w"], nums["h"])
        extras = {k: v for k, v in obj.items() if k not in _DET_KEYS}
        return Detection(image_id=image_id, class_name=cls, box=box,
                         conf=nums["conf"], extras=extras)
    except (InvalidBoxError, ValueError) as exc:
        raise DataError(f"{where}: {exc}") from None


def ground_truth_from_obj(obj: dict[str, Any], where: str = "<record>") -> GroundTruth:
    image_id = _field(obj, "image_id", where)
    cls = _field(obj, "class", where)
    if not isinstance(image_id, str) or not isinstance(cls, str):
        raise DataError(f"{where}: image_id and class must be strings")
    nums = {k: _num_field(obj, k, where) for k in ("cx", "cy", "w", "h")}
    ignore = obj.get("ignore", False)
    if not isinstance(ignore, bool):
        raise DataError(f"{where}: field 'ignore' must be a boolean, got {ignore!r}")
    unknown = [k for k in obj if k not in _GT_KEYS]
    if unknown:
        raise DataError(f"{where}: unknown ground-truth field {unknown[0]!r}")
    try:
        box = BBox(nums["cx"], nums["cy"], nums["w"], nums["h"])
    except InvalidBoxError as exc:
        raise DataError(f"{where}: {exc}") from None
    return GroundTruth(image_id=image_id, class_name=cls, box=box, ignore=ignore)


def write_detections_jsonl(path: str | Path, dets: list[Detection]) -> None:
    ordered = sorted(dets, key=lambda d: (d.image_id, d.sort_key()))
    text = "".join(detection_to_line(d) + "\n" for d in ordered)
    Path(path).write_text(text, encoding="utf-8")


def read_detections_jsonl(path: str | Path) -> list[Detection]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            where = f"{path}:{lineno}"
            out.append(detection_from_obj(_parse_line(raw, where), where))
    return out


def write_ground_truth_jsonl(path: str | Path, gts: list[GroundTruth]) -> None:
    ordered = sorted(gts, key=lambda g: (g.image_id, g.class_name, g.box.sort_key()))
    text = "".join(ground_truth_to_line(g) + "\n" for g in ordered)
    Path(path).write_text(text, encoding="utf-8")


def read_ground_truth_jsonl(path: str | Path) -> list[GroundTruth]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            where = f"{path}:{lineno}"
            out.append(ground_truth_from_obj(_parse_line(raw, where), where))
    return out


# --------------------------------------------------------------------------
# Config schemas


def _require_obj(value: Any, path: str) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(obj: dict[str, Any], allowed: tuple[str, ...], path: str) -> None:
    for key in obj:
        if key not in allowed:
            full = f"{path}.{key}" if path else key
            raise ConfigError(f"{full}: unknown key")


def _get_number(obj: dict[str, Any], key: str, default: float, path: str,
                lo: float | None = None, hi: float | None = None,
                lo_open: bool = False) -> float:
    if key not in obj:
        return default
    v = obj[key]
    full = f"{path}.{key}" if path else key
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{full}: must be a number, got {v!r}")
    v = float(v)
    if lo is not None and (v <= lo if lo_open else v < lo):
        bound = "greater than" if lo_open else "at least"
        raise ConfigError(f"{full}: must be {bound} {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{full}: must be at most {hi}, got {v}")
    return v


def _get_int(obj: dict[str, Any], key: str, default: int, path: str,
             lo: int | None = None) -> int:
    if key not in obj:
        return default
    v = obj[key]
    full = f"{path}.{key}" if path else key
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{full}: must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{full}: must be at least {lo}, got {v}")
    return v


def _get_choice(obj: dict[str, Any], key: str, default: str, path: str,
                choices: tuple[str, ...]) -> str:
    if key not in obj:
        return default
    v = obj[key]
    full = f"{path}.{key}" if path else key
    if not isinstance(v, str) or v not in choices:
        raise ConfigError(f"{full}: must be one of {choices}, got {v!r}")
    return v


def _get_bool(obj: dict[str, Any], key: str, default: bool, path: str) -> bool:
    if key not in obj:
        return default
    v = obj[key]
    full = f"{path}.{key}" if path else key
    if not isinstance(v, bool):
        raise ConfigError(f"{full}: must be a boolean, got {v!r}")
    return v


def _get_pair(obj: dict[str, Any], key: str, default: tuple[float, float],
              path: str) -> tuple[float, float]:
    if key not in obj:
        return default
    v = obj[key]
    full = f"{path}.{key}" if path else key
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)):
        raise ConfigError(f"{full}: must be a pair of numbers, got {v!r}")
    return (float(v[0]), float(v[1]))


@dataclass(frozen=True)
class EvalConfig:
    iou_thr: float = 0.5
    ap_mode: str = "all_point"


@dataclass(frozen=True)
class RunConfig:
    """Parsed pipeline configuration with every default made explicit."""
    rules: tuple[RestoreRule, ...] = DEFAULT_RULES
    fusion: FusionConfig = FusionConfig()
    nms: NmsConfig = NmsConfig()
    eval: EvalConfig = EvalConfig()


_RULE_KEYS = ("class", "dy_factor", "dx_factor", "w_factor", "h_factor")


def _parse_rule(obj: Any, path: str) -> RestoreRule:
    obj = _require_obj(obj, path)
    _reject_unknown(obj, _RULE_KEYS, path)
    if "class" not in obj or not isinstance(obj["class"], str) or not obj["class"]:
        raise ConfigError(f"{path}.class: must be a non-empty string")
    if "dy_factor" not in obj:
        raise ConfigError(f"{path}.dy_factor: required")
    return RestoreRule(
        part_class=obj["class"],
        dy_factor=_get_number(obj, "dy_factor", 0.0, path),
        dx_factor=_get_number(obj, "dx_factor", 0.0, path),
        w_factor=_get_number(obj, "w_factor", 1.0, path, lo=0.0, lo_open=True),
        h_factor=_get_number(obj, "h_factor", 1.0, path, lo=0.0, lo_open=True),
    )


_RUN_KEYS = ("restore_rules", "fusion", "nms", "eval")
_FUSION_KEYS = ("iou_threshold", "tie_break", "strict_classes")
_NMS_KEYS = ("conf_thr", "iou_thr")
_EVAL_KEYS = ("iou_thr", "ap_mode")


def parse_run_config(obj: dict[str, Any]) -> RunConfig:
    obj = _require_obj(obj, "<config>")
    _reject_unknown(obj, _RUN_KEYS, "")
    rules: tuple[RestoreRule, ...] = DEFAULT_RULES
    if "restore_rules" in obj:
        raw = obj["restore_rules"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("restore_rules: must be a non-empty list of rule objects")
        rules = tuple(_parse_rule(r, f"restore_rules[{i}]") for i, r in enumerate(raw))
        classes = [r.part_class for r in rules]
        if len(set(classes)) != len(classes):
            raise ConfigError("restore_rules: duplicate part class")
    f_obj = _require_obj(obj.get("fusion", {}), "fusion")
    _reject_unknown(f_obj, _FUSION_KEYS, "fusion")
    fusion = FusionConfig(
        iou_threshold=_get_number(f_obj, "iou_threshold", 0.5, "fusion", lo=0.0, hi=1.0, lo_open=True),
        tie_break=_get_choice(f_obj, "tie_break", "prefer-head", "fusion", TIE_BREAKS),
        strict_classes=_get_bool(f_obj, "strict_classes", True, "fusion"),
    )
    n_obj = _require_obj(obj.get("nms", {}), "nms")
    _reject_unknown(n_obj, _NMS_KEYS, "nms")
    nms = NmsConfig(
        conf_thr=_get_number(n_obj, "conf_thr", 0.25, "nms", lo=0.0, hi=1.0),
        iou_thr=_get_number(n_obj, "iou_thr", 0.45, "nms", lo=0.0, hi=1.0, lo_open=True),
    )
    e_obj = _require_obj(obj.get("eval", {}), "eval")
    _reject_unknown(e_obj, _EVAL_KEYS, "eval")
    eval_cfg = EvalConfig(
        iou_thr=_get_number(e_obj, "iou_thr", 0.5, "eval", lo=0.0, hi=1.0, lo_open=True),
        ap_mode=_get_choice(e_obj, "ap_mode", "all_point", "eval", AP_MODES),
    )
    return RunConfig(rules=rules, fusion=fusion, nms=nms, eval=eval_cfg)


_SCENE_KEYS = (
    "img_w", "img_h", "n_scenes", "n_pedestrians", "height_range", "body_aspect",
    "occlusion_rate", "visibility_threshold", "noise_eta", "conf_base", "seed",
    "occluder_cover", "lower_body_bias", "occlusion_penalty", "max_body_iou",
    "max_place_tries",
)


def parse_scene_config(obj: dict[str, Any]) -> tuple[SceneConfig, int]:
    """Scene-generation schema; returns the per-scene config and n_scenes."""
    obj = _require_obj(obj, "<config>")
    _reject_unknown(obj, _SCENE_KEYS, "")
    n_scenes = _get_int(obj, "n_scenes", 1, "", lo=0)
    max_body_iou = None
    if obj.get("max_body_iou") is not None:
        max_body_iou = _get_number(obj, "max_body_iou", 0.0, "", lo=0.0, hi=1.0)
    kwargs = dict(
        img_w=_get_int(obj, "img_w", 640, "", lo=1),
        img_h=_get_int(obj, "img_h", 640, "", lo=1),
        n_pedestrians=_get_int(obj, "n_pedestrians", 8, "", lo=0),
        height_range=_get_pair(obj, "height_range", (60.0, 160.0), ""),
        body_aspect=_get_number(obj, "body_aspect", 0.41, "", lo=0.0, lo_open=True),
        occlusion_rate=_get_number(obj, "occlusion_rate", 0.0, "", lo=0.0, hi=1.0),
        visibility_threshold=_get_number(obj, "visibility_threshold", 0.5, "",
                                         lo=0.0, hi=1.0, lo_open=True),
        noise_eta=_get_number(obj, "noise_eta", 0.02, "", lo=0.0),
        conf_base=_get_number(obj, "conf_base", 0.95, "", lo=0.0, hi=1.0, lo_open=True),
        seed=_get_int(obj, "seed", 0, ""),
        occluder_cover=_get_pair(obj, "occluder_cover", (0.45, 0.65), ""),
        lower_body_bias=_get_bool(obj, "lower_body_bias", True, ""),
        occlusion_penalty=_get_number(obj, "occlusion_penalty", 0.25, "", lo=0.0),
        max_body_iou=max_body_iou,
        max_place_tries=_get_int(obj, "max_place_tries", 200, "", lo=1),
    )
    try:
        cfg = SceneConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, n_scenes


def _load_json(path: str | Path) -> dict[str, Any]:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return _require_obj(obj, str(path))


def load_run_config(path: str | Path) -> RunConfig:
    return parse_run_config(_load_json(path))


def load_scene_config(path: str | Path) -> tuple[SceneConfig, int]:
    return parse_scene_config(_load_json(path))
