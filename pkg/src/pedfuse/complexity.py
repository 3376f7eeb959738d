"""Analytical parameter and FLOP accounting for layered conv models.

Conventions
-----------
* FLOPs are multiply-accumulate counts (MACs), as integers. Reporting code
  may double them for multiply+add style figures.
* Convolutions are bias-free with a 2-parameter batch-norm affine per
  output channel: params = c1*c2*n^2 + 2*c2.
* Ghost layers split c2 into c2/s intrinsic channels from a primary n x n
  convolution plus (s-1)*c2/s channels from depthwise l x l filters.
* Spatial dims follow the same-padding convention pad = (n-1)//2, so
  out = (in + 2*pad - n)//stride + 1.
* Squeeze-excite FLOPs count pooling, both FC layers, and the channel
  scaling: 2*h*w*c + 2*c^2/r. Params include FC biases: 2*c^2/r + c + c/r.

These formulas are matched tap-for-tap by the instrumented forwards in
`micronn`, and the test suite pins that equality.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

LAYER_KINDS = ("conv", "ghost_conv", "se", "fc", "other-fixed")


class SpecError(ValueError):
    """Raised for malformed or inconsistent model specs."""


def same_pad(n: int) -> int:
    return (n - 1) // 2


def conv_out_dim(in_dim: int, n: int, stride: int) -> int:
    return (in_dim + 2 * same_pad(n) - n) // stride + 1


def conv_params(c1: int, c2: int, n: int) -> int:
    return c1 * c2 * n * n + 2 * c2


def conv_flops(c1: int, c2: int, n: int, in_h: int, in_w: int, stride: int = 1) -> int:
    h2 = conv_out_dim(in_h, n, stride)
    w2 = conv_out_dim(in_w, n, stride)
    if h2 < 1 or w2 < 1:
        raise SpecError(f"kernel {n} with stride {stride} exceeds input {in_h}x{in_w}")
    return h2 * w2 * c2 * c1 * n * n


def ghost_params(c1: int, c2: int, n: int, s: int, l: int) -> int:
    if s < 1 or c2 % s != 0:
        raise SpecError(f"s={s} must be >= 1 and divide c2={c2}")
    m = c2 // s
    return c1 * m * n * n + 2 * m + (s - 1) * m * l * l + 2 * (s - 1) * m


def ghost_flops(c1: int, c2: int, n: int, in_h: int, in_w: int,
                s: int, l: int, stride: int = 1) -> int:
    if s < 1 or c2 % s != 0:
        raise SpecError(f"s={s} must be >= 1 and divide c2={c2}")
    m = c2 // s
    h2 = conv_out_dim(in_h, n, stride)
    w2 = conv_out_dim(in_w, n, stride)
    if h2 < 1 or w2 < 1:
        raise SpecError(f"kernel {n} with stride {stride} exceeds input {in_h}x{in_w}")
    return h2 * w2 * m * c1 * n * n + (s - 1) * h2 * w2 * m * l * l


def se_params(c: int, r: int) -> int:
    if r < 1 or c % r != 0:
        raise SpecError(f"reduction r={r} must divide c={c}")
    return 2 * c * c // r + c + c // r


def se_flops(c: int, r: int, in_h: int, in_w: int) -> int:
    if r < 1 or c % r != 0:
        raise SpecError(f"reduction r={r} must divide c={c}")
    return 2 * in_h * in_w * c + 2 * c * c // r


def fc_params(c1: int, c2: int) -> int:
    return c1 * c2 + c2


def fc_flops(c1: int, c2: int) -> int:
    return c1 * c2


@dataclass(frozen=True)
class LayerSpec:
    """One accountable layer.

    `src` names the layers feeding this one (in-channels = sum of their
    out-channels); None means the immediately preceding layer. Kind
    "other-fixed" contributes fixed_params/fixed_flops and passes dims
    through unless out_c/out_h/out_w are declared — that is how upsample,
    concat, and pooling records appear in FPN-style graphs.
    """

    name: str
    kind: str
    c1: int
    c2: int
    in_h: int
    in_w: int
    n: int = 1
    stride: int = 1
    s: int = 1
    l: int = 3
    r: int = 16
    fixed_params: int = 0
    fixed_flops: int = 0
    src: Optional[tuple[str, ...]] = None
    out_c: Optional[int] = None
    out_h: Optional[int] = None
    out_w: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise SpecError(f"layer {self.name!r}: unknown kind {self.kind!r}")
        if self.c1 < 1 or self.c2 < 1 or self.in_h < 1 or self.in_w < 1:
            raise SpecError(f"layer {self.name!r}: dims must be positive")
        if self.kind in ("conv", "ghost_conv"):
            if self.n < 1 or self.stride < 1:
                raise SpecError(f"layer {self.name!r}: n and stride must be >= 1")
        if self.kind == "ghost_conv":
            if self.s < 1 or self.c2 % self.s != 0:
                raise SpecError(
                    f"layer {self.name!r}: s={self.s} must be >= 1 and divide c2={self.c2}"
                )
            if self.l < 1 or self.l % 2 != 1:
                raise SpecError(f"layer {self.name!r}: l={self.l} must be odd and >= 1")
        if self.kind == "se":
            if self.c1 != self.c2:
                raise SpecError(f"layer {self.name!r}: se requires c1 == c2")
            if self.r < 1 or self.c1 % self.r != 0:
                raise SpecError(f"layer {self.name!r}: r={self.r} must divide c={self.c1}")
        if self.src is not None:
            object.__setattr__(self, "src", tuple(self.src))


def layer_out_dims(layer: LayerSpec) -> tuple[int, int, int]:
    """(out_h, out_w, out_c) of a layer."""
    if layer.kind in ("conv", "ghost_conv"):
        h2 = conv_out_dim(layer.in_h, layer.n, layer.stride)
        w2 = conv_out_dim(layer.in_w, layer.n, layer.stride)
        if h2 < 1 or w2 < 1:
            raise SpecError(
                f"layer {layer.name!r}: kernel {layer.n} stride {layer.stride} "
                f"exceeds input {layer.in_h}x{layer.in_w}"
            )
        return h2, w2, layer.c2
    if layer.kind == "se":
        return layer.in_h, layer.in_w, layer.c2
    if layer.kind == "fc":
        return 1, 1, layer.c2
    h = layer.out_h if layer.out_h is not None else layer.in_h
    w = layer.out_w if layer.out_w is not None else layer.in_w
    c = layer.out_c if layer.out_c is not None else layer.c1
    return h, w, c


def layer_params(layer: LayerSpec) -> int:
    if layer.kind == "conv":
        return conv_params(layer.c1, layer.c2, layer.n)
    if layer.kind == "ghost_conv":
        return ghost_params(layer.c1, layer.c2, layer.n, layer.s, layer.l)
    if layer.kind == "se":
        return se_params(layer.c1, layer.r)
    if layer.kind == "fc":
        return fc_params(layer.c1, layer.c2)
    return layer.fixed_params


def layer_flops(layer: LayerSpec) -> int:
    if layer.kind == "conv":
        return conv_flops(layer.c1, layer.c2, layer.n, layer.in_h, layer.in_w, layer.stride)
    if layer.kind == "ghost_conv":
        return ghost_flops(layer.c1, layer.c2, layer.n, layer.in_h, layer.in_w,
                           layer.s, layer.l, layer.stride)
    if layer.kind == "se":
        return se_flops(layer.c1, layer.r, layer.in_h, layer.in_w)
    if layer.kind == "fc":
        return fc_flops(layer.c1, layer.c2)
    return layer.fixed_flops


@dataclass(frozen=True)
class SpeedupRatio:
    exact: float
    approx: float


def speedup_ratio(layer: LayerSpec) -> SpeedupRatio:
    """Speedup of a ghost layer over the equivalent plain convolution.

    exact  = conv_flops / ghost_flops  (integer-exact operands)
    approx = s*c1 / (s + c1 - 1)

    The two are identical floats whenever l == n, because both divisions
    reduce the same rational number.
    """
    if layer.kind != "ghost_conv":
        raise SpecError(f"layer {layer.name!r}: speedup_ratio needs a ghost_conv layer")
    dense = conv_flops(layer.c1, layer.c2, layer.n, layer.in_h, layer.in_w, layer.stride)
    ghost = ghost_flops(layer.c1, layer.c2, layer.n, layer.in_h, layer.in_w,
                        layer.s, layer.l, layer.stride)
    return SpeedupRatio(exact=dense / ghost,
                        approx=layer.s * layer.c1 / (layer.s + layer.c1 - 1))


@dataclass(frozen=True)
class ModelSpec:
    name: str
    layers: tuple[LayerSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        names = [l.name for l in self.layers]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise SpecError(f"duplicate layer names: {sorted(dup)}")

    def validate(self) -> None:
        """Check that every layer's declared input matches its sources.

        Sources default to the preceding layer; multi-source layers sum
        channel counts (concat) and require equal spatial dims. Raises
        SpecError naming the first offending layer.
        """
        outs: dict[str, tuple[int, int, int]] = {}
        prev: Optional[LayerSpec] = None
        for layer in self.layers:
            if layer.src is None:
                if prev is None:
                    srcs = []
                else:
                    srcs = [prev.name]
            else:
                srcs = list(layer.src)
            if srcs:
                for s_name in srcs:
                    if s_name not in outs:
                        raise SpecError(
                            f"layer {layer.name!r}: source {s_name!r} is not an earlier layer"
                        )
                hs = {outs[s][0] for s in srcs}
                ws = {outs[s][1] for s in srcs}
                if len(hs) != 1 or len(ws) != 1:
                    raise SpecError(
                        f"layer {layer.name!r}: sources differ in spatial dims"
                    )
                exp_h, exp_w = hs.pop(), ws.pop()
                exp_c = sum(outs[s][2] for s in srcs)
                if (layer.in_h, layer.in_w) != (exp_h, exp_w):
                    raise SpecError(
                        f"layer {layer.name!r}: declared input {layer.in_h}x{layer.in_w} "
                        f"!= source output {exp_h}x{exp_w}"
                    )
                if layer.c1 != exp_c:
                    raise SpecError(
                        f"layer {layer.name!r}: declared c1={layer.c1} != "
                        f"source channels {exp_c}"
                    )
            outs[layer.name] = layer_out_dims(layer)
            prev = layer


@dataclass(frozen=True)
class LayerReport:
    name: str
    kind: str
    params: int
    flops: int


@dataclass(frozen=True)
class ModelReport:
    name: str
    rows: tuple[LayerReport, ...]
    total_params: int
    total_flops: int


def summarize(model: ModelSpec, validate: bool = True) -> ModelReport:
    """Per-layer and total params/FLOPs. Totals are plain sums over layers,
    so summarizing two halves of a split spec adds up to the whole."""
    if validate:
        model.validate()
    rows = tuple(
        LayerReport(l.name, l.kind, layer_params(l), layer_flops(l))
        for l in model.layers
    )
    return ModelReport(
        name=model.name,
        rows=rows,
        total_params=sum(r.params for r in rows),
        total_flops=sum(r.flops for r in rows),
    )


@dataclass(frozen=True)
class ComplexityDelta:
    param_delta: int
    param_reduction_pct: float
    flops_delta: int
    flops_reduction_pct: float


def compare(base: ModelReport, other: ModelReport) -> ComplexityDelta:
    """Reduction of `other` relative to `base` (positive = smaller)."""
    return ComplexityDelta(
        param_delta=base.total_params - other.total_params,
        param_reduction_pct=100.0 * (base.total_params - other.total_params) / base.total_params,
        flops_delta=base.total_flops - other.total_flops,
        flops_reduction_pct=100.0 * (base.total_flops - other.total_flops) / base.total_flops,
    )


# --- JSON round trip ---------------------------------------------------------

_LAYER_DEFAULTS = {
    "n": 1, "stride": 1, "s": 1, "l": 3, "r": 16,
    "fixed_params": 0, "fixed_flops": 0,
    "src": None, "out_c": None, "out_h": None, "out_w": None,
}


def layer_to_dict(layer: LayerSpec) -> dict:
    d = {"name": layer.name, "kind": layer.kind, "c1": layer.c1, "c2": layer.c2,
         "in_h": layer.in_h, "in_w": layer.in_w}
    for key, default in _LAYER_DEFAULTS.items():
        val = getattr(layer, key)
        if key == "src" and val is not None:
            val = list(val)
        if val != default:
            d[key] = val
    return d


def layer_from_dict(d: dict) -> LayerSpec:
    known = {"name", "kind", "c1", "c2", "in_h", "in_w", *_LAYER_DEFAULTS}
    unknown = set(d) - known
    if unknown:
        raise SpecError(f"layer {d.get('name', '?')!r}: unknown fields {sorted(unknown)}")
    kwargs = dict(d)
    if "src" in kwargs and kwargs["src"] is not None:
        kwargs["src"] = tuple(kwargs["src"])
    try:
        return LayerSpec(**kwargs)
    except TypeError as exc:
        raise SpecError(f"layer {d.get('name', '?')!r}: {exc}") from exc


def model_to_dict(model: ModelSpec) -> dict:
    return {"name": model.name, "layers": [layer_to_dict(l) for l in model.layers]}


def model_from_dict(d: dict) -> ModelSpec:
    if "name" not in d or "layers" not in d:
        raise SpecError("model spec requires 'name' and 'layers'")
    return ModelSpec(name=d["name"], layers=tuple(layer_from_dict(x) for x in d["layers"]))


def load_model_spec(path: str) -> ModelSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return model_from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: not valid JSON ({exc})") from exc


def save_model_spec(model: ModelSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")
