"""Desk-scale forward passes for conv, squeeze-excite, and ghost layers.

These are reference implementations meant for correctness work at small
dimensions, not speed. Every arithmetic path can be instrumented with a
MacCounter so the multiply-accumulate count actually performed can be
compared against analytical formulas (see `complexity`).

Counting convention: one MAC per kernel tap (zero padding included), per
fully-connected weight, per pooled element, and per channel-scale multiply.
Bias adds and activations are not counted.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class ShapeMismatchError(ValueError):
    """Raised when operand shapes are inconsistent."""


class MacCounter:
    """Accumulates the number of multiply-accumulate operations performed."""

    def __init__(self) -> None:
        self.total = 0

    def add(self, n: int) -> None:
        self.total += int(n)


def count_macs(run: Callable[[MacCounter], object]) -> int:
    """Run a callable with a fresh counter and return the observed MAC count."""
    counter = MacCounter()
    run(counter)
    return counter.total


@dataclass(frozen=True)
class FeatureMap:
    """Dense feature map with shape (h, w, c), float64."""

    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim != 3:
            raise ShapeMismatchError(f"feature map must be (h, w, c), got {self.data.shape}")
        if min(self.data.shape) < 1:
            raise ShapeMismatchError(f"feature map dims must be positive, got {self.data.shape}")
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.float64))

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def c(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class ConvKernelSet:
    """Convolution weights with shape (c2, k, k, c1); bias-free."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 4 or w.shape[1] != w.shape[2]:
            raise ShapeMismatchError(
                f"kernel set must be (c2, k, k, c1) with square k, got {w.shape}"
            )
        object.__setattr__(self, "weights", w)

    @property
    def c2(self) -> int:
        return self.weights.shape[0]

    @property
    def k(self) -> int:
        return self.weights.shape[1]

    @property
    def c1(self) -> int:
        return self.weights.shape[3]


@dataclass(frozen=True)
class SEWeights:
    """Squeeze-excite weights: fc1 (c/r, c) and fc2 (c, c/r), bias-free."""

    c: int
    r: int
    fc1: np.ndarray
    fc2: np.ndarray

    def __post_init__(self) -> None:
        if self.r < 1 or self.c < 1 or self.c % self.r != 0:
            raise ShapeMismatchError(f"reduction r={self.r} must divide c={self.c}")
        mid = self.c // self.r
        fc1 = np.asarray(self.fc1, dtype=np.float64)
        fc2 = np.asarray(self.fc2, dtype=np.float64)
        if fc1.shape != (mid, self.c):
            raise ShapeMismatchError(f"fc1 must be ({mid}, {self.c}), got {fc1.shape}")
        if fc2.shape != (self.c, mid):
            raise ShapeMismatchError(f"fc2 must be ({self.c}, {mid}), got {fc2.shape}")
        object.__setattr__(self, "fc1", fc1)
        object.__setattr__(self, "fc2", fc2)


def conv_output_dim(in_dim: int, k: int, stride: int, pad: int) -> int:
    return (in_dim + 2 * pad - k) // stride + 1


def conv2d_direct(x: FeatureMap, kernels: ConvKernelSet, stride: int = 1,
                  pad: int = 0, counter: Optional[MacCounter] = None) -> FeatureMap:
    """Direct (sliding-window) convolution.

    Output dims: (dim + 2*pad - k) // stride + 1. Every kernel tap is one
    MAC, including taps over zero padding, so the observed count equals
    h2 * w2 * c2 * c1 * k * k.
    """
    if stride < 1 or pad < 0:
        raise ValueError(f"stride must be >= 1 and pad >= 0, got {stride}, {pad}")
    if kernels.c1 != x.c:
        raise ShapeMismatchError(
            f"kernel expects {kernels.c1} input channels, map has {x.c}"
        )
    k = kernels.k
    h2 = conv_output_dim(x.h, k, stride, pad)
    w2 = conv_output_dim(x.w, k, stride, pad)
    if h2 < 1 or w2 < 1:
        raise ShapeMismatchError(
            f"kernel {k}x{k} larger than padded input {x.h}x{x.w} (pad {pad})"
        )
    padded = np.pad(x.data, ((pad, pad), (pad, pad), (0, 0)))
    out = np.empty((h2, w2, kernels.c2), dtype=np.float64)
    for o in range(kernels.c2):
        kern = kernels.weights[o]  # (k, k, c1)
        for i in range(h2):
            for j in range(w2):
                window = padded[i * stride:i * stride + k, j * stride:j * stride + k, :]
                out[i, j, o] = float(np.sum(window * kern))
                if counter is not None:
                    counter.add(window.size)
    return FeatureMap(out)


def se_forward(x: FeatureMap, weights: SEWeights,
               counter: Optional[MacCounter] = None) -> FeatureMap:
    """Squeeze-excite: global average pool, FC -> ReLU -> FC -> sigmoid,
    then channelwise scaling. Gate values lie strictly in (0, 1)."""
    if weights.c != x.c:
        raise ShapeMismatchError(f"SE expects {weights.c} channels, map has {x.c}")
    squeezed = x.data.mean(axis=(0, 1))  # (c,)
    if counter is not None:
        counter.add(x.h * x.w * x.c)  # pooled accumulations
    z = weights.fc1 @ squeezed
    if counter is not None:
        counter.add(weights.fc1.size)
    z = np.maximum(z, 0.0)
    e = weights.fc2 @ z
    if counter is not None:
        counter.add(weights.fc2.size)
    gate = 1.0 / (1.0 + np.exp(-e))
    out = x.data * gate[None, None, :]
    if counter is not None:
        counter.add(x.h * x.w * x.c)  # channel-scale multiplies
    return FeatureMap(out)


def ghost_forward(x: FeatureMap, primary: ConvKernelSet, cheap: np.ndarray,
                  s: int, stride: int = 1, pad: int = 0,
                  counter: Optional[MacCounter] = None) -> FeatureMap:
    """Ghost layer: a primary convolution produces c2/s intrinsic channels,
    then cheap depthwise l x l filters generate the remaining (s-1)*c2/s
    channels, one group of s-1 ghosts per intrinsic channel.

    `cheap` has shape ((s-1)*m, l, l) where m = primary.c2; ghost channel
    t*m + i is produced from intrinsic channel i by filter t*m + i. The
    cheap filters run with stride 1 and same padding (odd l), so output
    dims match the intrinsic maps. With s = 1 the layer degenerates to the
    plain primary convolution.
    """
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    m = primary.c2
    cheap = np.asarray(cheap, dtype=np.float64)
    if s == 1:
        if cheap.size != 0:
            raise ShapeMismatchError("s=1 admits no cheap filters")
        return conv2d_direct(x, primary, stride, pad, counter)
    if cheap.ndim != 3 or cheap.shape[1] != cheap.shape[2]:
        raise ShapeMismatchError(f"cheap filters must be (n, l, l), got {cheap.shape}")
    if cheap.shape[0] != (s - 1) * m:
        raise ShapeMismatchError(
            f"need (s-1)*m = {(s - 1) * m} cheap filters, got {cheap.shape[0]}"
        )
    l = cheap.shape[1]
    if l % 2 != 1:
        raise ShapeMismatchError(f"cheap filter size must be odd, got {l}")
    intrinsic = conv2d_direct(x, primary, stride, pad, counter)
    h2, w2 = intrinsic.h, intrinsic.w
    lpad = l // 2
    padded = np.pad(intrinsic.data, ((lpad, lpad), (lpad, lpad), (0, 0)))
    ghosts = np.empty((h2, w2, (s - 1) * m), dtype=np.float64)
    for t in range(s - 1):
        for ch in range(m):
            filt = cheap[t * m + ch]
            for i in range(h2):
                for j in range(w2):
                    window = padded[i:i + l, j:j + l, ch]
                    ghosts[i, j, t * m + ch] = float(np.sum(window * filt))
                    if counter is not None:
                        counter.add(window.size)
    return FeatureMap(np.concatenate([intrinsic.data, ghosts], axis=2))
