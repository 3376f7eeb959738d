"""Reference micro-layer forwards, and counting their work two ways.

The complexity module counts multiply-accumulates with closed-form
formulas; the micronn module actually executes tiny direct (loop-based)
forward passes and *counts every MAC as it happens*. This demo runs a
plain convolution, a squeeze-excitation gate, and a ghost convolution
on random inputs and shows the two counts agreeing exactly.

Run:  python3 demos/04_micro_layers.py
"""

import numpy as np

from pedfuse import (
    ConvKernelSet,
    FeatureMap,
    SEWeights,
    conv2d_direct,
    ghost_forward,
    se_forward,
)
from pedfuse.complexity import conv_flops, ghost_flops, same_pad, se_flops
from pedfuse.micronn import count_macs

rng = np.random.default_rng(4)


def main():
    h, w, c1, c2, n = 16, 16, 3, 16, 3
    x = FeatureMap(rng.standard_normal((h, w, c1)))

    print("plain 3x3 convolution, 3 -> 16 channels, same padding")
    kernels = ConvKernelSet(rng.standard_normal((c2, n, n, c1)))
    observed = count_macs(lambda c: conv2d_direct(x, kernels, pad=same_pad(n),
                                                  counter=c))
    analytical = conv_flops(c1, c2, n, h, w)
    print(f"  counted while running: {observed:,} MACs")
    print(f"  closed-form:           {analytical:,} MACs")
    assert observed == analytical

    print("\nghost convolution with the same output shape (s=2, 3x3 cheap)")
    s, l = 2, 3
    m = c2 // s
    primary = ConvKernelSet(rng.standard_normal((m, n, n, c1)))
    cheap = rng.standard_normal(((s - 1) * m, l, l))
    observed_g = count_macs(lambda c: ghost_forward(x, primary, cheap, s=s,
                                                    pad=same_pad(n), counter=c))
    analytical_g = ghost_flops(c1, c2, n, h, w, s, l)
    print(f"  counted while running: {observed_g:,} MACs")
    print(f"  closed-form:           {analytical_g:,} MACs")
    assert observed_g == analytical_g
    print(f"  measured speedup vs the plain conv: {observed / observed_g:.3f}x")

    print("\nsqueeze-excitation gate on a 16x16x64 map (reduction 16)")
    c, r = 64, 16
    xg = FeatureMap(rng.standard_normal((h, w, c)))
    weights = SEWeights(
        c, r,
        fc1=rng.standard_normal((c // r, c)) * 0.1,
        fc2=rng.standard_normal((c, c // r)) * 0.1,
    )
    observed_se = count_macs(lambda cnt: se_forward(xg, weights, counter=cnt))
    analytical_se = se_flops(c, h, w, r)
    print(f"  counted while running: {observed_se:,} MACs")
    print(f"  closed-form:           {analytical_se:,} MACs")
    assert observed_se == analytical_se

    gated = se_forward(xg, weights)
    shrink = np.abs(gated.data).sum() / np.abs(xg.data).sum()
    print(f"  the sigmoid gate can only attenuate: |out|/|in| = {shrink:.3f} (< 1)")


if __name__ == "__main__":
    main()
