#!/usr/bin/env python3
"""Bandwidth-reduction ratio versus ensemble accuracy, per target size.

Renders one evaluation corpus, then for each compressed-plane size runs
the cloud detector on the decompressed reconstruction (the mobile
detector always sees the raw frame) and reports the fused accuracy next
to the exact bandwidth-reduction ratio. The raw-path ensemble accuracy
is printed as the reference row.

Example:
    python3 scripts/run_compression_sweep.py --n 100 --seed 1
"""

import argparse
import sys

import numpy as np

from glucoread.codec import CodecConfig, bandwidth_ratio, compress, decompress
from glucoread.detector import CLOUD_PROFILE, MOBILE_PROFILE, detect
from glucoread.ensemble import EnsembleConfig, fuse
from glucoread.postprocess import PostprocessConfig
from glucoread.readout import finalize
from glucoread.synth.config import SynthConfig
from glucoread.synth.render import render_sample
from glucoread.synth.templates import default_templates
from glucoread.synth.transform import transform_sample

DEFAULT_SIZES = ((128, 64), (64, 64), (128, 128), (256, 256), (350, 350))


def parse_size(token: str):
    w, h = token.lower().split("x")
    return int(w), int(h)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument(
        "--sizes",
        type=parse_size,
        nargs="+",
        default=list(DEFAULT_SIZES),
        metavar="WxH",
    )
    args = parser.parse_args()

    templates = default_templates()
    cfg = SynthConfig(n_samples=args.n, seed=args.seed)
    ecfg, pcfg = EnsembleConfig(), PostprocessConfig()

    samples = []
    for i in range(args.n):
        rng = np.random.default_rng((args.seed, i))
        template = templates[int(rng.integers(0, len(templates)))]
        sample = render_sample(template, cfg, rng)
        samples.append(transform_sample(sample, cfg, "val", rng))

    mobiles = [detect(s.image, MOBILE_PROFILE) for s in samples]
    raw_hits = 0
    for s, m in zip(samples, mobiles):
        cloud = detect(s.image, CLOUD_PROFILE)
        raw_hits += finalize(fuse(cloud, m, ecfg), ecfg, pcfg).text == s.value_text
    print(f"{'size':>9}  {'ratio':>8}  {'accuracy':>8}")
    print(f"{'raw':>9}  {'1.00x':>8}  {raw_hits / args.n:>8.3f}")

    for w, h in args.sizes:
        codec = CodecConfig(out_width=w, out_height=h)
        hits = 0
        for s, m in zip(samples, mobiles):
            cloud = detect(decompress(compress(s.image, codec)), CLOUD_PROFILE)
            hits += finalize(fuse(cloud, m, ecfg), ecfg, pcfg).text == s.value_text
        ratio = bandwidth_ratio(
            samples[0].image.shape[1], samples[0].image.shape[0], w, h
        )
        print(f"{f'{w}x{h}':>9}  {float(ratio):>7.2f}x  {hits / args.n:>8.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
