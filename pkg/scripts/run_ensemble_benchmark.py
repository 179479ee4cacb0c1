#!/usr/bin/env python3
"""Ensemble-vs-single-detector benchmark on the synthetic corpus.

For each seed, renders an evaluation corpus (every sample drawn from an
rng keyed (seed, index)) and reports exact-match accuracy for the
mobile detector, the cloud detector and their fusion.

Example:
    python3 scripts/run_ensemble_benchmark.py --n 300 --seeds 1 2 3 4 5
"""

import argparse
import sys
import time

import numpy as np

from glucoread.detector import CLOUD_PROFILE, MOBILE_PROFILE, detect
from glucoread.ensemble import EnsembleConfig, fuse
from glucoread.postprocess import PostprocessConfig
from glucoread.readout import finalize
from glucoread.synth.config import SynthConfig
from glucoread.synth.render import render_sample
from glucoread.synth.templates import default_templates
from glucoread.synth.transform import transform_sample


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=300, help="samples per seed")
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    parser.add_argument("--verbose", action="store_true", help="print every miss")
    args = parser.parse_args()

    templates = default_templates()
    ecfg, pcfg = EnsembleConfig(), PostprocessConfig()
    print(f"{'seed':>4}  {'mobile':>7}  {'cloud':>7}  {'ensemble':>8}  {'margin':>7}")
    for seed in args.seeds:
        cfg = SynthConfig(n_samples=args.n, seed=seed)
        started = time.time()
        hits = {"mobile": 0, "cloud": 0, "ensemble": 0}
        for i in range(args.n):
            rng = np.random.default_rng((seed, i))
            template = templates[int(rng.integers(0, len(templates)))]
            sample = render_sample(template, cfg, rng)
            sample = transform_sample(sample, cfg, "val", rng)
            mobile = detect(sample.image, MOBILE_PROFILE)
            cloud = detect(sample.image, CLOUD_PROFILE)
            reads = {
                "mobile": finalize(mobile, ecfg, pcfg).text,
                "cloud": finalize(cloud, ecfg, pcfg).text,
                "ensemble": finalize(fuse(cloud, mobile, ecfg), ecfg, pcfg).text,
            }
            for name, text in reads.items():
                hits[name] += text == sample.value_text
            if args.verbose and reads["ensemble"] != sample.value_text:
                print(f"  miss i={i}: truth={sample.value_text!r} reads={reads}")
        acc = {k: v / args.n for k, v in hits.items()}
        margin = acc["ensemble"] - max(acc["mobile"], acc["cloud"])
        print(
            f"{seed:>4}  {acc['mobile']:>7.3f}  {acc['cloud']:>7.3f}  "
            f"{acc['ensemble']:>8.3f}  {margin * 100:>+6.1f}pp"
            f"   ({time.time() - started:.0f}s)"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
