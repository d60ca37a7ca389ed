"""Time the hot kernels under both backends.

    python benchmarks/bench_kernels.py [--repeat N] [--size S]

Each kernel is called once per backend before timing so numba compile
time stays out of the numbers.  Outputs are compared between backends.
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from wvc import kernels
from wvc._accel import HAVE_NUMBA
from wvc.synth import texture_corpus
from wvc.pipeline import image_c1
from wvc.patches import extract_features, learn_patch_bank
from wvc.wavelet import LOWPASS


def _time(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=256)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    img = rng.random((args.size, args.size))
    maps = rng.random((3, args.size // 4, args.size // 4))
    pats = rng.random((50, 3, 8, 8))
    images, _ = texture_corpus(2, 128, seed=0)
    c1s = [image_c1(im) for im in images]
    bank = learn_patch_bank(c1s, seed=0)

    cases = {
        "atrous rows (d=4)": lambda: kernels.atrous_filter(img, LOWPASS, 4, 1),
        "atrous cols (d=4)": lambda: kernels.atrous_filter(img, LOWPASS, 4, 0),
        "block max (b=4)": lambda: kernels.block_max(img, 4),
        "correlate_max 50x8x8": lambda: kernels.correlate_max(maps, pats),
        "extract_features 1000": lambda: extract_features(c1s[0], bank),
    }
    backends = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    saved = os.environ.get("WVC_BACKEND")
    results, outputs = {}, {}
    try:
        for be in backends:
            os.environ["WVC_BACKEND"] = be
            for name, fn in cases.items():
                results[name, be] = _time(fn, args.repeat)
                outputs[name, be] = fn()
    finally:
        if saved is None:
            os.environ.pop("WVC_BACKEND", None)
        else:
            os.environ["WVC_BACKEND"] = saved

    print(f"{'kernel':<24}" + "".join(f"{be:>12}" for be in backends) + ("     speedup  max|diff|" if len(backends) == 2 else ""))
    for name in cases:
        row = f"{name:<24}" + "".join(f"{results[name, be] * 1e3:>10.2f}ms" for be in backends)
        if len(backends) == 2:
            a, b = outputs[name, "numba"], outputs[name, "numpy"]
            if hasattr(a, "values"):
                a, b = a.values, b.values
            elif isinstance(a, tuple):
                a, b = a[0], b[0]
            diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            row += f"  {results[name, 'numpy'] / results[name, 'numba']:>9.2f}x  {diff:.1e}"
        print(row)


if __name__ == "__main__":
    main()
