"""Image -> C1 -> features plumbing shared by the library API and the CLI."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .ingest import Image
from .patches import FeatureVector, PatchBank, extract_features, learn_patch_bank
from .pooling import C1Stack, c1_pool
from .wavelet import WaveletConfig, approx_histogram, compute_s1


def image_c1(img: Image, cfg: WaveletConfig = WaveletConfig()) -> C1Stack:
    return c1_pool(compute_s1(img, cfg))


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        jobs = int(os.environ.get("WVC_JOBS", "1") or 1)
    return max(1, jobs)


def parallel_map(fn, items, jobs: int | None = None) -> list:
    """``list(map(fn, items))`` on a thread pool; output order follows input."""
    jobs = resolve_jobs(jobs)
    items = list(items)
    if jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def describe(img: Image, bank: PatchBank, cfg: WaveletConfig, hist_bins: int = 0,
             periodic: bool = False) -> tuple[FeatureVector, np.ndarray | None]:
    s1 = compute_s1(img, cfg)
    fv = extract_features(c1_pool(s1), bank, periodic=periodic)
    hist = approx_histogram(s1, hist_bins) if hist_bins else None
    return fv, hist


def fit(images, labels, cfg: WaveletConfig = WaveletConfig(), counts=None, select_k: int | None = 200,
        seed: int = 0, hist_bins: int = 0, hist_weight: float = 1.0, periodic: bool = False,
        jobs: int | None = None):
    """Learn a patch bank, select salient patches and build the 1-NN model.

    ``select_k=None`` (or a value >= the bank size) keeps every patch.
    Returns ``(model, selection_report)``.
    """
    from .classify import FeatureOptions, NNModel
    from .select import select_features

    images = list(images)
    s1s = parallel_map(lambda im: compute_s1(im, cfg), images, jobs)
    c1s = [c1_pool(s) for s in s1s]
    bank = learn_patch_bank(c1s, counts, seed)
    feats = np.array([fv.values for fv in parallel_map(lambda c: extract_features(c, bank, periodic), c1s, jobs)])
    k = len(bank) if select_k is None else min(select_k, len(bank))
    report = select_features(feats, k)
    mask = report.mask()
    bank = bank.with_selection(mask, report.variances)
    hists = np.array([approx_histogram(s, hist_bins) for s in s1s]) if hist_bins else None
    opts = FeatureOptions(hist_bins=hist_bins, hist_weight=hist_weight, periodic=periodic)
    model = NNModel(bank, feats[:, mask], tuple(labels), hists, cfg, opts)
    return model, report


def predict_images(model, images, jobs: int | None = None) -> list[tuple[str, float, int]]:
    from .classify import nn_predict

    opts = model.options

    def one(img):
        fv, hist = describe(img, model.bank, model.wavelet, opts.hist_bins, opts.periodic)
        return nn_predict(model, fv, hist)

    return parallel_map(one, images, jobs)
