"""Seeded synthetic corpora: oriented gratings, smooth textures and
two-object scenes."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .ingest import Image

BACKGROUND = 0.5


def grating(size: int, angle_deg: float, rng: np.random.Generator, period_range=(11.0, 13.0),
            contrast: float = 0.35, noise: float = 0.03, jitter_deg: float = 2.0) -> np.ndarray:
    """Sinusoidal grating whose stripes advance along ``angle_deg``.

    Period, phase and a small angle jitter are drawn from ``rng``; the
    additive noise is white noise blurred with sigma 1 px and scaled to
    standard deviation ``noise``.  Clipped to [0, 1].
    """
    period = rng.uniform(*period_range)
    phase = rng.uniform(0, 2 * np.pi)
    theta = np.deg2rad(angle_deg + rng.normal(0, jitter_deg))
    y, x = np.mgrid[0:size, 0:size]
    t = x * np.cos(theta) + y * np.sin(theta)
    # sd of unit white noise after a sigma=1 Gaussian blur is 1 / (2 sqrt(pi))
    grain = ndimage.gaussian_filter(rng.normal(0, 1, (size, size)), 1.0, mode="wrap") * 2 * np.sqrt(np.pi)
    img = 0.5 + contrast * np.sin(2 * np.pi * t / period + phase) + noise * grain
    return np.clip(img, 0.0, 1.0)


def texture_corpus(n_per_class: int, size: int = 128, seed: int = 0, n_classes: int = 4):
    """``n_per_class`` grating tiles for each of ``n_classes`` orientations.

    Returns ``(images, labels)`` in class-major order.
    """
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for c in range(n_classes):
        angle = 90.0 * c / max(n_classes - 1, 1)
        for _ in range(n_per_class):
            images.append(Image(grating(size, angle, rng)))
            labels.append(f"class{c}")
    return images, labels


def smooth_texture(size: int, rng: np.random.Generator, sigma: float = 2.0) -> np.ndarray:
    """Periodic Gaussian-smoothed noise rescaled to [0.1, 0.9]."""
    f = ndimage.gaussian_filter(rng.random((size, size)), sigma, mode="wrap")
    return (f - f.min()) / (f.max() - f.min()) * 0.8 + 0.1


def zoom2x(f: np.ndarray) -> np.ndarray:
    """Exact periodic 2x bilinear zoom: even samples copy ``f``, odd samples
    average their neighbours."""
    for axis in (0, 1):
        g = np.repeat(f, 2, axis=axis)
        mid = (f + np.roll(f, -1, axis=axis)) / 2
        if axis == 0:
            g[1::2] = mid
        else:
            g[:, 1::2] = mid
        f = g
    return f


def two_object_scene(obj_a: np.ndarray, obj_b: np.ndarray, size: int, rng: np.random.Generator,
                     diagonal: bool | None = None):
    """Paste two square textures into opposite quadrants of a flat scene.

    Returns the scene and the two object centres as ``(x, y)``.
    """
    scene = np.full((size, size), BACKGROUND)
    half = size // 2
    if diagonal is None:
        diagonal = bool(rng.integers(2))
    corners = [(0, 0), (half, half)] if diagonal else [(0, half), (half, 0)]
    centres = []
    for obj, (r0, c0) in zip((obj_a, obj_b), corners):
        m = obj.shape[0]
        slack = half - m
        r = r0 + int(rng.integers(slack + 1))
        c = c0 + int(rng.integers(slack + 1))
        scene[r : r + m, c : c + m] = obj
        centres.append((c + m / 2, r + m / 2))
    return Image(scene), centres


def one_object_scene(obj: np.ndarray, size: int, rng: np.random.Generator) -> Image:
    """One texture in a random quadrant of a flat scene, jittered like the
    objects of :func:`two_object_scene`."""
    scene = np.full((size, size), BACKGROUND)
    half = size // 2
    q = int(rng.integers(4))
    m = obj.shape[0]
    r = (q // 2) * half + int(rng.integers(half - m + 1))
    c = (q % 2) * half + int(rng.integers(half - m + 1))
    scene[r : r + m, c : c + m] = obj
    return Image(scene)


def scene_corpus(n_per_class: int, size: int = 256, obj_size: int = 112, seed: int = 0, n_classes: int = 4):
    """Single-object training scenes with the grating classes of
    :func:`texture_corpus`."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for c in range(n_classes):
        angle = 90.0 * c / max(n_classes - 1, 1)
        for _ in range(n_per_class):
            images.append(one_object_scene(grating(obj_size, angle, rng), size, rng))
            labels.append(f"class{c}")
    return images, labels
