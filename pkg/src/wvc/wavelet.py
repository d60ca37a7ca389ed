"""Undecimated 2-D wavelet transform with CDF 9/7 filters and the
local-energy normalization that turns raw coefficients into S1 maps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import DataError
from .ingest import Image

# JPEG2000 9/7 analysis filters (lowpass DC gain 1, highpass Nyquist gain 2),
# listed from the centre tap outwards.
_LOW_HALF = (
    0.6029490182363579,
    0.2668641184428723,
    -0.07822326652898785,
    -0.01686411844287495,
    0.02674875741080976,
)
_HIGH_HALF = (
    1.115087052456994,
    -0.5912717631142470,
    -0.05754352622849957,
    0.09127176311424948,
)


def _symmetric(half) -> np.ndarray:
    return np.array(half[:0:-1] + half, dtype=np.float64)


LOWPASS = _symmetric(_LOW_HALF)
HIGHPASS = _symmetric(_HIGH_HALF)

if abs(LOWPASS.sum() - 1.0) > 1e-9 or abs(HIGHPASS.sum()) > 1e-9:
    raise RuntimeError("CDF 9/7 filter table failed its moment check")

ORIENTATIONS = ("horizontal", "vertical", "diagonal")
MAX_LEVELS = 6


@dataclass(frozen=True)
class WaveletConfig:
    levels: int = 3
    epsilon: float = 1e-8

    def __post_init__(self):
        if not 1 <= self.levels <= MAX_LEVELS:
            raise ValueError(f"levels must be in [1, {MAX_LEVELS}], got {self.levels}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class WaveletCoefficients:
    """Raw transform output.

    ``details[j-1, k]`` is Wf at level j and orientation k, already scaled so
    the equivalent 2-D wavelet has unit L2 norm; ``approx`` is A_J.
    """

    details: np.ndarray
    approx: np.ndarray
    levels: int


@dataclass(frozen=True)
class S1Stack:
    maps: np.ndarray  # (J, 3, H, W), all >= 0
    approx: np.ndarray  # (H, W)
    levels: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.maps.shape[2], self.maps.shape[3]


# ---------------------------------------------------------------------------
# equivalent filters


@lru_cache(maxsize=None)
def equivalent_filters(level: int) -> tuple[np.ndarray, np.ndarray]:
    """1-D equivalent lowpass and highpass filters at ``level``.

    Obtained as the impulse response of the same periodic cascade the
    transform runs, trimmed to the non-zero support.  Both are symmetric
    and odd-length, centred on the middle sample.
    """
    n = 16 << level
    centre = n // 2
    x = np.zeros((1, n))
    x[0, centre] = 1.0
    approx = x
    for j in range(1, level + 1):
        d = 1 << (j - 1)
        low = kernels.atrous_filter(approx, LOWPASS, d, axis=1)
        high = kernels.atrous_filter(approx, HIGHPASS, d, axis=1)
        approx = low

    def trim(resp):
        nz = np.flatnonzero(resp[0])
        half = max(centre - nz[0], nz[-1] - centre)
        return resp[0, centre - half : centre + half + 1].copy()

    return trim(low), trim(high)


def support_lengths(level: int) -> tuple[int, int]:
    """Support length of the equivalent (lowpass, highpass) filters."""
    low, high = equivalent_filters(level)
    return len(low), len(high)


@lru_cache(maxsize=None)
def _axis_norms(level: int) -> tuple[float, float]:
    low, high = equivalent_filters(level)
    return float(np.linalg.norm(low)), float(np.linalg.norm(high))


def orientation_axes(k: int) -> tuple[str, str]:
    """Filter type ('low' or 'high') applied along (rows, columns)."""
    return (("high", "low"), ("low", "high"), ("high", "high"))[k]


# ---------------------------------------------------------------------------
# transform


def swt_forward(img: Image, cfg: WaveletConfig = WaveletConfig()) -> WaveletCoefficients:
    """Periodic a-trous transform, full resolution at every level."""
    f = img.data
    need = 2 * (1 << cfg.levels)
    if min(f.shape) < need:
        raise DataError(
            f"image {img.width}x{img.height} too small for {cfg.levels} levels (min side {need})"
        )
    h, w = f.shape
    details = np.empty((cfg.levels, 3, h, w))
    approx = f
    for j in range(1, cfg.levels + 1):
        d = 1 << (j - 1)
        low_x = kernels.atrous_filter(approx, LOWPASS, d, axis=1)
        high_x = kernels.atrous_filter(approx, HIGHPASS, d, axis=1)
        nlow, nhigh = _axis_norms(j)
        details[j - 1, 0] = kernels.atrous_filter(low_x, HIGHPASS, d, axis=0) / (nhigh * nlow)
        details[j - 1, 1] = kernels.atrous_filter(high_x, LOWPASS, d, axis=0) / (nlow * nhigh)
        details[j - 1, 2] = kernels.atrous_filter(high_x, HIGHPASS, d, axis=0) / (nhigh * nhigh)
        approx = kernels.atrous_filter(low_x, LOWPASS, d, axis=0)
    return WaveletCoefficients(details, approx, cfg.levels)


def _periodic_window_sum(x: np.ndarray, length: int, axis: int) -> np.ndarray:
    """Sum of ``x`` over a centred window of odd ``length`` along ``axis``,
    wrapping as many times as needed."""
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    r = length // 2
    cs = np.concatenate([np.zeros(x.shape[:-1] + (1,)), np.cumsum(x, axis=-1)], axis=-1)
    total = cs[..., -1:]

    def prefix(idx):
        q, rem = np.divmod(idx, n)
        return q * total + cs[..., rem]

    i = np.arange(n)
    out = prefix(i + r + 1) - prefix(i - r)
    return np.moveaxis(out, -1, axis)


def local_energy_norm(f: np.ndarray, level: int, k: int) -> np.ndarray:
    """L2 norm of ``f`` over the equivalent filter's support rectangle
    centred at every pixel (periodic)."""
    lengths = dict(zip(("low", "high"), support_lengths(level)))
    ay, ax = orientation_axes(k)
    sq = f * f
    s = _periodic_window_sum(_periodic_window_sum(sq, lengths[ax], axis=1), lengths[ay], axis=0)
    return np.sqrt(np.maximum(s, 0.0))


def s1_normalize(raw: WaveletCoefficients, img: Image, cfg: WaveletConfig = WaveletConfig()) -> S1Stack:
    """S1 = |Wf| / (windowed image norm + epsilon)."""
    if raw.details.shape[2:] != img.data.shape or raw.levels != cfg.levels:
        raise ValueError("coefficients do not belong to this image/config")
    maps = np.empty_like(raw.details)
    for j in range(1, cfg.levels + 1):
        for k in range(3):
            energy = local_energy_norm(img.data, j, k)
            maps[j - 1, k] = np.abs(raw.details[j - 1, k]) / (energy + cfg.epsilon)
    return S1Stack(maps, raw.approx, cfg.levels)


def compute_s1(img: Image, cfg: WaveletConfig = WaveletConfig()) -> S1Stack:
    return s1_normalize(swt_forward(img, cfg), img, cfg)


def approx_histogram(s1: S1Stack, bins: int = 64) -> np.ndarray:
    """Equal-width histogram of A_J over its own range, summing to 1."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    a = s1.approx.ravel()
    lo, hi = a.min(), a.max()
    hist = np.zeros(bins)
    if hi <= lo:
        hist[0] = 1.0
        return hist
    idx = np.minimum(((a - lo) / (hi - lo) * bins).astype(np.int64), bins - 1)
    np.add.at(hist, idx, 1.0)
    return hist / a.size
