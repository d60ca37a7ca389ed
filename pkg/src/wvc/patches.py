"""Patch bank learning and the S2/C2 stages."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DataError
from .pooling import C1Stack

DEFAULT_SIZES = (4, 8, 12, 16)
DEFAULT_COUNTS = {m: 250 for m in DEFAULT_SIZES}
MAX_RETRIES = 100
ZERO_NORM = 1e-9  # blocks from flat regions carry only rounding noise


@dataclass(frozen=True, eq=False)
class Patch:
    side: int
    values: np.ndarray  # (M, M, 3), unit L2 norm
    source: tuple[int, int, int, int]  # (image id, level, row, col)


@dataclass(frozen=True, eq=False)
class PatchBank:
    patches: tuple
    selection: np.ndarray
    rng_seed: int
    variances: np.ndarray | None = None

    def __post_init__(self):
        mask = np.asarray(self.selection, dtype=bool)
        if mask.shape != (len(self.patches),):
            raise ValueError("selection mask length must equal patch count")
        if not mask.any():
            raise ValueError("at least one patch must be selected")
        object.__setattr__(self, "selection", mask)

    def __len__(self) -> int:
        return len(self.patches)

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.selection)

    def with_selection(self, mask, variances=None) -> "PatchBank":
        return replace(self, selection=np.asarray(mask, dtype=bool), variances=variances)

    @cached_property
    def groups(self) -> list[tuple[int, np.ndarray, np.ndarray]]:
        """Selected patches grouped by side: ``(M, positions, (n, 3, M, M))``.

        ``positions`` index into the feature vector, not the bank.
        """
        sel = self.selected
        out = []
        for m in sorted({self.patches[i].side for i in sel}):
            pos = np.array([n for n, i in enumerate(sel) if self.patches[i].side == m])
            stack = np.stack([self.patches[sel[n]].values.transpose(2, 0, 1) for n in pos])
            out.append((m, pos, np.ascontiguousarray(stack)))
        return out


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """C2 values with the argmax bookkeeping for each selected patch.

    Patches that fit at no level carry value 0, ``fits`` False and -1 in
    every location field.
    """

    values: np.ndarray
    u: np.ndarray  # C1 column of the best placement
    v: np.ndarray  # C1 row
    level: np.ndarray
    image_x: np.ndarray
    image_y: np.ndarray
    fits: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_unfit(self) -> int:
        return int((~self.fits).sum())

    def points(self) -> np.ndarray:
        return np.column_stack([self.image_x, self.image_y]).astype(np.float64)


def _fits(shape, m: int) -> bool:
    return shape[0] >= m and shape[1] >= m


def learn_patch_bank(training_c1, counts=None, seed: int = 0) -> PatchBank:
    """Sample patches from random images, levels and positions.

    ``counts`` maps patch side to the number of patches of that side
    (default 250 each of 4, 8, 12, 16).
    """
    stacks = list(training_c1)
    if not stacks:
        raise DataError("no training stacks to learn patches from")
    counts = dict(DEFAULT_COUNTS if counts is None else counts)
    never = [m for m in counts if not any(_fits(c.level_shape(j), m) for c in stacks for j in range(1, c.levels + 1))]
    if never:
        raise DataError(f"patch sides {sorted(never)} fit no level of any training image")
    rng = np.random.default_rng(seed)
    patches = []
    for m, count in counts.items():
        for _ in range(count):
            for _attempt in range(MAX_RETRIES):
                img_id = int(rng.integers(len(stacks)))
                c1 = stacks[img_id]
                levels = [j for j in range(1, c1.levels + 1) if _fits(c1.level_shape(j), m)]
                if not levels:
                    continue
                j = levels[int(rng.integers(len(levels)))]
                h, w = c1.level_shape(j)
                r = int(rng.integers(h - m + 1))
                c = int(rng.integers(w - m + 1))
                block = c1.maps[j - 1][:, r : r + m, c : c + m]
                norm = np.linalg.norm(block)
                if norm > ZERO_NORM:
                    vals = np.ascontiguousarray((block / norm).transpose(1, 2, 0))
                    patches.append(Patch(m, vals, (img_id, j, r, c)))
                    break
            else:
                raise DataError(f"could not draw a non-zero {m}x{m} patch in {MAX_RETRIES} attempts")
    return PatchBank(tuple(patches), np.ones(len(patches), dtype=bool), seed)


def extract_features(c1: C1Stack, bank: PatchBank, periodic: bool = False) -> FeatureVector:
    """C2 = max over levels and placements of the patch/C1 inner product.

    Ties keep the smallest (level, row, column).
    """
    n = len(bank.selected)
    values = np.full(n, -np.inf)
    u = np.full(n, -1, dtype=np.int64)
    v = np.full(n, -1, dtype=np.int64)
    level = np.full(n, -1, dtype=np.int64)
    side = np.zeros(n, dtype=np.int64)
    for m, pos, stack in bank.groups:
        side[pos] = m
        for j in range(1, c1.levels + 1):
            if not _fits(c1.level_shape(j), m):
                continue
            best, rows, cols = kernels.correlate_max(c1.maps[j - 1], stack, periodic=periodic)
            better = best > values[pos]
            idx = pos[better]
            values[idx] = best[better]
            v[idx] = rows[better]
            u[idx] = cols[better]
            level[idx] = j
    fits = level > 0
    values[~fits] = 0.0
    h, w = c1.image_shape
    scale = np.where(fits, 1 << np.maximum(level, 0), 0)
    image_x = np.where(fits, np.clip(scale * (u + side // 2), 0, w - 1), -1)
    image_y = np.where(fits, np.clip(scale * (v + side // 2), 0, h - 1), -1)
    return FeatureVector(values, u, v, level, image_x, image_y, fits)
