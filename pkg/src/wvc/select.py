"""Salient-patch selection by C2 variance over the training set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True, eq=False)
class SelectionReport:
    variances: np.ndarray
    kept: np.ndarray  # patch indices, variance descending, ties by index
    k: int

    def mask(self) -> np.ndarray:
        m = np.zeros(len(self.variances), dtype=bool)
        m[self.kept] = True
        return m

    def to_csv(self) -> str:
        keep = self.mask()
        lines = ["patch_index,variance,kept"]
        lines += [f"{i},{float(v)!r},{int(keep[i])}" for i, v in enumerate(self.variances)]
        return "\n".join(lines) + "\n"


def select_features(training_features, k: int = 200) -> SelectionReport:
    """Keep the ``k`` columns with the largest population variance."""
    x = np.asarray(training_features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("feature selection needs at least 2 training images")
    if not 1 <= k <= x.shape[1]:
        raise ValueError(f"k must be in [1, {x.shape[1]}], got {k}")
    # sorting first makes the rounding, and so the ranking, independent of row order
    var = np.sort(x, axis=0).var(axis=0)
    order = np.lexsort((np.arange(len(var)), -var))
    return SelectionReport(var, order[:k].copy(), k)
