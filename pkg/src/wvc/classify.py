"""1-NN classification over C2 features and the ROC accuracy measure."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import WidthMismatchError
from .patches import FeatureVector, PatchBank
from .wavelet import WaveletConfig

FORMAT_VERSION = 1


@dataclass(frozen=True)
class FeatureOptions:
    hist_bins: int = 0  # 0 disables the approximation histogram
    hist_weight: float = 1.0
    periodic: bool = False


@dataclass(frozen=True, eq=False)
class NNModel:
    bank: PatchBank
    train_features: np.ndarray  # (rows, selected patches)
    labels: tuple
    train_hists: np.ndarray | None = None
    wavelet: WaveletConfig = WaveletConfig()
    options: FeatureOptions = FeatureOptions()
    format_version: int = FORMAT_VERSION
    _stats: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        # C order keeps reductions bit-identical to a model reloaded from disk
        f = np.ascontiguousarray(self.train_features, dtype=np.float64)
        object.__setattr__(self, "train_features", f)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if f.ndim != 2 or f.shape[0] != len(self.labels) or f.shape[0] == 0:
            raise ValueError("feature rows and labels disagree")
        if f.shape[1] != len(self.bank.selected):
            raise WidthMismatchError(
                f"width mismatch: {f.shape[1]} feature columns but {len(self.bank.selected)} selected patches"
            )
        if self.train_hists is not None:
            h = np.ascontiguousarray(self.train_hists, dtype=np.float64)
            object.__setattr__(self, "train_hists", h)
            if h.shape[0] != f.shape[0]:
                raise ValueError("histogram rows and labels disagree")
        if (self.train_hists is None) != (self.options.hist_bins == 0):
            raise ValueError("histograms present iff hist_bins > 0")

    @property
    def has_hist(self) -> bool:
        return self.train_hists is not None

    def _zstats(self, name: str, x: np.ndarray):
        if name not in self._stats:
            mu = x.mean(axis=0)
            sd = x.std(axis=0)
            sd[sd == 0] = 1.0
            self._stats[name] = (mu, sd)
        return self._stats[name]

    def embedded_training(self) -> np.ndarray:
        """Training rows in the z-scored space used for distances."""
        if "emb" in self._stats:
            return self._stats["emb"]
        mu, sd = self._zstats("c2", self.train_features)
        parts = [(self.train_features - mu) / sd]
        if self.has_hist:
            hmu, hsd = self._zstats("hist", self.train_hists)
            parts.append(self.options.hist_weight * (self.train_hists - hmu) / hsd)
        self._stats["emb"] = np.hstack(parts)
        return self._stats["emb"]

    def embed(self, values, hist=None, columns=None) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        mu, sd = self._zstats("c2", self.train_features)
        if columns is not None:
            mu, sd = mu[columns], sd[columns]
        if values.shape != mu.shape:
            raise WidthMismatchError(f"width mismatch: feature has {values.shape[0]} values, model expects {mu.shape[0]}")
        parts = [(values - mu) / sd]
        if hist is not None:
            hist = np.asarray(hist, dtype=np.float64)
            hmu, hsd = self._zstats("hist", self.train_hists)
            if hist.shape != hmu.shape:
                raise WidthMismatchError(f"width mismatch: histogram has {hist.shape[0]} bins, model expects {hmu.shape[0]}")
            parts.append(self.options.hist_weight * (hist - hmu) / hsd)
        return np.concatenate(parts)


def nearest(train: np.ndarray, query: np.ndarray) -> tuple[int, float]:
    """Index and Euclidean distance of the closest row; first row wins ties."""
    d2 = ((train - query) ** 2).sum(axis=1)
    i = int(np.argmin(d2))
    return i, float(np.sqrt(d2[i]))


def nn_predict(model: NNModel, feature, hist=None) -> tuple[str, float, int]:
    """Return ``(label, distance, neighbour row)``."""
    values = feature.values if isinstance(feature, FeatureVector) else feature
    if model.has_hist != (hist is not None):
        raise WidthMismatchError(
            "width mismatch: model stores histograms but none was given" if model.has_hist
            else "width mismatch: model has no histogram block"
        )
    q = model.embed(values, hist)
    i, d = nearest(model.embedded_training(), q)
    return model.labels[i], d, i


def roc_accuracy(false_positive_rate: float, true_positive_rate: float, positive_proportion: float) -> float:
    """R = 1 - ((1 - p) x + p (1 - y))."""
    for name, val in (("false_positive_rate", false_positive_rate), ("true_positive_rate", true_positive_rate),
                      ("positive_proportion", positive_proportion)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {val}")
    x, y, p = false_positive_rate, true_positive_rate, positive_proportion
    return 1 - ((1 - p) * x + p * (1 - y))
