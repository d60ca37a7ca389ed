"""Wavelet/patch feature hierarchy (S1 -> C1 -> S2 -> C2) with variance
selection, 1-NN classification, attention feedback and the continuous-time
dynamics of the hierarchy.

Hot kernels run under numba when available; set ``WVC_BACKEND=numpy`` to
force the pure-numpy path.
"""

__version__ = "0.1.0"

from .classify import FeatureOptions, NNModel, nn_predict, roc_accuracy
from .errors import DataError, WidthMismatchError, WvcError
from .feedback import ClusterLabel, ClusterResult, feedback_classify, kmeans_cluster
from .ingest import (Image, decode_grayscale, gaussian_downsample, read_manifest, rescale_min_side, tile,
                     wav_to_log_spectrogram)
from .modelfile import load_model, save_model
from .patches import FeatureVector, PatchBank, extract_features, learn_patch_bank
from .pipeline import describe, fit, image_c1, predict_images
from .pooling import C1Stack, c1_pool
from .select import SelectionReport, select_features
from .wavelet import S1Stack, WaveletConfig, compute_s1, s1_normalize, swt_forward

__all__ = [
    "C1Stack", "ClusterLabel", "ClusterResult", "DataError", "FeatureOptions", "FeatureVector", "Image",
    "NNModel", "PatchBank", "S1Stack", "SelectionReport", "WaveletConfig", "WidthMismatchError", "WvcError",
    "c1_pool", "compute_s1", "decode_grayscale", "describe", "extract_features", "feedback_classify", "fit",
    "gaussian_downsample", "image_c1", "kmeans_cluster", "learn_patch_bank", "load_model", "nn_predict",
    "predict_images", "read_manifest", "rescale_min_side", "roc_accuracy", "s1_normalize", "save_model",
    "select_features", "swt_forward", "tile", "wav_to_log_spectrogram",
]
