"""
Kernel similarity: maximum of normalized cross-correlation (MNC).
"""

import logging
from typing import Tuple

import numpy as np

from ..exceptions import ParameterError, ShapeError

logger = logging.getLogger('blinddps')


def pad_to_shape(k: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    """Centered zero padding of a kernel to a larger shape."""
    k = np.asarray(k, dtype=np.float64)
    if k.shape[0] > shape[0] or k.shape[1] > shape[1]:
        raise ShapeError(f"Cannot pad {k.shape} down to {shape}")
    top = (shape[0] - k.shape[0]) // 2
    left = (shape[1] - k.shape[1]) // 2
    out = np.zeros(shape)
    out[top:top + k.shape[0], left:left + k.shape[1]] = k
    return out


def mnc_with_flag(k_est: np.ndarray, k_true: np.ndarray) -> Tuple[float, bool]:
    """
    MNC and whether the kernels had to be padded to a common shape.

    Returns:
        (max over circular shifts of the normalized cross-correlation, padded flag)
    """
    a = np.asarray(k_est, dtype=np.float64)
    b = np.asarray(k_true, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"MNC compares 2-D kernels, got {a.shape} and {b.shape}")
    padded = a.shape != b.shape
    if padded:
        shape = (max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1]))
        logger.warning(f"Kernel shapes {a.shape} and {b.shape} differ; zero-padding both to {shape}")
        a, b = pad_to_shape(a, shape), pad_to_shape(b, shape)
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0.0:
        raise ParameterError("MNC is undefined for a zero kernel")
    corr = np.fft.ifft2(np.fft.fft2(a) * np.conj(np.fft.fft2(b))).real
    return float(corr.max() / norm), padded


def mnc(k_est: np.ndarray, k_true: np.ndarray) -> float:
    """Maximum of normalized circular cross-correlation between two kernels."""
    return mnc_with_flag(k_est, k_true)[0]
