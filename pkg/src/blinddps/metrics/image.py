"""
Image fidelity metrics.
"""

import numpy as np

from ..exceptions import ParameterError, ShapeError

DEFAULT_PEAK = 2.0


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"Cannot compare shapes {a.shape} and {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(x_est: np.ndarray, x_true: np.ndarray, peak: float = DEFAULT_PEAK) -> float:
    """
    Peak signal-to-noise ratio 10 log10(peak² / MSE) in dB.

    The peak comes from the declared data range ([−1, 1] gives 2.0). Equal
    inputs give +inf.
    """
    if peak <= 0:
        raise ParameterError(f"PSNR peak must be positive, got {peak}")
    err = mse(x_est, x_true)
    if err == 0.0:
        return float('inf')
    return float(10.0 * np.log10(peak ** 2 / err))
