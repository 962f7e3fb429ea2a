"""
Circular 2-D convolution and its adjoints.

The kernel is zero-padded to the image size and its center pixel
(⌈h/2⌉ − 1, ⌈w/2⌉ − 1) is rolled to the origin before the frequency-domain
product. Images are H×W or H×W×C; kernels are h×w and act on every channel.
"""

import logging
from typing import Tuple

import numpy as np

from ..exceptions import ShapeError

logger = logging.getLogger('blinddps')


def kernel_center(kernel_shape: Tuple[int, int]) -> Tuple[int, int]:
    h, w = kernel_shape
    return (h + 1) // 2 - 1, (w + 1) // 2 - 1


def _check_shapes(image_shape: Tuple[int, ...], kernel_shape: Tuple[int, ...]) -> None:
    if len(image_shape) not in (2, 3):
        raise ShapeError(f"Images must be H×W or H×W×C, got {image_shape}")
    if len(kernel_shape) != 2:
        raise ShapeError(f"Kernels must be h×w, got {kernel_shape}")
    if kernel_shape[0] > image_shape[0] or kernel_shape[1] > image_shape[1]:
        raise ShapeError(f"Kernel {kernel_shape} larger than image {image_shape[:2]}")


def pad_kernel(k: np.ndarray, image_hw: Tuple[int, int]) -> np.ndarray:
    """Zero-pad a kernel to image size with its center at the origin."""
    k = np.asarray(k, dtype=np.float64)
    padded = np.zeros(image_hw)
    padded[:k.shape[0], :k.shape[1]] = k
    ch, cw = kernel_center(k.shape)
    return np.roll(padded, (-ch, -cw), axis=(0, 1))


def _kernel_spectrum(k: np.ndarray, image_shape: Tuple[int, ...]) -> np.ndarray:
    spectrum = np.fft.rfft2(pad_kernel(k, image_shape[:2]))
    return spectrum[:, :, None] if len(image_shape) == 3 else spectrum


def _fft_product(x: np.ndarray, spectrum: np.ndarray) -> np.ndarray:
    return np.fft.irfft2(np.fft.rfft2(x, axes=(0, 1)) * spectrum, s=x.shape[:2], axes=(0, 1))


def convolve(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    """
    Circular convolution k ∗ x.

    Args:
        x: H×W or H×W×C image
        k: h×w kernel with h ≤ H, w ≤ W

    Returns:
        Array with the shape of x

    Raises:
        ShapeError: If the kernel does not fit the image
    """
    x = np.asarray(x, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    _check_shapes(x.shape, k.shape)
    return _fft_product(x, _kernel_spectrum(k, x.shape))


def convolve_adjoint(v: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Adjoint of x ↦ k ∗ x, i.e. circular correlation with k."""
    v = np.asarray(v, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    _check_shapes(v.shape, k.shape)
    return _fft_product(v, np.conj(_kernel_spectrum(k, v.shape)))


def convolve_adjoint_kernel(v: np.ndarray, x: np.ndarray, kernel_shape: Tuple[int, int]) -> np.ndarray:
    """
    Adjoint of k ↦ k ∗ x.

    Correlates v with x (summing over channels), undoes the kernel centering
    and crops to the kernel support.

    Args:
        v: Array with the image shape
        x: Image
        kernel_shape: (h, w)

    Returns:
        h×w array
    """
    v = np.asarray(v, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    kernel_shape = tuple(int(s) for s in kernel_shape)
    _check_shapes(x.shape, kernel_shape)
    if v.shape != x.shape:
        raise ShapeError(f"Cotangent shape {v.shape} does not match image shape {x.shape}")
    spectrum = np.fft.rfft2(v, axes=(0, 1)) * np.conj(np.fft.rfft2(x, axes=(0, 1)))
    if x.ndim == 3:
        spectrum = spectrum.sum(axis=2)
    corr = np.fft.irfft2(spectrum, s=x.shape[:2])
    ch, cw = kernel_center(kernel_shape)
    return np.roll(corr, (ch, cw), axis=(0, 1))[:kernel_shape[0], :kernel_shape[1]]


def circulant_matrix(k: np.ndarray, image_shape: Tuple[int, int]) -> np.ndarray:
    """
    Dense (HW × HW) matrix of x ↦ k ∗ x on flattened H×W images.

    Entry [p, q] is the padded kernel at (p − q) mod (H, W).
    """
    k = np.asarray(k, dtype=np.float64)
    image_shape = tuple(int(s) for s in image_shape)
    _check_shapes(image_shape, k.shape)
    H, W = image_shape
    kpad = pad_kernel(k, (H, W))
    rows, cols = np.divmod(np.arange(H * W), W)
    return kpad[(rows[:, None] - rows[None, :]) % H, (cols[:, None] - cols[None, :]) % W]


def image_matrix(x: np.ndarray, kernel_shape: Tuple[int, int]) -> np.ndarray:
    """
    Dense (HW × hw) matrix of k ↦ k ∗ x for a fixed H×W image.

    Column (a, b) holds x shifted by the offset of kernel tap (a, b) from the
    kernel center.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"Dense image operators need an H×W image, got {x.shape}")
    kernel_shape = tuple(int(s) for s in kernel_shape)
    _check_shapes(x.shape, kernel_shape)
    H, W = x.shape
    h, w = kernel_shape
    ch, cw = kernel_center(kernel_shape)
    rows, cols = np.divmod(np.arange(H * W), W)
    taps_a, taps_b = np.divmod(np.arange(h * w), w)
    return x[(rows[:, None] - taps_a[None, :] + ch) % H, (cols[:, None] - taps_b[None, :] + cw) % W]


def spectral_norm(k: np.ndarray, image_shape: Tuple[int, int]) -> float:
    """Operator 2-norm of x ↦ k ∗ x, the largest magnitude of the padded kernel's spectrum."""
    return float(np.max(np.abs(np.fft.fft2(pad_kernel(k, tuple(image_shape[:2]))))))
