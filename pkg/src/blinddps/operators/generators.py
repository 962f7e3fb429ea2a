"""
Random generators for blur kernels and tilt fields.

This module provides isotropic Gaussian kernels, random motion kernels
(random-walk trajectory, cubic-spline interpolation, bilinear stamping) and
smooth random tilt fields.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import gaussian_filter, map_coordinates

from ..exceptions import ParameterError
from ..utils.rng import as_generator

logger = logging.getLogger('blinddps')

MOTION_CONTROL_POINTS = 8
MOTION_SAMPLES_PER_PIXEL = 20


def gen_gaussian_kernel(std: float, size: int) -> np.ndarray:
    """
    Isotropic Gaussian kernel centered on the grid, normalized to sum 1.

    Args:
        std: Standard deviation in pixels
        size: Side length

    Returns:
        size×size kernel
    """
    if std <= 0:
        raise ParameterError(f"Gaussian kernel std must be positive, got {std}")
    if int(size) != size or size < 1:
        raise ParameterError(f"Kernel size must be a positive integer, got {size}")
    size = int(size)
    offsets = np.arange(size) - (size - 1) / 2.0
    profile = np.exp(-offsets ** 2 / (2.0 * std ** 2))
    kernel = np.outer(profile, profile)
    return kernel / kernel.sum()


def _stamp(points: np.ndarray, size: int) -> np.ndarray:
    """Anti-aliased accumulation of (row, col) points onto a size×size grid."""
    grid = np.zeros((size, size))
    rows = np.clip(points[:, 0], 0.0, size - 1.0)
    cols = np.clip(points[:, 1], 0.0, size - 1.0)
    r0 = np.floor(rows).astype(np.intp)
    c0 = np.floor(cols).astype(np.intp)
    fr, fc = rows - r0, cols - c0
    r1 = np.minimum(r0 + 1, size - 1)
    c1 = np.minimum(c0 + 1, size - 1)
    np.add.at(grid, (r0, c0), (1 - fr) * (1 - fc))
    np.add.at(grid, (r0, c1), (1 - fr) * fc)
    np.add.at(grid, (r1, c0), fr * (1 - fc))
    np.add.at(grid, (r1, c1), fr * fc)
    return grid


def motion_trajectory(intensity: float, size: int, rng) -> np.ndarray:
    """
    Smooth random camera trajectory inside a size×size box.

    A random walk with heading jitter proportional to the intensity is
    interpolated by a cubic spline. Path length grows with the intensity;
    the path is centered on the grid and shrunk if it leaves the box.

    Returns:
        (n, 2) array of (row, col) positions
    """
    gen = as_generator(rng)
    heading = gen.uniform(0.0, 2.0 * np.pi)
    turns = intensity * gen.normal(0.0, np.pi / 2.0, size=MOTION_CONTROL_POINTS - 1)
    headings = heading + np.concatenate([[0.0], np.cumsum(turns[:-1])])
    step = max(size - 1, 1) * (0.3 + 0.7 * intensity) / (MOTION_CONTROL_POINTS - 1)
    moves = step * np.stack([np.sin(headings), np.cos(headings)], axis=1)
    control = np.vstack([np.zeros((1, 2)), np.cumsum(moves, axis=0)])

    spline = CubicSpline(np.arange(MOTION_CONTROL_POINTS), control, axis=0)
    t = np.linspace(0.0, MOTION_CONTROL_POINTS - 1.0, MOTION_SAMPLES_PER_PIXEL * size)
    path = spline(t)

    lo, hi = path.min(axis=0), path.max(axis=0)
    extent = float(np.max(hi - lo))
    if extent > size - 1 and extent > 0:
        path = path * (size - 1) / extent
        lo, hi = path.min(axis=0), path.max(axis=0)
    return path - (lo + hi) / 2.0 + (size - 1) / 2.0


def gen_motion_kernel(intensity: float, size: int, rng) -> np.ndarray:
    """
    Random motion-blur kernel.

    Args:
        intensity: Trajectory irregularity in [0, 1]
        size: Side length
        rng: Generator, RandomStreams or seed

    Returns:
        size×size nonnegative kernel summing to 1
    """
    if not 0.0 <= intensity <= 1.0:
        raise ParameterError(f"Motion intensity must lie in [0, 1], got {intensity}")
    if int(size) != size or size < 1:
        raise ParameterError(f"Kernel size must be a positive integer, got {size}")
    size = int(size)
    if size == 1:
        return np.ones((1, 1))
    kernel = _stamp(motion_trajectory(intensity, size, rng), size)
    return kernel / kernel.sum()


def gen_tilt_field(grid_n: int = 32, smooth_std: float = 1.0, amplitude: float = 1.0,
                   out_shape: Tuple[int, int] = (64, 64), rng=None) -> np.ndarray:
    """
    Smooth random tilt field.

    Draws iid N(0, 1) displacement pairs on a grid_n×grid_n grid, smooths
    each channel with a periodic Gaussian filter, bilinearly upsamples to
    out_shape and rescales so that the largest displacement norm equals
    the amplitude.

    Args:
        grid_n: Coarse grid size (at least 2)
        smooth_std: Smoothing std in coarse-grid units (0 disables smoothing)
        amplitude: Largest displacement norm, in pixels
        out_shape: (H, W) of the field
        rng: Generator, RandomStreams or seed

    Returns:
        H×W×2 field (dx, dy)
    """
    if int(grid_n) != grid_n or grid_n < 2:
        raise ParameterError(f"Tilt grid size must be an integer ≥ 2, got {grid_n}")
    if smooth_std < 0 or amplitude < 0:
        raise ParameterError("Tilt smoothing and amplitude must be non-negative")
    H, W = (int(s) for s in out_shape)
    gen = as_generator(0 if rng is None else rng)
    coarse = gen.standard_normal((int(grid_n), int(grid_n), 2))
    if smooth_std > 0:
        coarse = np.stack([gaussian_filter(coarse[:, :, c], smooth_std, mode='wrap') for c in range(2)], axis=-1)

    rows = np.linspace(0.0, grid_n - 1.0, H)
    cols = np.linspace(0.0, grid_n - 1.0, W)
    coords = np.meshgrid(rows, cols, indexing='ij')
    field = np.stack([map_coordinates(coarse[:, :, c], coords, order=1, mode='nearest') for c in range(2)],
                     axis=-1)

    peak = float(np.max(np.hypot(field[:, :, 0], field[:, :, 1])))
    if amplitude == 0 or peak == 0:
        return np.zeros((H, W, 2))
    return field * (amplitude / peak)


def clamp_tilt(phi: np.ndarray, max_displacement: Optional[float]) -> np.ndarray:
    """Scale down displacement vectors longer than max_displacement."""
    if max_displacement is None:
        return phi
    norms = np.hypot(phi[:, :, 0], phi[:, :, 1])
    too_long = norms > max_displacement
    if not np.any(too_long):
        return phi
    logger.warning(f"Clamping {int(too_long.sum())} tilt vectors to {max_displacement} px")
    scale = np.where(too_long, max_displacement / np.maximum(norms, 1e-300), 1.0)
    return phi * scale[:, :, None]
