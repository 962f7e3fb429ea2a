"""
Gaussian measurement channel.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exceptions import ParameterError, ShapeError
from ..utils.rng import as_generator
from .convolution import convolve
from .warp import tilt_warp

logger = logging.getLogger('blinddps')


@dataclass
class Measurement:
    """Degraded observation y and the noise level it was generated with."""

    grid: np.ndarray
    noise_std: float

    @property
    def shape(self):
        return self.grid.shape


def forward_model(x: np.ndarray, k: np.ndarray, phi: Optional[np.ndarray] = None) -> np.ndarray:
    """Noiseless forward model k ∗ x or k ∗ T_φ(x)."""
    if phi is not None:
        x = tilt_warp(x, phi)
    return convolve(x, k)


def degrade(x: np.ndarray, k: np.ndarray, phi: Optional[np.ndarray], sigma: float, rng) -> Measurement:
    """
    Simulate y = k ∗ x + n or y = k ∗ T_φ(x) + n with n iid N(0, σ²).

    Args:
        x: Clean image
        k: Blur kernel
        phi: Optional tilt field
        sigma: Noise standard deviation
        rng: Generator, RandomStreams or seed (branch 'measurement')

    Returns:
        Measurement
    """
    if sigma < 0:
        raise ParameterError(f"Noise level must be non-negative, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    if phi is not None and np.shape(phi)[:2] != x.shape[:2]:
        raise ShapeError(f"Tilt field {np.shape(phi)} does not match image {x.shape}")
    clean = forward_model(x, k, phi)
    noise = as_generator(rng, branch='measurement').standard_normal(clean.shape)
    return Measurement(clean + sigma * noise, float(sigma))
