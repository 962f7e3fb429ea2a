"""
BlindDPS samplers.

This module provides the blind deblurring sampler (parallel image and kernel
chains) and the turbulence sampler, which adds a tilt-field chain and warps
the image estimate before blurring.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..diffusion.schedule import NoiseSchedule
from ..guidance.config import GuidanceConfig
from ..models.base import ScoreModel
from ..operators.measurement import Measurement
from .engine import ReverseDiffusionEngine, SamplerOptions
from .result import SolveResult

logger = logging.getLogger('blinddps')


def _measurement_shape(y) -> Tuple[int, ...]:
    return np.shape(y.grid if isinstance(y, Measurement) else y)


def _truth(x_true, k_true, phi_true=None):
    truth = {}
    for name, value in (('x', x_true), ('k', k_true), ('phi', phi_true)):
        if value is not None:
            truth[name] = np.asarray(value, dtype=np.float64)
    return truth


class BlindDeblurPipeline(ReverseDiffusionEngine):
    """Joint image and kernel estimation."""

    method = 'blind-deblur'

    def solve(self, y: Measurement, image_model: ScoreModel, kernel_model: ScoreModel, rng=None,
              x_true: Optional[np.ndarray] = None, k_true: Optional[np.ndarray] = None) -> SolveResult:
        shapes = {'x': _measurement_shape(y), 'k': kernel_model.domain_shape}
        return self.run(y, {'x': image_model, 'k': kernel_model}, shapes, rng,
                        ground_truth=_truth(x_true, k_true))


class TurbulencePipeline(ReverseDiffusionEngine):
    """
    Joint image, kernel and tilt-field estimation.

    Without a tilt model the tilt field is held at zero, which reduces the
    sampler exactly to blind deblurring.
    """

    method = 'blind-turbulence'

    def solve(self, y: Measurement, image_model: ScoreModel, kernel_model: ScoreModel,
              tilt_model: Optional[ScoreModel], rng=None, x_true: Optional[np.ndarray] = None,
              k_true: Optional[np.ndarray] = None, phi_true: Optional[np.ndarray] = None) -> SolveResult:
        shape = _measurement_shape(y)
        models = {'x': image_model, 'k': kernel_model}
        shapes = {'x': shape, 'k': kernel_model.domain_shape}
        fixed = {}
        if tilt_model is None:
            fixed['phi'] = np.zeros(shape[:2] + (2,))
        else:
            models['phi'] = tilt_model
            shapes['phi'] = tilt_model.domain_shape
        return self.run(y, models, shapes, rng, fixed=fixed,
                        ground_truth=_truth(x_true, k_true, phi_true))


def blind_dps_deblur(y: Measurement, image_model: ScoreModel, kernel_model: ScoreModel,
                     sched: NoiseSchedule, config: Optional[GuidanceConfig] = None, rng=None,
                     options: Optional[SamplerOptions] = None, x_true: Optional[np.ndarray] = None,
                     k_true: Optional[np.ndarray] = None) -> SolveResult:
    """
    Blind deblurring by parallel image and kernel diffusion chains.

    Args:
        y: Blurred, noisy measurement
        image_model: Score model of images
        kernel_model: Score model of kernels (its domain fixes the kernel size)
        sched: Noise schedule shared by both chains
        config: Guidance settings
        rng: Seed or RandomStreams
        options: Loop settings
        x_true: Optional ground truth for trajectory MSEs
        k_true: Optional ground truth for trajectory MSEs

    Returns:
        SolveResult with x0, k0 = P_C(k̂0 at the last step) and the trajectory
    """
    return BlindDeblurPipeline(sched, config, options).solve(y, image_model, kernel_model, rng, x_true, k_true)


def blind_dps_turbulence(y: Measurement, image_model: ScoreModel, kernel_model: ScoreModel,
                         tilt_model: Optional[ScoreModel], sched: NoiseSchedule,
                         config: Optional[GuidanceConfig] = None, rng=None,
                         options: Optional[SamplerOptions] = None, x_true: Optional[np.ndarray] = None,
                         k_true: Optional[np.ndarray] = None,
                         phi_true: Optional[np.ndarray] = None) -> SolveResult:
    """Imaging through turbulence with three coupled chains; see TurbulencePipeline."""
    return TurbulencePipeline(sched, config, options).solve(
        y, image_model, kernel_model, tilt_model, rng, x_true, k_true, phi_true)
