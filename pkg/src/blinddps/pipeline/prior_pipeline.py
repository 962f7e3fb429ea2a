"""
Unconditional ancestral sampling from a score model.
"""

import logging
from typing import Tuple

import numpy as np

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import DivergenceError
from ..guidance.tweedie import tweedie_denoise
from ..models.base import ScoreModel
from ..utils.rng import PURPOSE_INIT, as_streams
from .ancestral import ancestral_step

logger = logging.getLogger('blinddps')


def sample_prior(model: ScoreModel, sched: NoiseSchedule, shape: Tuple[int, ...], rng=None,
                 branch: str = 'x', final_noise: bool = False) -> np.ndarray:
    """
    Run the reverse chain without guidance.

    Args:
        model: Score model; shape may add a leading batch axis to its domain
        sched: Noise schedule
        shape: Output shape
        rng: Seed or RandomStreams
        branch: Random-stream branch, matching the variable name used by
            the guided samplers so that unguided runs coincide
        final_noise: Add √β_1 noise at the last step

    Returns:
        Sample v_0
    """
    streams = as_streams(rng)
    shape = tuple(shape)
    v = streams.normal(branch, sched.n_steps, shape, PURPOSE_INIT)
    for i in range(sched.n_steps, 0, -1):
        v_hat0 = tweedie_denoise(model, v, i, sched)
        z = streams.normal(branch, i, shape) if (i > 1 or final_noise) else None
        v = ancestral_step(v, v_hat0, i, sched, z, final_noise)
        if not np.all(np.isfinite(v)):
            logger.error(f"Prior chain diverged at step {i}")
            raise DivergenceError(f"Prior chain became non-finite at step {i}", step=i)
    return v
