"""
Non-blind diffusion posterior sampling with a known kernel.
"""

import logging
from typing import Optional

import numpy as np

from ..diffusion.schedule import NoiseSchedule
from ..guidance.config import GuidanceConfig
from ..models.base import ScoreModel
from ..operators.measurement import Measurement
from .engine import ReverseDiffusionEngine, SamplerOptions
from .result import SolveResult

logger = logging.getLogger('blinddps')


class DpsPipeline(ReverseDiffusionEngine):
    """Image chain only; the kernel is fixed."""

    method = 'dps'

    def solve(self, y: Measurement, k: np.ndarray, model: ScoreModel, rng=None,
              x_true: Optional[np.ndarray] = None) -> SolveResult:
        truth = {'k': k}
        if x_true is not None:
            truth['x'] = x_true
        return self.run(y, {'x': model}, {'x': np.shape(y.grid if isinstance(y, Measurement) else y)},
                        rng, fixed={'k': k}, ground_truth=truth)


def dps_nonblind(y: Measurement, k: np.ndarray, model: ScoreModel, sched: NoiseSchedule,
                 config: Optional[GuidanceConfig] = None, rng=None,
                 options: Optional[SamplerOptions] = None,
                 x_true: Optional[np.ndarray] = None) -> SolveResult:
    """Non-blind DPS; see DpsPipeline."""
    return DpsPipeline(sched, config, options).solve(y, k, model, rng, x_true)
