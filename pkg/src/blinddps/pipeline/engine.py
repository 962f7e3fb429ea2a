"""
Shared reverse-diffusion loop for all guided samplers.

This module provides the ReverseDiffusionEngine, which runs any number of
coupled chains. Each variable is either diffused (it has a score model and
takes ancestral steps), guided only (no prior; plain gradient updates) or
fixed. The chains interact only through the shared measurement residual.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import DivergenceError, ParameterError
from ..guidance.config import GuidanceConfig
from ..guidance.likelihood import GuidanceGradients, guidance_gradients, residual
from ..guidance.projection import project_simplex
from ..models.base import ScoreModel
from ..utils.rng import PURPOSE_INIT, as_streams
from .ancestral import ancestral_step
from .result import Snapshot, SolveResult

logger = logging.getLogger('blinddps')

MAX_SNAPSHOTS = 50


@dataclass(frozen=True)
class SamplerOptions:
    """
    Loop settings independent of the guidance math.

    Attributes:
        snapshot_stride: Steps between snapshots (default ⌈N/50⌉)
        final_noise: Add √β_1 noise at the last step
    """

    snapshot_stride: Optional[int] = None
    final_noise: bool = False

    def __post_init__(self):
        if self.snapshot_stride is not None and self.snapshot_stride < 1:
            raise ParameterError(f"snapshot_stride must be positive, got {self.snapshot_stride}")

    def stride(self, n_steps: int) -> int:
        if self.snapshot_stride is not None:
            return int(self.snapshot_stride)
        return max(1, math.ceil(n_steps / MAX_SNAPSHOTS))

    @classmethod
    def from_dict(cls, section: Optional[Mapping]) -> 'SamplerOptions':
        section = section or {}
        return cls(section.get('snapshot_stride'), bool(section.get('final_noise', False)))


def _mse(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> Optional[float]:
    if a is None or b is None or np.shape(a) != np.shape(b):
        return None
    return float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))


class ReverseDiffusionEngine:
    """Runs coupled reverse chains with likelihood guidance."""

    method = 'engine'

    def __init__(self, sched: NoiseSchedule, config: Optional[GuidanceConfig] = None,
                 options: Optional[SamplerOptions] = None):
        """
        Initialize the engine.

        Args:
            sched: Noise schedule shared by every chain
            config: Guidance settings
            options: Loop settings
        """
        self.sched = sched
        self.config = config or GuidanceConfig()
        self.options = options or SamplerOptions()

    def step_size(self, name: str) -> float:
        return self.config.step_for(name)

    def gradient_config(self) -> GuidanceConfig:
        """Config handed to guidance_gradients."""
        return self.config

    def update_guided(self, name: str, value: np.ndarray, grad: np.ndarray, i: int) -> np.ndarray:
        """Update of a variable without a diffusion prior."""
        return value - self.step_size(name) * grad

    def _snapshot(self, i: int, gg: GuidanceGradients, truth: Mapping[str, np.ndarray]) -> Snapshot:
        est = gg.estimates
        snap = Snapshot(
            step=i, t=self.sched.time(i), residual=gg.residual,
            x_hat=est['x'].copy(),
            k_hat=est['k'].copy() if 'k' in est else None,
            phi_hat=est['phi'].copy() if 'phi' in est else None,
            mse_image=_mse(est.get('x'), truth.get('x')),
            mse_kernel=_mse(est.get('k'), truth.get('k')),
            mse_tilt=_mse(est.get('phi'), truth.get('phi')),
        )
        message = f"[{self.method}] step {i}: residual {gg.residual:.5f}"
        if snap.mse_image is not None:
            message += f", image MSE {snap.mse_image:.5f}"
        if snap.mse_kernel is not None:
            message += f", kernel MSE {snap.mse_kernel:.3e}"
        logger.info(message)
        return snap

    def run(self, y, models: Mapping[str, ScoreModel], shapes: Mapping[str, Tuple[int, ...]], rng=None,
            fixed: Optional[Mapping[str, np.ndarray]] = None,
            guided: Optional[Mapping[str, np.ndarray]] = None,
            ground_truth: Optional[Mapping[str, np.ndarray]] = None) -> SolveResult:
        """
        Run the reverse chains from step N down to 1.

        Args:
            y: Measurement
            models: Score model per diffused variable
            shapes: Shape per diffused variable
            rng: Seed or RandomStreams; branch names equal variable names
            fixed: Variables held at a given value
            guided: Initial values of variables updated by guidance only
            ground_truth: Optional true values for trajectory MSEs

        Returns:
            SolveResult

        Raises:
            DivergenceError: If any state becomes non-finite
        """
        streams = as_streams(rng)
        sched = self.sched
        fixed = {name: np.asarray(v, dtype=np.float64) for name, v in (fixed or {}).items()}
        guided = {name: np.asarray(v, dtype=np.float64).copy() for name, v in (guided or {}).items()}
        truth = dict(ground_truth or {})
        diffused = [name for name in ('x', 'k', 'phi') if models.get(name) is not None]
        grad_models = {name: models.get(name) for name in diffused}
        grad_models.update({name: None for name in guided})
        grad_config = self.gradient_config()

        states: Dict[str, np.ndarray] = {}
        for name in diffused:
            states[name] = streams.normal(name, sched.n_steps, tuple(shapes[name]), PURPOSE_INIT)
        states.update(guided)

        stride = self.options.stride(sched.n_steps)
        trajectory = []
        last_snapshot = None
        gg = None
        for i in range(sched.n_steps, 0, -1):
            gg = guidance_gradients(y, grad_models, states, i, sched, grad_config, fixed)
            if not np.isfinite(gg.residual):
                logger.error(f"[{self.method}] residual became non-finite at step {i}")
                raise DivergenceError(f"Residual became non-finite at step {i}", step=i,
                                      last_snapshot=last_snapshot)

            new_states = {}
            for name in diffused:
                z = None
                if i > 1 or self.options.final_noise:
                    z = streams.normal(name, i, states[name].shape)
                moved = ancestral_step(states[name], gg.estimates[name], i, sched, z, self.options.final_noise)
                new_states[name] = moved - self.step_size(name) * gg.gradients[name]
            for name in guided:
                new_states[name] = self.update_guided(name, states[name], gg.gradients[name], i)

            for name, value in new_states.items():
                if not np.all(np.isfinite(value)):
                    logger.error(f"[{self.method}] chain '{name}' diverged at step {i}")
                    raise DivergenceError(f"Chain '{name}' became non-finite at step {i}", step=i,
                                          last_snapshot=last_snapshot)

            if (sched.n_steps - i) % stride == 0 or i == 1:
                trajectory.append(self._snapshot(i, gg, truth))
                last_snapshot = {'step': i, **{n: v.copy() for n, v in states.items()}}
            states = new_states

        x0 = states['x'] if 'x' in states else fixed['x']
        if 'k' in diffused:
            k0 = project_simplex(gg.estimates['k'])
        elif 'k' in guided:
            k0 = project_simplex(states['k'])
        else:
            k0 = fixed.get('k')
        phi0 = states['phi'] if 'phi' in states else fixed.get('phi')

        return SolveResult(
            x0=x0, k0=k0, phi0=phi0, x_hat0=gg.estimates['x'].copy(),
            trajectory=trajectory, seed=streams.seed, method=self.method,
            config={'guidance': asdict(self.config), 'sampler': asdict(self.options),
                    'n_steps': sched.n_steps},
            final_states=states,
            final_residual=residual(y, x0, k0, phi0),
        )
