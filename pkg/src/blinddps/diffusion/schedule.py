"""
Discrete variance-preserving diffusion schedule.

This module provides the DDPM noise schedule, forward noising and the exact
conditional score of the forward kernel. Arrays are indexed by the step
i ∈ {0..N}; index 0 holds the clean-signal convention (β_0 = 0, ᾱ_0 = 1).
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..exceptions import DegenerateStepError, ParameterError, ShapeError

logger = logging.getLogger('blinddps')

DEFAULT_N_STEPS = 1000
DEFAULT_BETA_MIN = 1e-4
DEFAULT_BETA_MAX = 0.02


@dataclass(frozen=True)
class NoiseSchedule:
    """
    DDPM coefficients for N steps.

    Attributes:
        n_steps: Number of diffusion steps N
        betas: β_i, length N + 1 with betas[0] = 0
        alphas: α_i = 1 − β_i
        alpha_bars: ᾱ_i = ∏_{j≤i} α_j with alpha_bars[0] = 1
        post_vars: σ̃_i² = β_i (1 − ᾱ_{i−1}) / (1 − ᾱ_i), post_vars[0] = 0
    """

    n_steps: int
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    post_vars: np.ndarray

    @property
    def post_stds(self) -> np.ndarray:
        return np.sqrt(self.post_vars)

    def check_step(self, i: int, allow_zero: bool = True) -> int:
        i = int(i)
        lower = 0 if allow_zero else 1
        if i < lower or i > self.n_steps:
            raise ParameterError(f"Step index {i} outside [{lower}, {self.n_steps}]")
        return i

    def alpha_bar(self, i: int) -> float:
        return float(self.alpha_bars[self.check_step(i)])

    def time(self, i: int) -> float:
        """Continuous time t = i / N, used for reporting only."""
        return self.check_step(i) / self.n_steps


def make_schedule(n_steps: int = DEFAULT_N_STEPS, beta_min: float = DEFAULT_BETA_MIN,
                  beta_max: float = DEFAULT_BETA_MAX) -> NoiseSchedule:
    """
    Build a linear-β DDPM schedule.

    Args:
        n_steps: Number of steps N ≥ 1
        beta_min: β_1
        beta_max: β_N

    Returns:
        NoiseSchedule

    Raises:
        ParameterError: If N < 1 or not 0 < beta_min ≤ beta_max < 1
    """
    if int(n_steps) != n_steps or n_steps < 1:
        raise ParameterError(f"n_steps must be a positive integer, got {n_steps}")
    if not (0.0 < beta_min <= beta_max < 1.0):
        raise ParameterError(f"Need 0 < beta_min <= beta_max < 1, got ({beta_min}, {beta_max})")

    n_steps = int(n_steps)
    betas = np.concatenate([[0.0], np.linspace(beta_min, beta_max, n_steps)])
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)

    post_vars = np.zeros(n_steps + 1)
    post_vars[1:] = betas[1:] * (1.0 - alpha_bars[:-1]) / (1.0 - alpha_bars[1:])

    for array in (betas, alphas, alpha_bars, post_vars):
        array.setflags(write=False)

    return NoiseSchedule(n_steps, betas, alphas, alpha_bars, post_vars)


def default_schedule(n_steps: int = DEFAULT_N_STEPS) -> NoiseSchedule:
    """
    Linear schedule with the default endpoints rescaled by 1000 / N.

    Keeps the total noise level roughly constant so that short chains still
    end close to N(0, I).
    """
    scale = DEFAULT_N_STEPS / float(n_steps)
    beta_min = min(DEFAULT_BETA_MIN * scale, 0.5)
    beta_max = min(DEFAULT_BETA_MAX * scale, 0.999)
    return make_schedule(n_steps, beta_min, max(beta_min, beta_max))


def schedule_from_config(section: dict) -> NoiseSchedule:
    """Build a schedule from the `schedule` section of an experiment config."""
    n_steps = int(section.get('n_steps', DEFAULT_N_STEPS))
    if section.get('rescale', False):
        return default_schedule(n_steps)
    return make_schedule(n_steps, float(section.get('beta_min', DEFAULT_BETA_MIN)),
                         float(section.get('beta_max', DEFAULT_BETA_MAX)))


def diffuse(x0: np.ndarray, i: int, z: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """Forward noising x_i = √ᾱ_i x0 + √(1 − ᾱ_i) z."""
    x0 = np.asarray(x0, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x0.shape != z.shape:
        raise ShapeError(f"Signal shape {x0.shape} does not match noise shape {z.shape}")
    a_bar = sched.alpha_bar(i)
    return np.sqrt(a_bar) * x0 + np.sqrt(1.0 - a_bar) * z


def true_conditional_score(x_i: np.ndarray, x0: np.ndarray, i: int, sched: NoiseSchedule) -> np.ndarray:
    """
    Exact score of the forward kernel, ∇ log N(x_i; √ᾱ_i x0, (1 − ᾱ_i) I).

    Raises:
        DegenerateStepError: If ᾱ_i = 1 (the kernel is a point mass)
        ShapeError: If x_i and x0 differ in shape
    """
    x_i = np.asarray(x_i, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64)
    if x_i.shape != x0.shape:
        raise ShapeError(f"Noisy shape {x_i.shape} does not match clean shape {x0.shape}")
    a_bar = sched.alpha_bar(i)
    if a_bar >= 1.0:
        raise DegenerateStepError(f"ᾱ_{i} = 1: conditional score undefined")
    return -(x_i - np.sqrt(a_bar) * x0) / (1.0 - a_bar)
