"""
DDPM ancestral reverse step.
"""

from typing import Optional, Tuple

import numpy as np

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import ParameterError, ShapeError


def ancestral_coefficients(i: int, sched: NoiseSchedule) -> Tuple[float, float, float]:
    """
    Coefficients (c_v, c_0, σ̃_i) of v_{i−1} = c_v v_i + c_0 v̂0 + σ̃_i z.

    c_v = √α_i (1 − ᾱ_{i−1}) / (1 − ᾱ_i) and c_0 = √ᾱ_{i−1} β_i / (1 − ᾱ_i).
    """
    i = int(i)
    if i < 1 or i > sched.n_steps:
        raise ParameterError(f"Ancestral steps need 1 ≤ i ≤ {sched.n_steps}, got {i}")
    a_bar = sched.alpha_bars[i]
    a_bar_prev = sched.alpha_bars[i - 1]
    denom = 1.0 - a_bar
    c_v = np.sqrt(sched.alphas[i]) * (1.0 - a_bar_prev) / denom
    c_0 = np.sqrt(a_bar_prev) * sched.betas[i] / denom
    return float(c_v), float(c_0), float(np.sqrt(sched.post_vars[i]))


def ancestral_step(v_i: np.ndarray, v_hat0: np.ndarray, i: int, sched: NoiseSchedule,
                   z: Optional[np.ndarray] = None, final_noise: bool = False) -> np.ndarray:
    """
    One reverse step from v_i given the clean estimate v̂0.

    Args:
        v_i: Current state
        v_hat0: Tweedie estimate of the clean signal
        i: Step index (≥ 1)
        sched: Noise schedule
        z: Standard normal noise, omitted when None
        final_noise: Add √β_1 noise at i = 1, where σ̃_1 vanishes

    Returns:
        v_{i−1}
    """
    v_i = np.asarray(v_i, dtype=np.float64)
    v_hat0 = np.asarray(v_hat0, dtype=np.float64)
    if v_i.shape != v_hat0.shape:
        raise ShapeError(f"State shape {v_i.shape} does not match estimate shape {v_hat0.shape}")
    c_v, c_0, sigma = ancestral_coefficients(i, sched)
    out = c_v * v_i + c_0 * v_hat0
    if z is not None and (i > 1 or final_noise):
        z = np.asarray(z, dtype=np.float64)
        if z.shape != v_i.shape:
            raise ShapeError(f"Noise shape {z.shape} does not match state shape {v_i.shape}")
        if i == 1:
            sigma = float(np.sqrt(sched.betas[1]))
        out = out + sigma * z
    return out
