"""
Tweedie denoising x̂0 = (v + (1 − ᾱ_i) s(v, i)) / √ᾱ_i and its VJP.

A model of None stands for a variable without a diffusion prior; its
estimate is the state itself.
"""

from typing import Optional

import numpy as np

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import DegenerateStepError
from ..models.base import ScoreModel


def _alpha_bar(i: int, sched: NoiseSchedule) -> float:
    a_bar = sched.alpha_bar(i)
    if a_bar <= 0.0:
        raise DegenerateStepError(f"ᾱ_{i} = 0: Tweedie estimate undefined")
    return a_bar


def tweedie_denoise(model: Optional[ScoreModel], v: np.ndarray, i: int, sched: NoiseSchedule) -> np.ndarray:
    """Posterior-mean estimate of the clean signal from v at step i."""
    v = np.asarray(v, dtype=np.float64)
    if model is None:
        return v.copy()
    a_bar = _alpha_bar(i, sched)
    return (v + (1.0 - a_bar) * model.score(v, i, sched)) / np.sqrt(a_bar)


def tweedie_vjp(model: Optional[ScoreModel], v: np.ndarray, i: int, sched: NoiseSchedule,
                cotangent: np.ndarray) -> np.ndarray:
    """cᵀ ∂x̂0/∂v = (c + (1 − ᾱ_i) · score_vjp(c)) / √ᾱ_i."""
    cotangent = np.asarray(cotangent, dtype=np.float64)
    if model is None:
        return cotangent.copy()
    a_bar = _alpha_bar(i, sched)
    return (cotangent + (1.0 - a_bar) * model.vjp(v, i, sched, cotangent)) / np.sqrt(a_bar)
