"""
Measurement residual and likelihood guidance gradients.

This module provides residual and guidance_gradients. The gradients of the
residual norm with respect to the current chain states are assembled by the
chain rule: forward-operator adjoints, then the unit residual direction,
then the Tweedie Jacobian applied through the score VJP. The kernel
projection (and the ℓ0 prox) are treated as the identity in the backward
pass.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import DivergenceError, ShapeError
from ..models.base import ScoreModel
from ..operators.convolution import convolve, convolve_adjoint, convolve_adjoint_kernel
from ..operators.measurement import Measurement
from ..operators.warp import tilt_warp, tilt_warp_adjoint, tilt_warp_vjp_phi
from .config import GuidanceConfig
from .projection import project_simplex
from .regularizers import regularizer, sparsify_kernel
from .tweedie import tweedie_denoise, tweedie_vjp

logger = logging.getLogger('blinddps')

RESIDUAL_FLOOR = 1e-12
VARIABLES = ('x', 'k', 'phi')


def _grid(y) -> np.ndarray:
    return np.asarray(y.grid if isinstance(y, Measurement) else y, dtype=np.float64)


def residual(y, x_hat: np.ndarray, k_hat: np.ndarray, phi_hat: Optional[np.ndarray] = None) -> float:
    """
    Unsquared residual ‖y − k̂ ∗ x̂‖₂, or ‖y − k̂ ∗ T_φ̂(x̂)‖₂ with a tilt field.

    Args:
        y: Measurement or array
        x_hat: Image estimate
        k_hat: Kernel estimate
        phi_hat: Optional tilt estimate

    Returns:
        Euclidean norm of the residual
    """
    y = _grid(y)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if y.shape != x_hat.shape:
        raise ShapeError(f"Measurement shape {y.shape} does not match image shape {x_hat.shape}")
    warped = tilt_warp(x_hat, phi_hat) if phi_hat is not None else x_hat
    return float(np.linalg.norm(y - convolve(warped, k_hat)))


@dataclass
class GuidanceGradients:
    """
    Output of one guidance evaluation.

    Attributes:
        gradients: Gradient per diffused or guided variable
        estimates: Plug-in estimates used in the residual (kernel projected)
        raw_estimates: Tweedie estimates before projection
        residual: Unsquared residual norm at the estimates
        reg_value: λ R(k̂0)
    """

    gradients: Dict[str, np.ndarray] = field(default_factory=dict)
    estimates: Dict[str, np.ndarray] = field(default_factory=dict)
    raw_estimates: Dict[str, np.ndarray] = field(default_factory=dict)
    residual: float = 0.0
    reg_value: float = 0.0


def kernel_estimate(k_raw: np.ndarray, config: GuidanceConfig, kernel_step: Optional[float] = None) -> np.ndarray:
    """Projected (and for ℓ0, sparsified) kernel estimate."""
    k_hat = project_simplex(k_raw) if config.project_kernel else np.asarray(k_raw, dtype=np.float64)
    if config.reg_kind == 'l0' and config.reg_weight > 0:
        step = config.step_size if kernel_step is None else kernel_step
        k_hat = sparsify_kernel(k_hat, config.l0_threshold * config.reg_weight * step)
    return k_hat


def guidance_gradients(y, models: Mapping[str, Optional[ScoreModel]], states: Mapping[str, np.ndarray],
                       i: int, sched: NoiseSchedule, config: GuidanceConfig,
                       fixed: Optional[Mapping[str, np.ndarray]] = None) -> GuidanceGradients:
    """
    Gradients of the guidance objective with respect to the chain states.

    Args:
        y: Measurement
        models: Score model per variable in states; None means no prior
            (the state is its own estimate)
        states: Current values of the updated variables ('x', 'k', 'phi')
        i: Step index
        sched: Noise schedule
        config: Guidance settings
        fixed: Variables held fixed (for example a known kernel or zero tilt)

    Returns:
        GuidanceGradients

    Raises:
        ShapeError: If a variable is missing or shapes disagree
        DivergenceError: If a gradient is non-finite
    """
    fixed = dict(fixed or {})
    overlap = set(states) & set(fixed)
    if overlap:
        raise ShapeError(f"Variables both updated and fixed: {sorted(overlap)}")
    for name in ('x', 'k'):
        if name not in states and name not in fixed:
            raise ShapeError(f"Guidance needs a value or state for '{name}'")

    out = GuidanceGradients()
    for name, state in states.items():
        if name not in VARIABLES:
            raise ShapeError(f"Unknown variable '{name}'")
        out.raw_estimates[name] = tweedie_denoise(models.get(name), state, i, sched)
    for name, value in fixed.items():
        out.raw_estimates[name] = np.asarray(value, dtype=np.float64)

    out.estimates = dict(out.raw_estimates)
    if 'k' in states:
        out.estimates['k'] = kernel_estimate(out.raw_estimates['k'], config)

    x_hat, k_hat = out.estimates['x'], out.estimates['k']
    phi_hat = out.estimates.get('phi')
    warped = tilt_warp(x_hat, phi_hat) if phi_hat is not None else x_hat
    y_grid = _grid(y)
    if y_grid.shape != x_hat.shape:
        raise ShapeError(f"Measurement shape {y_grid.shape} does not match image shape {x_hat.shape}")
    error = convolve(warped, k_hat) - y_grid
    out.residual = float(np.linalg.norm(error))

    if out.residual < RESIDUAL_FLOOR:
        direction = np.zeros_like(error)
    elif config.norm == 'squared':
        direction = 2.0 * error
    else:
        direction = error / out.residual

    grads_hat: Dict[str, np.ndarray] = {}
    if 'x' in states or 'phi' in states:
        back = convolve_adjoint(direction, k_hat)
        if 'x' in states:
            grads_hat['x'] = tilt_warp_adjoint(back, phi_hat) if phi_hat is not None else back
        if 'phi' in states:
            grads_hat['phi'] = tilt_warp_vjp_phi(x_hat, phi_hat, back)
    if 'k' in states:
        grads_hat['k'] = convolve_adjoint_kernel(direction, warped, k_hat.shape)
        out.reg_value, descent = regularizer(config.reg_kind, k_hat, config.reg_weight, config.l0_threshold)
        grads_hat['k'] = grads_hat['k'] + descent

    for name, g_hat in grads_hat.items():
        grad = tweedie_vjp(models.get(name), states[name], i, sched, g_hat)
        if not np.all(np.isfinite(grad)):
            logger.error(f"Non-finite {name} guidance gradient at step {i}")
            raise DivergenceError(f"Non-finite guidance gradient for '{name}' at step {i}", step=i)
        out.gradients[name] = grad
    return out
