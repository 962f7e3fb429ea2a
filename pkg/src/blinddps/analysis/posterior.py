"""
Closed-form Gaussian posteriors.
"""

from typing import Tuple

import numpy as np
from scipy import linalg

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import CapabilityError, ParameterError, ShapeError
from ..models.analytic import GaussianPrior


def exact_posterior_gaussian(y: np.ndarray, prior: GaussianPrior, A: np.ndarray,
                             sigma: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Posterior of x under y = A x + n, n ~ N(0, σ² I), x ~ prior.

    Args:
        y: Measurement (flattened internally)
        prior: Diagonal Gaussian prior
        A: Dense forward matrix (m × n)
        sigma: Noise std (may be inf for an uninformative measurement)

    Returns:
        (mean, covariance) with mean flattened to length n
    """
    if not isinstance(prior, GaussianPrior):
        raise CapabilityError("Exact posteriors are available for Gaussian priors only")
    if not sigma > 0:
        raise ParameterError(f"Noise std must be positive, got {sigma}")
    y = np.asarray(y, dtype=np.float64).ravel()
    A = np.asarray(A, dtype=np.float64)
    mu = prior.mean.ravel()
    var = prior.var.ravel()
    if A.shape != (y.size, mu.size):
        raise ShapeError(f"Operator {A.shape} does not map {mu.size} unknowns to {y.size} data")

    precision = np.diag(1.0 / var) + A.T @ A / sigma ** 2
    rhs = mu / var + A.T @ y / sigma ** 2
    try:
        factor = linalg.cho_factor(precision)
    except linalg.LinAlgError as e:
        raise ParameterError(f"Posterior precision is singular: {e}") from e
    cov = linalg.cho_solve(factor, np.eye(mu.size))
    mean = linalg.cho_solve(factor, rhs)
    return mean, cov


def conditional_gaussian(prior: GaussianPrior, v: np.ndarray, i: int,
                         sched: NoiseSchedule) -> Tuple[np.ndarray, np.ndarray]:
    """
    p(x0 | x_i = v) for a diagonal Gaussian prior.

    var = 1 / (1/Σ + ᾱ/(1 − ᾱ)), mean = var (μ/Σ + √ᾱ v / (1 − ᾱ)); at ᾱ = 1
    the conditional is the point mass at v.

    Returns:
        (mean, variance), both shaped like v
    """
    if not isinstance(prior, GaussianPrior):
        raise CapabilityError("Closed-form conditionals are available for Gaussian priors only")
    v = np.asarray(v, dtype=np.float64)
    if v.shape != prior.shape:
        raise ShapeError(f"State shape {v.shape} does not match prior shape {prior.shape}")
    a_bar = sched.alpha_bar(i)
    if a_bar >= 1.0:
        return v.copy(), np.zeros_like(v)
    var = 1.0 / (1.0 / prior.var + a_bar / (1.0 - a_bar))
    mean = var * (prior.mean / prior.var + np.sqrt(a_bar) * v / (1.0 - a_bar))
    return mean, var
