"""
Analytic score models.

This module provides diagonal Gaussian and Gaussian-mixture priors whose
diffused marginals, scores and score Jacobians are known in closed form.
Under the forward process a component N(μ, Σ) diffuses to
N(√ᾱ_i μ, ᾱ_i Σ + (1 − ᾱ_i) I).
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import ParameterError, ShapeError
from .base import ScoreModel

logger = logging.getLogger('blinddps')

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GaussianPrior:
    """Diagonal Gaussian N(mean, diag(var))."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        var = np.asarray(self.var, dtype=np.float64)
        try:
            mean, var = np.broadcast_arrays(mean, var)
        except ValueError as e:
            raise ShapeError(f"Mean {mean.shape} and variance {var.shape} do not broadcast") from e
        if not np.all(var > 0):
            raise ParameterError("Gaussian prior variances must be positive")
        object.__setattr__(self, 'mean', np.array(mean))
        object.__setattr__(self, 'var', np.array(var))

    @classmethod
    def standard(cls, shape: Tuple[int, ...]) -> 'GaussianPrior':
        return cls(np.zeros(shape), np.ones(shape))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.mean.shape

    def diffused(self, i: int, sched: NoiseSchedule) -> Tuple[np.ndarray, np.ndarray]:
        """Mean and variance of the marginal at step i."""
        a_bar = sched.alpha_bar(i)
        return np.sqrt(a_bar) * self.mean, a_bar * self.var + (1.0 - a_bar)

    def log_density(self, x: np.ndarray, i: int, sched: NoiseSchedule) -> float:
        m, v = self.diffused(i, sched)
        x = np.asarray(x, dtype=np.float64)
        return float(-0.5 * np.sum((x - m) ** 2 / v + np.log(v) + LOG_2PI))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((count,) + self.shape)
        return self.mean + np.sqrt(self.var) * z


@dataclass(frozen=True)
class GmmPrior:
    """
    Mixture of diagonal Gaussians.

    Attributes:
        weights: (J,) positive mixture weights summing to one
        means: (J, *shape) component means
        vars: (J, *shape) component variances
    """

    weights: np.ndarray
    means: np.ndarray
    vars: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        means = np.asarray(self.means, dtype=np.float64)
        variances = np.broadcast_to(np.asarray(self.vars, dtype=np.float64), means.shape)
        if weights.ndim != 1 or means.shape[0] != weights.shape[0]:
            raise ShapeError(f"{weights.shape[0]} weights for {means.shape[0]} components")
        if not np.all(weights > 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ParameterError("Mixture weights must be positive and sum to 1")
        if not np.all(variances > 0):
            raise ParameterError("Mixture variances must be positive")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'means', means)
        object.__setattr__(self, 'vars', np.array(variances))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.means.shape[1:]

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    def _diffused_flat(self, i: int, sched: NoiseSchedule) -> Tuple[np.ndarray, np.ndarray]:
        a_bar = sched.alpha_bar(i)
        n = self.n_components
        m = np.sqrt(a_bar) * self.means.reshape(n, -1)
        v = a_bar * self.vars.reshape(n, -1) + (1.0 - a_bar)
        return m, v

    def _component_terms(self, x: np.ndarray, i: int, sched: NoiseSchedule):
        """Per-row log joint terms (B, J) and component scores (B, J, D)."""
        m, v = self._diffused_flat(i, sched)
        diff = x[:, None, :] - m[None, :, :]
        log_terms = (np.log(self.weights)[None, :]
                     - 0.5 * np.sum(diff ** 2 / v[None] + np.log(v)[None] + LOG_2PI, axis=2))
        return log_terms, -diff / v[None], v

    def log_density(self, x: np.ndarray, i: int, sched: NoiseSchedule) -> float:
        x = np.asarray(x, dtype=np.float64).reshape(1, -1)
        log_terms, _, _ = self._component_terms(x, i, sched)
        return float(logsumexp(log_terms, axis=1)[0])

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        labels = rng.choice(self.n_components, size=count, p=self.weights)
        z = rng.standard_normal((count,) + self.shape)
        return self.means[labels] + np.sqrt(self.vars[labels]) * z


class GaussianScore(ScoreModel):
    """Exact score of a diffused diagonal Gaussian."""

    variant = 'gaussian'

    def __init__(self, prior: GaussianPrior, domain_shape: Optional[Sequence[int]] = None):
        super().__init__(prior.shape if domain_shape is None else tuple(domain_shape))
        try:
            mean = np.broadcast_to(prior.mean, self.domain_shape)
            var = np.broadcast_to(prior.var, self.domain_shape)
        except ValueError as e:
            raise ShapeError(f"Prior of shape {prior.shape} cannot cover domain {self.domain_shape}") from e
        self.prior = GaussianPrior(mean, var)

    def _diffused_flat(self, i: int, sched: NoiseSchedule) -> Tuple[np.ndarray, np.ndarray]:
        m, v = self.prior.diffused(i, sched)
        return m.reshape(1, -1), v.reshape(1, -1)

    def _score_impl(self, x, i, sched):
        m, v = self._diffused_flat(i, sched)
        return -(x - m) / v

    def _vjp_impl(self, x, i, sched, cotangent):
        _, v = self._diffused_flat(i, sched)
        return -cotangent / v

    def log_density(self, x: np.ndarray, i: int, sched: NoiseSchedule) -> float:
        return self.prior.log_density(x, i, sched)

    def to_state(self) -> Tuple[Dict[str, Any], List[Tuple[str, np.ndarray]]]:
        meta = {'variant': self.variant, 'domain_shape': list(self.domain_shape)}
        return meta, [('mean', self.prior.mean), ('var', self.prior.var)]

    @classmethod
    def from_state(cls, meta: Dict[str, Any], blocks: Dict[str, np.ndarray]) -> 'GaussianScore':
        return cls(GaussianPrior(blocks['mean'], blocks['var']), meta['domain_shape'])


class GmmScore(ScoreModel):
    """
    Exact score of a diffused Gaussian mixture.

    The score is the responsibility-weighted average of the component scores
    s_j; its Jacobian is Σ_j r_j (−diag(1/v_j) + s_j s_jᵀ) − s sᵀ, which is
    symmetric, so the VJP applies it directly.
    """

    variant = 'gmm'

    def __init__(self, prior: GmmPrior):
        super().__init__(prior.shape)
        self.prior = prior

    def _responsibilities(self, x, i, sched):
        log_terms, comp_scores, v = self.prior._component_terms(x, i, sched)
        resp = np.exp(log_terms - logsumexp(log_terms, axis=1, keepdims=True))
        return resp, comp_scores, v

    def _score_impl(self, x, i, sched):
        resp, comp_scores, _ = self._responsibilities(x, i, sched)
        return np.einsum('bj,bjd->bd', resp, comp_scores)

    def _vjp_impl(self, x, i, sched, cotangent):
        resp, comp_scores, v = self._responsibilities(x, i, sched)
        score = np.einsum('bj,bjd->bd', resp, comp_scores)
        proj = np.einsum('bjd,bd->bj', comp_scores, cotangent)
        curvature = -cotangent[:, None, :] / v[None] + comp_scores * proj[:, :, None]
        return (np.einsum('bj,bjd->bd', resp, curvature)
                - score * np.sum(score * cotangent, axis=1, keepdims=True))

    def log_density(self, x: np.ndarray, i: int, sched: NoiseSchedule) -> float:
        return self.prior.log_density(x, i, sched)

    def to_state(self) -> Tuple[Dict[str, Any], List[Tuple[str, np.ndarray]]]:
        meta = {'variant': self.variant, 'domain_shape': list(self.domain_shape)}
        return meta, [('weights', self.prior.weights), ('means', self.prior.means), ('vars', self.prior.vars)]

    @classmethod
    def from_state(cls, meta: Dict[str, Any], blocks: Dict[str, np.ndarray]) -> 'GmmScore':
        return cls(GmmPrior(blocks['weights'], blocks['means'], blocks['vars']))
