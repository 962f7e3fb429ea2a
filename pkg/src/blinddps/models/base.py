"""
Base score-model components for BlindDPS.

This module provides the ScoreModel base class. Concrete models implement
`_score_impl` and `_vjp_impl` on a flattened batch (B, D); the public methods
take care of shape checks, batching and error wrapping.
"""

import logging
from typing import Any, Dict, List, Tuple

import numpy as np

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import BlindDPSException, ShapeError

logger = logging.getLogger('blinddps')


class ScoreModel:
    """Base class for all score models s(x, i) ≈ ∇ log p_i(x)."""

    variant = 'base'

    def __init__(self, domain_shape: Tuple[int, ...]):
        """
        Initialize the model.

        Args:
            domain_shape: Shape of one signal scored by this model
        """
        self.domain_shape = tuple(int(s) for s in domain_shape)
        self.dim = int(np.prod(self.domain_shape)) if self.domain_shape else 1

    def _as_batch(self, x: np.ndarray) -> Tuple[np.ndarray, Tuple[int, ...]]:
        x = np.asarray(x, dtype=np.float64)
        if x.shape == self.domain_shape:
            return x.reshape(1, self.dim), x.shape
        if x.ndim == len(self.domain_shape) + 1 and x.shape[1:] == self.domain_shape:
            return x.reshape(x.shape[0], self.dim), x.shape
        raise ShapeError(f"{self.variant} model scores shape {self.domain_shape}, got {x.shape}")

    def score(self, x: np.ndarray, i: int, sched: NoiseSchedule) -> np.ndarray:
        """
        Evaluate the score at x for step i.

        Args:
            x: One signal of shape domain_shape, or a batch (B, *domain_shape)
            i: Step index
            sched: Noise schedule

        Returns:
            Array with the shape of x

        Raises:
            ShapeError: If x does not match the model domain
            BlindDPSException: If evaluation fails
        """
        batch, shape = self._as_batch(x)
        i = sched.check_step(i)
        try:
            return self._score_impl(batch, i, sched).reshape(shape)
        except Exception as e:
            logger.error(f"Error evaluating {self.variant} score at step {i}: {str(e)}")
            if isinstance(e, BlindDPSException):
                raise
            raise BlindDPSException(f"Failed to evaluate {self.variant} score: {str(e)}") from e

    def vjp(self, x: np.ndarray, i: int, sched: NoiseSchedule, cotangent: np.ndarray) -> np.ndarray:
        """
        Vector-Jacobian product cᵀ (∂ score / ∂x) at x.

        Args:
            x: Point of linearization
            i: Step index
            sched: Noise schedule
            cotangent: Array with the shape of x

        Returns:
            Array with the shape of x
        """
        batch, shape = self._as_batch(x)
        cot = np.asarray(cotangent, dtype=np.float64)
        if cot.shape != shape:
            raise ShapeError(f"Cotangent shape {cot.shape} does not match input shape {shape}")
        i = sched.check_step(i)
        try:
            return self._vjp_impl(batch, i, sched, cot.reshape(batch.shape)).reshape(shape)
        except Exception as e:
            logger.error(f"Error differentiating {self.variant} score at step {i}: {str(e)}")
            if isinstance(e, BlindDPSException):
                raise
            raise BlindDPSException(f"Failed to differentiate {self.variant} score: {str(e)}") from e

    def _score_impl(self, x: np.ndarray, i: int, sched: NoiseSchedule) -> np.ndarray:
        """
        Implementation of the score on a flattened batch.

        Args:
            x: (B, D) array
            i: Validated step index
            sched: Noise schedule

        Returns:
            (B, D) array
        """
        raise NotImplementedError("Subclasses must implement _score_impl")

    def _vjp_impl(self, x: np.ndarray, i: int, sched: NoiseSchedule, cotangent: np.ndarray) -> np.ndarray:
        raise NotImplementedError("Subclasses must implement _vjp_impl")

    def to_state(self) -> Tuple[Dict[str, Any], List[Tuple[str, np.ndarray]]]:
        """Header metadata and named weight blocks for persistence."""
        raise NotImplementedError(f"{self.variant} models cannot be saved")

    def __repr__(self) -> str:
        return f"{type(self).__name__}(domain_shape={self.domain_shape})"


def score_eval(model: ScoreModel, x: np.ndarray, i: int, sched: NoiseSchedule) -> np.ndarray:
    """Evaluate s(x, i) for any score model."""
    return model.score(x, i, sched)


def score_vjp(model: ScoreModel, x: np.ndarray, i: int, sched: NoiseSchedule,
              cotangent: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product of the score map at x."""
    return model.vjp(x, i, sched, cotangent)
