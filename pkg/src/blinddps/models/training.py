"""
Denoising score matching.

This module provides dsm_train, which fits an MlpScore to a dataset by
regressing the conditional score −z/√(1 − ᾱ_i) at uniformly drawn steps,
using SGD with momentum.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import DivergenceError, ParameterError, ShapeError
from ..utils.rng import PURPOSE_INIT, RandomStreams, as_streams
from .mlp import MlpScore

logger = logging.getLogger('blinddps')

DEFAULT_TRAINING = {
    'epochs': 50,
    'batch_size': 64,
    'learning_rate': 1e-3,
    'momentum': 0.9,
    'hidden': [128, 128],
    'activation': 'tanh',
    'parameterization': 'eps',
    'weighting': 'noise',
    'heldout_size': 256,
    'seed': 0,
}

WEIGHTINGS = ('noise', 'none')

# at most one row in this many is held out
HELDOUT_DIVISOR = 5


@dataclass
class TrainingResult:
    """Trained model plus per-epoch training and held-out DSM losses."""

    model: MlpScore
    loss_history: List[float] = field(default_factory=list)
    heldout_history: List[float] = field(default_factory=list)
    heldout_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({
            'epoch': np.arange(1, len(self.loss_history) + 1),
            'loss': self.loss_history,
            'heldout_loss': self.heldout_history,
        })

    def heldout_window_means(self, window: int = 10) -> np.ndarray:
        """Mean held-out loss over consecutive complete windows of epochs."""
        if window < 1:
            raise ParameterError(f"Window must be positive, got {window}")
        n_windows = len(self.heldout_history) // window
        history = np.asarray(self.heldout_history[:n_windows * window], dtype=np.float64)
        return history.reshape(n_windows, window).mean(axis=1)

    def heldout_settles(self, windows: int = 3, window: int = 10) -> bool:
        """
        Whether the windowed held-out loss is non-increasing over the first windows.

        A violation is logged as a warning.

        Raises:
            ParameterError: If fewer than `windows` complete windows were trained
        """
        means = self.heldout_window_means(window)
        if means.shape[0] < windows:
            raise ParameterError(f"Need {windows * window} epochs of history, have {len(self.heldout_history)}")
        means = means[:windows]
        settles = bool(np.all(np.diff(means) <= 0.0))
        if not settles:
            logger.warning(f"Held-out DSM loss rose between {window}-epoch windows: {np.round(means, 6).tolist()}")
        return settles


def _stack_dataset(dataset: Sequence[np.ndarray]) -> np.ndarray:
    if len(dataset) == 0:
        raise ParameterError("Cannot train on an empty dataset")
    shape = np.shape(dataset[0])
    for item in dataset:
        if np.shape(item) != shape:
            raise ShapeError(f"Dataset items disagree in shape: {shape} vs {np.shape(item)}")
    return np.stack([np.asarray(item, dtype=np.float64) for item in dataset])


def _dsm_terms(model: MlpScore, x0: np.ndarray, steps: np.ndarray, z: np.ndarray,
               sched: NoiseSchedule, weighting: str):
    """Loss value and the gradient of the loss with respect to the raw output."""
    batch, dim = x0.shape
    a_bar = sched.alpha_bars[steps][:, None]
    x_t = np.sqrt(a_bar) * x0 + np.sqrt(1.0 - a_bar) * z
    target = -z / np.sqrt(1.0 - a_bar)
    weight = (1.0 - a_bar) if weighting == 'noise' else np.ones_like(a_bar)

    out, cache = model.forward(x_t, a_bar)
    scale = model.output_scale(a_bar)
    residual = scale * out - target
    loss = float(np.mean(weight * residual ** 2))
    grad_out = 2.0 * weight * scale * residual / (batch * dim)
    return loss, grad_out, cache


def dsm_loss(model: MlpScore, x0: np.ndarray, steps: np.ndarray, z: np.ndarray,
             sched: NoiseSchedule, weighting: str = 'noise') -> float:
    """Weighted DSM loss on fixed (x0, i, z) triples."""
    loss, _, _ = _dsm_terms(model, x0.reshape(x0.shape[0], -1), steps, z.reshape(z.shape[0], -1),
                            sched, weighting)
    return loss


def dsm_train(dataset: Sequence[np.ndarray], sched: NoiseSchedule,
              train_config: Optional[Dict[str, Any]] = None,
              rng: Optional[RandomStreams] = None,
              init_model: Optional[MlpScore] = None) -> TrainingResult:
    """
    Train an MLP score by denoising score matching.

    Args:
        dataset: Training signals, all of one shape
        sched: Noise schedule
        train_config: Overrides of DEFAULT_TRAINING
        rng: Random streams; defaults to the config seed
        init_model: Model to continue training (copied); a fresh one is built otherwise

    Returns:
        TrainingResult

    Raises:
        ParameterError: If the dataset is empty, too small to hold out rows,
            or a setting is invalid
        DivergenceError: If the loss becomes non-finite, naming the epoch
    """
    config = dict(DEFAULT_TRAINING)
    config.update(train_config or {})
    if config['weighting'] not in WEIGHTINGS:
        raise ParameterError(f"Unknown DSM weighting '{config['weighting']}'")
    epochs = int(config['epochs'])
    batch_size = int(config['batch_size'])
    lr = float(config['learning_rate'])
    momentum = float(config['momentum'])
    if epochs < 0 or batch_size < 1 or lr <= 0 or not (0.0 <= momentum < 1.0):
        raise ParameterError(f"Invalid training settings: {config}")

    data = _stack_dataset(dataset)
    domain_shape = data.shape[1:]
    flat = data.reshape(data.shape[0], -1)
    streams = rng if rng is not None else as_streams(int(config['seed']))

    if init_model is not None:
        model = init_model.copy()
    else:
        model = MlpScore(domain_shape, config['hidden'], config['activation'], config['parameterization'],
                         rng=streams.generator('training', 0, PURPOSE_INIT))

    # Held-out rows never enter a training batch; their (i, z) pairs are fixed
    heldout_gen = streams.generator('heldout', 0, PURPOSE_INIT)
    n_heldout = min(int(config['heldout_size']), flat.shape[0] // HELDOUT_DIVISOR)
    if n_heldout < 1:
        raise ParameterError(f"Dataset of {flat.shape[0]} items is too small to hold out rows; "
                             f"need at least {HELDOUT_DIVISOR}")
    rows = heldout_gen.permutation(flat.shape[0])
    heldout_rows = np.sort(rows[:n_heldout])
    train = flat[np.sort(rows[n_heldout:])]
    heldout = flat[heldout_rows]
    heldout_steps = heldout_gen.integers(1, sched.n_steps + 1, size=n_heldout)
    heldout_z = heldout_gen.standard_normal((n_heldout, flat.shape[1]))

    velocity_w = [np.zeros_like(w) for w in model.weights]
    velocity_b = [np.zeros_like(b) for b in model.biases]
    result = TrainingResult(model, heldout_rows=heldout_rows)

    for epoch in range(1, epochs + 1):
        gen = streams.generator('training', epoch)
        order = gen.permutation(train.shape[0])
        epoch_losses = []
        for start in range(0, train.shape[0], batch_size):
            idx = order[start:start + batch_size]
            steps = gen.integers(1, sched.n_steps + 1, size=idx.shape[0])
            z = gen.standard_normal((idx.shape[0], train.shape[1]))
            loss, grad_out, cache = _dsm_terms(model, train[idx], steps, z, sched, config['weighting'])
            if not np.isfinite(loss):
                logger.error(f"DSM loss became non-finite at epoch {epoch}")
                raise DivergenceError(f"Training diverged at epoch {epoch}", epoch=epoch)
            _, grad_w, grad_b = model.backward(cache, grad_out)
            for k in range(len(model.weights)):
                velocity_w[k] = momentum * velocity_w[k] - lr * grad_w[k]
                velocity_b[k] = momentum * velocity_b[k] - lr * grad_b[k]
                model.weights[k] += velocity_w[k]
                model.biases[k] += velocity_b[k]
            epoch_losses.append(loss * idx.shape[0])

        train_loss = float(np.sum(epoch_losses) / train.shape[0])
        heldout_loss = dsm_loss(model, heldout, heldout_steps, heldout_z, sched, config['weighting'])
        if not np.isfinite(heldout_loss):
            raise DivergenceError(f"Held-out loss became non-finite at epoch {epoch}", epoch=epoch)
        result.loss_history.append(train_loss)
        result.heldout_history.append(heldout_loss)
        logger.info(f"Epoch {epoch}/{epochs}: loss {train_loss:.5f}, held-out {heldout_loss:.5f}")

    return result
