"""
Multilayer-perceptron score model.

The network sees the flattened signal with √ᾱ_i and √(1 − ᾱ_i) appended and
is differentiated by an explicit layer-by-layer backward pass, which serves
both the score VJP used during guidance and the parameter gradients used by
the trainer.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..diffusion.schedule import NoiseSchedule
from ..exceptions import DegenerateStepError, ParameterError
from .base import ScoreModel

logger = logging.getLogger('blinddps')

ACTIVATIONS = ('tanh', 'silu')
PARAMETERIZATIONS = ('eps', 'score')
TIME_EMBEDDING = 'sqrt_alpha_bar'


def _activate(kind: str, pre: np.ndarray) -> np.ndarray:
    if kind == 'tanh':
        return np.tanh(pre)
    return pre / (1.0 + np.exp(-pre))


def _activate_grad(kind: str, pre: np.ndarray) -> np.ndarray:
    if kind == 'tanh':
        return 1.0 - np.tanh(pre) ** 2
    sig = 1.0 / (1.0 + np.exp(-pre))
    return sig * (1.0 + pre * (1.0 - sig))


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass."""

    inputs: List[np.ndarray]
    pre_activations: List[np.ndarray]
    a_bar: float


class MlpScore(ScoreModel):
    """
    Fully connected score network.

    Args:
        domain_shape: Shape of one scored signal
        hidden: Hidden layer widths
        activation: 'tanh' or 'silu'
        parameterization: 'eps' (network predicts the noise) or 'score'
        weights: Optional list of weight matrices (fan_in, fan_out)
        biases: Optional list of bias vectors
        rng: Generator used for initialization when weights are not given
    """

    variant = 'mlp'

    def __init__(self, domain_shape: Sequence[int], hidden: Sequence[int] = (128, 128),
                 activation: str = 'tanh', parameterization: str = 'eps',
                 weights: Optional[List[np.ndarray]] = None, biases: Optional[List[np.ndarray]] = None,
                 rng: Optional[np.random.Generator] = None):
        super().__init__(tuple(domain_shape))
        if activation not in ACTIVATIONS:
            raise ParameterError(f"Unknown activation '{activation}', expected one of {ACTIVATIONS}")
        if parameterization not in PARAMETERIZATIONS:
            raise ParameterError(f"Unknown parameterization '{parameterization}'")
        self.hidden = [int(h) for h in hidden]
        self.activation = activation
        self.parameterization = parameterization

        sizes = self.layer_sizes
        if weights is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            weights = [rng.standard_normal((n_in, n_out)) / np.sqrt(n_in)
                       for n_in, n_out in zip(sizes[:-1], sizes[1:])]
            biases = [np.zeros(n_out) for n_out in sizes[1:]]
        if biases is None or len(weights) != len(sizes) - 1 or len(biases) != len(weights):
            raise ParameterError("Weight and bias lists do not match the layer sizes")
        for w, b, n_in, n_out in zip(weights, biases, sizes[:-1], sizes[1:]):
            if w.shape != (n_in, n_out) or b.shape != (n_out,):
                raise ParameterError(f"Layer block shapes {w.shape}/{b.shape} != ({n_in}, {n_out})")
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]

    @property
    def layer_sizes(self) -> List[int]:
        return [self.dim + 2] + self.hidden + [self.dim]

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> 'MlpScore':
        return MlpScore(self.domain_shape, self.hidden, self.activation, self.parameterization,
                        [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def output_scale(self, a_bar: np.ndarray) -> np.ndarray:
        """Factor mapping the raw network output to the score."""
        if self.parameterization == 'score':
            return np.ones_like(a_bar)
        if np.any(a_bar >= 1.0):
            raise DegenerateStepError("eps-parameterized score is undefined at ᾱ = 1")
        return -1.0 / np.sqrt(1.0 - a_bar)

    def forward(self, x: np.ndarray, a_bar) -> Tuple[np.ndarray, ForwardCache]:
        """
        Raw network output for a (B, D) batch.

        Args:
            x: Flattened inputs
            a_bar: Scalar ᾱ or a (B, 1) array of per-row values

        Returns:
            Output (B, D) and the cache needed by backward
        """
        a_bar_col = np.broadcast_to(np.asarray(a_bar, dtype=np.float64), (x.shape[0], 1))
        h = np.concatenate([x, np.sqrt(a_bar_col), np.sqrt(1.0 - a_bar_col)], axis=1)
        inputs, pres = [], []
        last = len(self.weights) - 1
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            pre = h @ w + b
            pres.append(pre)
            h = pre if layer == last else _activate(self.activation, pre)
        return h, ForwardCache(inputs, pres, a_bar)

    def backward(self, cache: ForwardCache, grad_out: np.ndarray,
                 need_params: bool = True) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
        """
        Reverse pass through the network.

        Args:
            cache: Cache returned by forward
            grad_out: Gradient with respect to the raw output, (B, D)
            need_params: Also accumulate weight and bias gradients

        Returns:
            Gradient with respect to the signal part of the input (B, D),
            then lists of weight and bias gradients (empty when not needed)
        """
        grad_w: List[np.ndarray] = []
        grad_b: List[np.ndarray] = []
        g = grad_out
        last = len(self.weights) - 1
        for layer in range(last, -1, -1):
            if layer != last:
                g = g * _activate_grad(self.activation, cache.pre_activations[layer])
            if need_params:
                grad_w.append(cache.inputs[layer].T @ g)
                grad_b.append(g.sum(axis=0))
            g = g @ self.weights[layer].T
        grad_w.reverse()
        grad_b.reverse()
        return g[:, :self.dim], grad_w, grad_b

    def _score_impl(self, x, i, sched):
        a_bar = sched.alpha_bar(i)
        out, _ = self.forward(x, a_bar)
        return self.output_scale(np.asarray(a_bar)) * out

    def _vjp_impl(self, x, i, sched, cotangent):
        a_bar = sched.alpha_bar(i)
        scale = self.output_scale(np.asarray(a_bar))
        _, cache = self.forward(x, a_bar)
        grad_x, _, _ = self.backward(cache, scale * cotangent, need_params=False)
        return grad_x

    def to_state(self) -> Tuple[Dict[str, Any], List[Tuple[str, np.ndarray]]]:
        meta = {
            'variant': self.variant,
            'domain_shape': list(self.domain_shape),
            'hidden': self.hidden,
            'activation': self.activation,
            'parameterization': self.parameterization,
            'time_embedding': TIME_EMBEDDING,
        }
        blocks = []
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            blocks.append((f'W{layer}', w))
            blocks.append((f'b{layer}', b))
        return meta, blocks

    @classmethod
    def from_state(cls, meta: Dict[str, Any], blocks: Dict[str, np.ndarray]) -> 'MlpScore':
        n_layers = len(meta['hidden']) + 1
        return cls(meta['domain_shape'], meta['hidden'], meta['activation'], meta['parameterization'],
                   [blocks[f'W{k}'] for k in range(n_layers)],
                   [blocks[f'b{k}'] for k in range(n_layers)])
