"""
Linear-Gaussian toy problems for checking the plug-in likelihood.

A ToyProblem fixes image and kernel priors, the measurement and the noise
level, and exposes the dense circulant operators that represent the
convolution as a matrix acting on either argument.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..exceptions import ShapeError
from ..models.analytic import GaussianPrior, GmmPrior
from ..operators.convolution import circulant_matrix, image_matrix

Prior = Union[GaussianPrior, GmmPrior]


@dataclass
class ToyProblem:
    """
    Attributes:
        image_prior: Prior over H×W images
        kernel_prior: Prior over h×w kernels
        sigma: Measurement noise std
        y: Measurement (H×W)
    """

    image_prior: Prior
    kernel_prior: Prior
    sigma: float
    y: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        if len(self.image_shape) != 2 or len(self.kernel_shape) != 2:
            raise ShapeError("Toy problems use single-channel images and 2-D kernels")
        if self.y.shape != self.image_shape:
            raise ShapeError(f"Measurement {self.y.shape} does not match image prior {self.image_shape}")

    @property
    def image_shape(self) -> Tuple[int, ...]:
        return tuple(self.image_prior.shape)

    @property
    def kernel_shape(self) -> Tuple[int, ...]:
        return tuple(self.kernel_prior.shape)

    @property
    def dimension(self) -> int:
        """d, the flattened measurement dimension."""
        return int(np.prod(self.image_shape))

    def kernel_operator(self, k: np.ndarray) -> np.ndarray:
        """K with K @ x.ravel() = (k ∗ x).ravel()."""
        return circulant_matrix(k, self.image_shape)

    def image_operator(self, x: np.ndarray) -> np.ndarray:
        """X with X @ k.ravel() = (k ∗ x).ravel()."""
        return image_matrix(x, self.kernel_shape)

    def bilinear_tensor(self) -> np.ndarray:
        """T[p, q, a] with (k ∗ x)[p] = Σ_{q,a} T[p, q, a] x[q] k[a]."""
        d = self.dimension
        basis = np.eye(d).reshape((d,) + self.image_shape)
        return np.stack([image_matrix(e, self.kernel_shape) for e in basis], axis=1)

    def with_sigma(self, sigma: float) -> 'ToyProblem':
        return ToyProblem(self.image_prior, self.kernel_prior, sigma, self.y)
