"""
Likelihood guidance.

This package contains Tweedie denoising, the simplex projection, kernel
regularizers and the guidance gradients that couple the parallel chains.
"""

from .config import GuidanceConfig
from .tweedie import tweedie_denoise, tweedie_vjp
from .projection import project_simplex, in_simplex
from .regularizers import regularizer, hard_threshold, sparsify_kernel
from .likelihood import GuidanceGradients, guidance_gradients, kernel_estimate, residual
