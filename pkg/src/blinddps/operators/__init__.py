"""
Forward operators.

This package contains circular convolution, the tilt warp, the Gaussian
measurement channel and the kernel and tilt-field generators.
"""

from .convolution import (
    convolve,
    convolve_adjoint,
    convolve_adjoint_kernel,
    circulant_matrix,
    image_matrix,
    pad_kernel,
    spectral_norm,
)
from .warp import tilt_warp, tilt_warp_adjoint, tilt_warp_vjp_phi
from .generators import gen_gaussian_kernel, gen_motion_kernel, gen_tilt_field, clamp_tilt
from .measurement import Measurement, degrade, forward_model
