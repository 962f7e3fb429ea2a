"""
Reverse-diffusion samplers.

This package contains the ancestral step, the shared multi-chain engine and
the prior, DPS, BlindDPS (deblurring and turbulence) and uniform-prior
pipelines.
"""

from .ancestral import ancestral_coefficients, ancestral_step
from .result import Snapshot, SolveResult, TRAJECTORY_COLUMNS
from .engine import ReverseDiffusionEngine, SamplerOptions
from .prior_pipeline import sample_prior
from .dps_pipeline import DpsPipeline, dps_nonblind
from .blind_pipeline import BlindDeblurPipeline, TurbulencePipeline, blind_dps_deblur, blind_dps_turbulence
from .uniform_pipeline import UniformPriorPipeline, uniform_prior_baseline
