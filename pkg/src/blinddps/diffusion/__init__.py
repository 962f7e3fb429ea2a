"""
Diffusion schedule package.

This package contains the discrete variance-preserving schedule and the
forward noising process shared by every chain.
"""

from .schedule import (
    NoiseSchedule,
    make_schedule,
    default_schedule,
    schedule_from_config,
    diffuse,
    true_conditional_score,
)
