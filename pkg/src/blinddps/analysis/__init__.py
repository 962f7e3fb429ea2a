"""
Numerical checks of the plug-in likelihood approximation.

This package contains linear-Gaussian toy problems, exact posteriors,
Lipschitz constants of the Gaussian density, the Monte-Carlo Jensen gap
with its upper bound, and the σ-sweep experiment.
"""

from .toy import ToyProblem
from .posterior import exact_posterior_gaussian, conditional_gaussian
from .lipschitz import (
    gaussian_density,
    lipschitz_constant,
    certified_lipschitz_constant,
    lipschitz_check,
    lipschitz_table,
)
from .jensen import GapEstimate, GapBound, jensen_gap_empirical, jensen_gap_bound
from .experiments import GAP_COLUMNS, random_gap_instance, gap_sweep, summarize_gap_sweep, step_for_alpha_bar
