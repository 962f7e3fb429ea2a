"""
BlindDPS library code.

This package contains the diffusion schedule, score models, forward operators,
guidance, samplers, analysis tools and the command line driver.
"""

__version__ = '0.3.0'

# Import key submodules
from . import diffusion
from . import operators
from . import guidance
from . import utils
