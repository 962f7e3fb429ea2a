"""
Command line driver: generation, training, degradation, solving, evaluation
and analysis subcommands with reproducible manifests.
"""

from .main import build_parser, main
