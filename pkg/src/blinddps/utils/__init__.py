"""
Utility functions for the BlindDPS toolkit.
"""

from .paths import get_project_root, resolve_path
from .data_loader import load_config, get_paths, load_dataset, deep_merge, DEFAULT_CONFIG
from .rng import RandomStreams, as_generator, as_streams
from .hashing import content_hash, content_hash_bytes, config_hash
