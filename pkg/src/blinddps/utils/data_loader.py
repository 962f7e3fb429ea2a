"""
BlindDPS Configuration and Data Utilities

This module provides utility functions for loading the project configuration
and the synthetic datasets written by the `gen-dataset` command.
"""

import copy
import glob
import logging
import os
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import yaml

from ..exceptions import ArtifactIOError, ConfigError
from .paths import get_project_root

logger = logging.getLogger('blinddps')

DEFAULT_CONFIG: Dict[str, Any] = {
    'environment': {'current': 'development'},
    'paths': {
        'development': {
            'datasets': 'data/datasets/',
            'models': 'data/models/',
            'configs': 'data/configs/',
            'runs': 'runs/',
        }
    },
    'logging': {
        'level': 'INFO',
        'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        'file': None,
    },
    'schedule': {'n_steps': 1000, 'beta_min': 1e-4, 'beta_max': 0.02},
    'guidance': {
        'alpha': 0.3, 'reg': 'l1', 'lambda': 1.0, 'l0_threshold': 1e-3,
        'project_kernel': True, 'norm': 'unsquared',
        'alpha_x': 0.3, 'alpha_k': 0.3, 'sigma_init': 1.0,
    },
    'sampler': {'method': 'blind-deblur', 'seed': 0, 'snapshot_stride': None, 'final_noise': False},
    'forward': {'kind': 'blur', 'sigma': 0.02, 'boundary': 'circular', 'tilt_max_displacement': 8.0},
    'training': {
        'epochs': 50, 'batch_size': 64, 'learning_rate': 1e-3, 'momentum': 0.9,
        'hidden': [128, 128], 'activation': 'tanh', 'parameterization': 'eps',
        'weighting': 'noise', 'seed': 0,
    },
    'analysis': {'instances': 100, 'dimension': 4, 'sigmas': [0.1, 0.5, 1.0, 2.0], 'n_mc': 2000, 'seed': 0},
    'metrics': {'psnr_peak': 2.0},
}


def default_config_path() -> str:
    """Path of config.yml, honouring the BDPS_CONFIG environment variable."""
    return os.environ.get('BDPS_CONFIG', os.path.join(get_project_root(), 'config.yml'))


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """
    Recursively merge override into a copy of base.

    Args:
        base: Dictionary providing defaults
        override: Dictionary whose leaves win

    Returns:
        New merged dictionary
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load the project configuration from config.yml

    Args:
        config_path (str): Path to the configuration file

    Returns:
        Dict[str, Any]: Configuration dictionary, merged over built-in defaults
    """
    config_path = config_path or default_config_path()
    try:
        with open(config_path, 'r') as file:
            loaded = yaml.safe_load(file) or {}
    except FileNotFoundError:
        logger.warning(f"Config file not found at {config_path}; using built-in defaults")
        return copy.deepcopy(DEFAULT_CONFIG)
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed YAML in {config_path}: {e}") from e
    return deep_merge(DEFAULT_CONFIG, loaded)


def get_paths(config_path: Optional[str] = None) -> Dict[str, str]:
    """
    Get the relevant file paths from the configuration

    Args:
        config_path (str): Path to the configuration file

    Returns:
        Dict[str, str]: Dictionary of absolute paths (relative entries are
            taken from the project root)
    """
    config = load_config(config_path)
    env = config['environment']['current']
    if env not in config['paths']:
        raise ConfigError(f"No paths configured for environment '{env}'")
    root = get_project_root()
    return {key: os.path.join(root, os.path.expandvars(value)) for key, value in config['paths'][env].items()}


def load_dataset(directory: str) -> List[np.ndarray]:
    """
    Load a dataset written by `gen-dataset`.

    The directory holds one PFM file per item and an index.csv listing them
    in order; tilt datasets store a (_dx, _dy) pair per item.

    Args:
        directory: Dataset directory

    Returns:
        List of float64 arrays, in index order
    """
    # Imported here to keep utils importable without the exporters package
    from ..exporters.pfm import read_pfm, read_tilt

    if not os.path.isdir(directory):
        raise ArtifactIOError(f"Dataset directory not found: {directory}")

    index_file = os.path.join(directory, 'index.csv')
    if os.path.exists(index_file):
        index = pd.read_csv(index_file)
        names = index['name'].tolist()
        kinds = index['kind'].tolist() if 'kind' in index.columns else ['grid'] * len(names)
    else:
        names = sorted(os.path.basename(p) for p in glob.glob(os.path.join(directory, '*.pfm')))
        kinds = ['grid'] * len(names)

    items = []
    for name, kind in zip(names, kinds):
        path = os.path.join(directory, name)
        if kind == 'tilt':
            items.append(read_tilt(path))
        else:
            items.append(read_pfm(path))
    if not items:
        raise ArtifactIOError(f"Dataset directory is empty: {directory}")
    logger.info(f"Loaded {len(items)} items from {directory}")
    return items
