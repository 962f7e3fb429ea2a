"""
Build score models from experiment-config entries.
"""

import logging
from typing import Any, Dict, Optional

import numpy as np

from ..exceptions import ConfigError
from ..utils.paths import resolve_path
from .analytic import GaussianPrior, GaussianScore, GmmPrior, GmmScore
from .base import ScoreModel
from .persistence import load_model

logger = logging.getLogger('blinddps')


def build_score_model(entry: Optional[Any], base_dir: Optional[str] = None) -> Optional[ScoreModel]:
    """
    Create a score model from a config entry.

    Accepted forms:
        None or {"kind": "uniform"}: no prior (returns None)
        "path/to/model.bdps": model file
        {"kind": "gaussian", "mean": m, "var": v, "shape": [..]}
        {"kind": "gmm", "weights": [..], "means": [[..]], "vars": [[..]]}
        {"kind": "mlp" | "file", "path": ".."}

    Args:
        entry: Config entry
        base_dir: Directory relative paths are resolved against

    Returns:
        ScoreModel, or None for an absent prior
    """
    if entry is None:
        return None
    if isinstance(entry, str):
        entry = {'kind': 'file', 'path': entry}
    if not isinstance(entry, dict):
        raise ConfigError(f"Model entry must be a string or an object, got {type(entry).__name__}")

    kind = entry.get('kind', 'file')
    if kind in ('uniform', 'none'):
        return None
    if kind == 'gaussian':
        shape = tuple(entry['shape']) if 'shape' in entry else None
        prior = GaussianPrior(np.asarray(entry.get('mean', 0.0)), np.asarray(entry.get('var', 1.0)))
        if shape is None and prior.shape == ():
            raise ConfigError("Gaussian model entries with scalar moments need a 'shape'")
        return GaussianScore(prior, shape)
    if kind == 'gmm':
        try:
            prior = GmmPrior(np.asarray(entry['weights']), np.asarray(entry['means']), np.asarray(entry['vars']))
        except KeyError as e:
            raise ConfigError(f"GMM model entry is missing {e}") from e
        return GmmScore(prior)
    if kind in ('mlp', 'file'):
        if 'path' not in entry:
            raise ConfigError(f"Model entry of kind '{kind}' needs a 'path'")
        path = resolve_path(entry['path'], base_dir)
        logger.info(f"Loading score model from {path}")
        return load_model(path)
    raise ConfigError(f"Unknown model kind '{kind}'")
