"""
Synthetic toy datasets.

This module provides small images (bars, blobs), exact draws from a GMM
prior, and collections of generated kernels and tilt fields, so that every
experiment runs without external data. Item j of a dataset always comes
from the sub-stream (seed, data, j).
"""

import logging
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..exceptions import ParameterError
from ..models.analytic import GmmPrior
from ..operators.generators import gen_gaussian_kernel, gen_motion_kernel, gen_tilt_field
from ..utils.rng import as_generator, as_streams

logger = logging.getLogger('blinddps')

DATASET_KINDS = ('bars', 'blobs', 'mixed', 'gmm', 'motion-kernels', 'gaussian-kernels', 'tilts')


def gen_bars(size: int, rng) -> np.ndarray:
    """
    Bright axis-aligned bars on a dark background, values in [−1, 1].

    Args:
        size: Side length
        rng: Generator, RandomStreams or seed

    Returns:
        size×size image
    """
    gen = as_generator(rng, branch='data')
    image = -np.ones((size, size))
    for _ in range(gen.integers(1, 4)):
        width = int(gen.integers(1, max(2, size // 4) + 1))
        start = int(gen.integers(0, size - width + 1))
        lo = int(gen.integers(0, size // 2))
        hi = int(gen.integers(size // 2 + 1, size + 1))
        if gen.random() < 0.5:
            image[lo:hi, start:start + width] = 1.0
        else:
            image[start:start + width, lo:hi] = 1.0
    return image


def gen_blobs(size: int, rng) -> np.ndarray:
    """Sum of one to three isotropic Gaussian blobs rescaled to [−1, 1]."""
    gen = as_generator(rng, branch='data')
    rows, cols = np.meshgrid(np.arange(size), np.arange(size), indexing='ij')
    image = np.zeros((size, size))
    for _ in range(gen.integers(1, 4)):
        center = gen.uniform(0.0, size - 1.0, size=2)
        width = gen.uniform(size / 10.0, size / 4.0)
        image += np.exp(-((rows - center[0]) ** 2 + (cols - center[1]) ** 2) / (2.0 * width ** 2))
    return 2.0 * image / image.max() - 1.0


def gen_gmm_draws(prior: GmmPrior, count: int, rng) -> List[np.ndarray]:
    """Exact draws from a Gaussian-mixture prior."""
    gen = as_generator(rng, branch='data')
    return list(prior.sample(count, gen))


def make_dataset(kind: str, count: int, size: int = 16, seed: int = 0,
                 params: Optional[Dict[str, Any]] = None) -> List[np.ndarray]:
    """
    Deterministic synthetic dataset.

    Args:
        kind: One of DATASET_KINDS
        count: Number of items
        size: Image or kernel side length
        seed: Run seed
        params: Kind-specific settings (intensity, std, amplitude, grid_n,
            smooth_std, tilt_shape, gmm prior arrays)

    Returns:
        List of arrays
    """
    if kind not in DATASET_KINDS:
        raise ParameterError(f"Unknown dataset kind '{kind}', expected one of {DATASET_KINDS}")
    if count < 1:
        raise ParameterError(f"Dataset size must be positive, got {count}")
    params = dict(params or {})
    streams = as_streams(seed)

    if kind == 'gmm':
        prior = params.get('prior')
        if prior is None:
            prior = GmmPrior(np.asarray(params.get('weights', [0.5, 0.5])),
                             np.asarray(params.get('means', [[-2.0], [2.0]])),
                             np.asarray(params.get('vars', [[0.25], [0.25]])))
        return gen_gmm_draws(prior, count, streams.generator('data', 0))

    items = []
    for j in range(count):
        gen = streams.child('data', j).generator('generator')
        if kind == 'bars':
            items.append(gen_bars(size, gen))
        elif kind == 'blobs':
            items.append(gen_blobs(size, gen))
        elif kind == 'mixed':
            items.append(gen_bars(size, gen) if j % 2 == 0 else gen_blobs(size, gen))
        elif kind == 'motion-kernels':
            intensity = params.get('intensity')
            if intensity is None:
                intensity = gen.uniform(0.0, 1.0)
            items.append(gen_motion_kernel(float(intensity), size, gen))
        elif kind == 'gaussian-kernels':
            std = params.get('std')
            if std is None:
                std = gen.uniform(0.5, size / 3.0)
            items.append(gen_gaussian_kernel(float(std), size))
        else:
            shape: Tuple[int, int] = tuple(params.get('tilt_shape', (size, size)))
            items.append(gen_tilt_field(int(params.get('grid_n', 8)), float(params.get('smooth_std', 1.0)),
                                        float(params.get('amplitude', 1.0)), shape, gen))
    logger.info(f"Generated {count} '{kind}' items (seed {seed})")
    return items


def write_dataset(items: List[np.ndarray], directory: str, kind: str) -> str:
    """
    Write a dataset as PFM files plus an index.csv read back by load_dataset.

    One-dimensional items are stored as 1×D grids; tilt items as a pair of
    `_dx`/`_dy` files.

    Returns:
        Path of the index file
    """
    # Imported here so that the generators work without the exporters package
    from ..exporters.pfm import write_pfm, write_tilt

    os.makedirs(directory, exist_ok=True)
    rows = []
    for j, item in enumerate(items):
        name = f"item_{j:05d}"
        if kind == 'tilts':
            write_tilt(os.path.join(directory, name), item)
            rows.append({'name': name, 'kind': 'tilt'})
        else:
            grid = np.atleast_2d(item)
            write_pfm(os.path.join(directory, name + '.pfm'), grid)
            rows.append({'name': name + '.pfm', 'kind': 'grid'})
    index_file = os.path.join(directory, 'index.csv')
    pd.DataFrame(rows, columns=['name', 'kind']).to_csv(index_file, index=False)
    logger.info(f"Wrote {len(rows)} items to {directory}")
    return index_file
