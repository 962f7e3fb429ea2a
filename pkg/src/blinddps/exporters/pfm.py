"""
Portable FloatMap (PFM) artifacts.

This module provides reading and writing of PFM files, the lossless format
used for images, kernels and tilt-field channels. Files are written as
32-bit little-endian floats with rows stored bottom-to-top.
"""

import logging
import os
import re
from typing import Tuple

import numpy as np

from ..exceptions import ArtifactIOError, ShapeError
from .base import BaseExporter

logger = logging.getLogger('blinddps')

_HEADER = re.compile(rb'^(P[Ff])\s+(\d+)\s+(\d+)\s+(-?[0-9.eE+-]+)\s')


class PfmExporter(BaseExporter):
    """Exporter for "Pf" (grayscale) and "PF" (three channel) float maps."""

    extension = '.pfm'

    def encode(self, grid: np.ndarray) -> bytes:
        grid = np.asarray(grid, dtype=np.float64)
        if grid.ndim == 2:
            magic = b'Pf'
        elif grid.ndim == 3 and grid.shape[2] == 3:
            magic = b'PF'
        elif grid.ndim == 3 and grid.shape[2] == 1:
            magic = b'Pf'
            grid = grid[:, :, 0]
        else:
            raise ShapeError(f"PFM stores H×W or H×W×3 grids, got shape {grid.shape}")
        if not np.all(np.isfinite(grid)):
            raise ArtifactIOError("Refusing to write non-finite values to PFM")

        height, width = grid.shape[:2]
        header = magic + f"\n{width} {height}\n-1.0\n".encode('ascii')
        body = np.flipud(grid).astype('<f4').tobytes()
        return header + body

    def decode(self, data: bytes) -> np.ndarray:
        match = _HEADER.match(data)
        if not match:
            raise ArtifactIOError("Not a PFM file (bad header)")
        magic, width, height, scale = match.groups()
        width, height = int(width), int(height)
        channels = 3 if magic == b'PF' else 1
        try:
            scale = float(scale)
        except ValueError as e:
            raise ArtifactIOError(f"Bad PFM scale field: {scale!r}") from e
        if scale == 0.0:
            raise ArtifactIOError("PFM scale must be non-zero")
        dtype = '<f4' if scale < 0 else '>f4'

        body = data[match.end():]
        expected = width * height * channels * 4
        if len(body) < expected:
            raise ArtifactIOError(f"Truncated PFM body: {len(body)} of {expected} bytes")
        values = np.frombuffer(body[:expected], dtype=dtype).astype(np.float64)
        shape: Tuple[int, ...] = (height, width, 3) if channels == 3 else (height, width)
        return np.flipud(values.reshape(shape)).copy() * abs(scale)


_EXPORTER = PfmExporter()


def write_pfm(path: str, grid: np.ndarray) -> str:
    """Write a grid to `path` (".pfm" appended when missing)."""
    try:
        return _EXPORTER.export_to_file(grid, path)
    except OSError as e:
        raise ArtifactIOError(f"Cannot write {path}: {e}") from e


def read_pfm(path: str) -> np.ndarray:
    """Read a PFM file as a float64 array."""
    if not os.path.exists(path) and os.path.exists(path + '.pfm'):
        path = path + '.pfm'
    try:
        return _EXPORTER.import_from_file(path)
    except FileNotFoundError as e:
        raise ArtifactIOError(f"File not found: {path}") from e
    except OSError as e:
        raise ArtifactIOError(f"Cannot read {path}: {e}") from e


def _tilt_prefix(path: str) -> str:
    for suffix in ('_dx.pfm', '_dy.pfm', '.pfm'):
        if path.endswith(suffix):
            return path[:-len(suffix)]
    return path


def write_tilt(prefix: str, phi: np.ndarray) -> Tuple[str, str]:
    """
    Write a tilt field as two grayscale PFMs `<prefix>_dx.pfm` and `<prefix>_dy.pfm`.

    Args:
        prefix: Path prefix
        phi: H×W×2 displacement field (dx, dy)

    Returns:
        Paths of the two files written
    """
    phi = np.asarray(phi)
    if phi.ndim != 3 or phi.shape[2] != 2:
        raise ShapeError(f"Tilt fields must be H×W×2, got {phi.shape}")
    prefix = _tilt_prefix(prefix)
    return (write_pfm(prefix + '_dx.pfm', phi[:, :, 0]),
            write_pfm(prefix + '_dy.pfm', phi[:, :, 1]))


def read_tilt(prefix: str) -> np.ndarray:
    """Read a tilt field written by write_tilt."""
    prefix = _tilt_prefix(prefix)
    dx = read_pfm(prefix + '_dx.pfm')
    dy = read_pfm(prefix + '_dy.pfm')
    if dx.shape != dy.shape:
        raise ArtifactIOError(f"Tilt channels disagree in shape: {dx.shape} vs {dy.shape}")
    return np.stack([dx, dy], axis=-1)
