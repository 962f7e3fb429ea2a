"""
8-bit Netpbm previews (PGM/PPM).

Values in [−1, 1] are mapped linearly to [0, 255] with clipping. These files
are for viewing only and are never read back by the solver.
"""

import numpy as np

from ..exceptions import ArtifactIOError, ShapeError
from .base import BaseExporter


def to_display_range(grid: np.ndarray) -> np.ndarray:
    """Map [−1, 1] to 8-bit levels."""
    scaled = np.round((np.asarray(grid, dtype=np.float64) + 1.0) * 127.5)
    return np.clip(scaled, 0, 255).astype(np.uint8)


class NetpbmExporter(BaseExporter):
    """Binary PGM ("P5") for grayscale and PPM ("P6") for three channel grids."""

    def encode(self, grid: np.ndarray) -> bytes:
        grid = np.asarray(grid)
        if grid.ndim == 3 and grid.shape[2] == 1:
            grid = grid[:, :, 0]
        if grid.ndim == 2:
            magic = b'P5'
        elif grid.ndim == 3 and grid.shape[2] == 3:
            magic = b'P6'
        else:
            raise ShapeError(f"Netpbm stores H×W or H×W×3 grids, got shape {grid.shape}")
        height, width = grid.shape[:2]
        return magic + f"\n{width} {height}\n255\n".encode('ascii') + to_display_range(grid).tobytes()

    def decode(self, data: bytes) -> np.ndarray:
        parts = data.split(maxsplit=4)
        if len(parts) < 5 or parts[0] not in (b'P5', b'P6'):
            raise ArtifactIOError("Not a binary PGM/PPM file")
        width, height = int(parts[1]), int(parts[2])
        channels = 3 if parts[0] == b'P6' else 1
        levels = np.frombuffer(parts[4][:width * height * channels], dtype=np.uint8)
        shape = (height, width, 3) if channels == 3 else (height, width)
        return levels.reshape(shape).astype(np.float64) / 127.5 - 1.0


def export_netpbm(path: str, grid: np.ndarray) -> str:
    """Write an 8-bit preview; the extension is chosen from the channel count."""
    grid = np.asarray(grid)
    exporter = NetpbmExporter()
    exporter.extension = '.ppm' if grid.ndim == 3 and grid.shape[2] == 3 else '.pgm'
    try:
        return exporter.export_to_file(grid, path)
    except OSError as e:
        raise ArtifactIOError(f"Cannot write {path}: {e}") from e
