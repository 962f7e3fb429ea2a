from abc import ABC, abstractmethod
from typing import List

import numpy as np


class BaseExporter(ABC):
    """Base class for writing grids (images, kernels, tilt channels) to files."""

    #: File extension including the leading dot
    extension = ''

    @abstractmethod
    def encode(self, grid: np.ndarray) -> bytes:
        """
        Encode a single grid in the target format.

        Args:
            grid: H×W or H×W×3 array

        Returns:
            File contents
        """
        pass

    @abstractmethod
    def decode(self, data: bytes) -> np.ndarray:
        """
        Decode file contents back to an array.

        Args:
            data: File contents

        Returns:
            float64 array
        """
        pass

    def export_to_file(self, grid: np.ndarray, output_file: str) -> str:
        """
        Write a grid to a file, adding the format extension when missing.

        Args:
            grid: Array to write
            output_file: Path to the output file

        Returns:
            The path actually written
        """
        if self.extension and not output_file.endswith(self.extension):
            output_file += self.extension
        data = self.encode(grid)
        with open(output_file, 'wb') as f:
            f.write(data)
        return output_file

    def export_many(self, grids: List[np.ndarray], output_files: List[str]) -> List[str]:
        """Write several grids, one file each."""
        return [self.export_to_file(g, p) for g, p in zip(grids, output_files)]

    def import_from_file(self, input_file: str) -> np.ndarray:
        with open(input_file, 'rb') as f:
            return self.decode(f.read())
