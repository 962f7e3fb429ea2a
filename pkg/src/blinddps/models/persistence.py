"""
BDPSMDL1 model container.

Layout: the 8-byte magic "BDPSMDL1", a little-endian uint32 header length,
a UTF-8 JSON header, then the weight blocks named in the header as
little-endian float64 in header order.
"""

import json
import logging
import struct
from typing import Dict, Type

import numpy as np

from ..exceptions import ArtifactIOError, CapabilityError
from .analytic import GaussianScore, GmmScore
from .base import ScoreModel
from .mlp import MlpScore

logger = logging.getLogger('blinddps')

MAGIC = b'BDPSMDL1'
FORMAT_VERSION = 1

MODEL_CLASSES: Dict[str, Type[ScoreModel]] = {
    'gaussian': GaussianScore,
    'gmm': GmmScore,
    'mlp': MlpScore,
}


def model_to_bytes(model: ScoreModel) -> bytes:
    try:
        meta, blocks = model.to_state()
    except NotImplementedError as e:
        raise CapabilityError(str(e)) from e
    header = dict(meta)
    header['format_version'] = FORMAT_VERSION
    header['blocks'] = [{'name': name, 'shape': list(np.shape(array))} for name, array in blocks]
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')
    body = b''.join(np.ascontiguousarray(array, dtype='<f8').tobytes() for _, array in blocks)
    return MAGIC + struct.pack('<I', len(header_bytes)) + header_bytes + body


def model_from_bytes(data: bytes) -> ScoreModel:
    if data[:8] != MAGIC:
        raise ArtifactIOError("Not a BDPSMDL1 model file (bad magic)")
    if len(data) < 12:
        raise ArtifactIOError("Truncated model header")
    (header_len,) = struct.unpack('<I', data[8:12])
    try:
        header = json.loads(data[12:12 + header_len].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ArtifactIOError(f"Corrupt model header: {e}") from e
    if header.get('format_version') != FORMAT_VERSION:
        raise ArtifactIOError(f"Unsupported model format version {header.get('format_version')}")
    variant = header.get('variant')
    if variant not in MODEL_CLASSES:
        raise ArtifactIOError(f"Unknown model variant '{variant}'")

    offset = 12 + header_len
    blocks = {}
    for block in header['blocks']:
        shape = tuple(block['shape'])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise ArtifactIOError(f"Truncated weight block '{block['name']}'")
        blocks[block['name']] = np.frombuffer(data[offset:end], dtype='<f8').astype(np.float64).reshape(shape)
        offset = end
    return MODEL_CLASSES[variant].from_state(header, blocks)


def save_model(model: ScoreModel, path: str) -> str:
    """Write a model container; returns the path."""
    try:
        with open(path, 'wb') as f:
            f.write(model_to_bytes(model))
    except OSError as e:
        raise ArtifactIOError(f"Cannot write model {path}: {e}") from e
    logger.info(f"Saved {model.variant} model to {path}")
    return path


def load_model(path: str) -> ScoreModel:
    """Read a model container written by save_model."""
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except FileNotFoundError as e:
        raise ArtifactIOError(f"Model file not found: {path}") from e
    except OSError as e:
        raise ArtifactIOError(f"Cannot read model {path}: {e}") from e
    return model_from_bytes(data)
