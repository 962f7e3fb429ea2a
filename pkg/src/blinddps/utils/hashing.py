"""
Content hashing helpers for manifests.
"""

import hashlib
import json
from typing import Any


def content_hash_bytes(data: bytes) -> str:
    """Git-style blob hash of a byte string."""
    header = f"blob {len(data)}\0".encode('ascii')
    return hashlib.sha1(header + data).hexdigest()


def content_hash(path: str) -> str:
    """Git-style blob hash of a file's contents."""
    with open(path, 'rb') as f:
        return content_hash_bytes(f.read())


def config_hash(config: Any) -> str:
    """Stable hash of a JSON-serialisable config (keys sorted, compact separators)."""
    canonical = json.dumps(config, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()
