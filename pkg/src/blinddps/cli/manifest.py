"""
Run manifests.

A manifest echoes the effective configuration of a command and lists every
input and output artifact with its git-style content hash.
"""

import datetime
import json
import logging
import os
from typing import Any, Dict, Iterable, Optional

import pytz

from .. import __version__
from ..exceptions import ArtifactIOError
from ..utils.hashing import config_hash, content_hash
from ..validators import ArtifactValidator

logger = logging.getLogger('blinddps_cli')


def _entry(path: str, base_dir: str) -> Dict[str, str]:
    if not os.path.exists(path):
        raise ArtifactIOError(f"Manifest artifact does not exist: {path}")
    relative = os.path.relpath(os.path.abspath(path), base_dir)
    return {'path': relative.replace(os.sep, '/'), 'hash': content_hash(path)}


def build_manifest(command: str, config: Dict[str, Any], outputs: Iterable[str],
                   inputs: Iterable[str] = (), seed: Optional[int] = None,
                   base_dir: Optional[str] = None) -> Dict[str, Any]:
    """
    Assemble a manifest document.

    Args:
        command: Subcommand name
        config: Effective configuration
        outputs: Paths written by the command
        inputs: Paths read by the command
        seed: Run seed, when the command is random
        base_dir: Directory artifact paths are made relative to

    Returns:
        Manifest dict matching the manifest schema
    """
    base_dir = os.path.abspath(base_dir or os.getcwd())
    return {
        'tool': 'blinddps',
        'version': __version__,
        'command': command,
        'created': datetime.datetime.now(pytz.utc).isoformat(),
        'seed': seed,
        'config': json.loads(json.dumps(config, default=str)),
        'config_hash': config_hash(config),
        'inputs': [_entry(p, base_dir) for p in inputs],
        'outputs': [_entry(p, base_dir) for p in outputs],
    }


def write_manifest(path: str, command: str, config: Dict[str, Any], outputs: Iterable[str],
                   inputs: Iterable[str] = (), seed: Optional[int] = None) -> str:
    """Build, validate and write a manifest; artifact paths are relative to its directory."""
    directory = os.path.dirname(os.path.abspath(path))
    manifest = build_manifest(command, config, outputs, inputs, seed, directory)
    ArtifactValidator().check(manifest, 'manifest', source='manifest')
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, ensure_ascii=False, indent=2)
    logger.info(f"Wrote manifest with {len(manifest['outputs'])} outputs to {path}")
    return path


def manifest_path_for(output: str) -> str:
    """Manifest path next to a single-file output: `<stem>.manifest.json`."""
    stem, _ = os.path.splitext(output)
    return stem + '.manifest.json'
