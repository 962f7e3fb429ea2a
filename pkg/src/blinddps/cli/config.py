"""
Experiment configuration for the command line.

The effective configuration of a run is config.yml (project defaults), then
the experiment JSON document, then `--set dot.path=value` overrides.
"""

import copy
import json
import logging
import os
from typing import Any, Dict, List, Optional, Tuple

from ..exceptions import ArtifactIOError, ConfigError
from ..utils.data_loader import deep_merge, load_config
from ..validators import ArtifactValidator

logger = logging.getLogger('blinddps_cli')

# Sections of config.yml that are not part of an experiment document
PROJECT_SECTIONS = ('environment', 'paths', 'logging')


def parse_value(text: str) -> Any:
    """Parse an override value as a JSON literal, falling back to the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_overrides(assignments: Optional[List[str]]) -> Dict[str, Any]:
    """
    Turn ["guidance.alpha=0.3", ...] into a nested dict.

    Raises:
        ConfigError: If an assignment has no '=' or an empty path segment
    """
    nested: Dict[str, Any] = {}
    for assignment in assignments or []:
        if '=' not in assignment:
            raise ConfigError(f"Override '{assignment}' must look like section.key=value")
        path, raw = assignment.split('=', 1)
        keys = path.strip().split('.')
        if any(not key for key in keys):
            raise ConfigError(f"Bad override path '{path}'")
        node = nested
        for key in keys[:-1]:
            child = node.setdefault(key, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Override '{path}' conflicts with an earlier scalar override")
            node = child
        node[keys[-1]] = parse_value(raw)
    return nested


def read_experiment(path: str) -> Tuple[Dict[str, Any], str]:
    """
    Read an experiment JSON document.

    Returns:
        (document, directory of the document) for resolving relative paths
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except FileNotFoundError as e:
        raise ArtifactIOError(f"Experiment config not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON in {path}: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError(f"Experiment config {path} must hold a JSON object")
    return document, os.path.dirname(os.path.abspath(path))


def effective_config(document: Optional[Dict[str, Any]] = None, overrides: Optional[List[str]] = None,
                     project_config: Optional[str] = None,
                     validator: Optional[ArtifactValidator] = None) -> Dict[str, Any]:
    """
    Merge project defaults, an experiment document and overrides.

    The document with its overrides applied is validated against the
    experiment schema before merging.

    Args:
        document: Experiment document (may be empty)
        overrides: `--set` assignments
        project_config: Alternative config.yml
        validator: Validator to reuse

    Returns:
        Experiment configuration without the project-only sections
    """
    experiment = deep_merge(document or {}, parse_overrides(overrides))
    validator = validator or ArtifactValidator()
    validator.check(experiment, 'experiment', source='experiment config')

    defaults = load_config(project_config)
    base = {key: value for key, value in defaults.items() if key not in PROJECT_SECTIONS}
    base.setdefault('models', {})
    base.setdefault('io', {})
    merged = deep_merge(base, experiment)
    logger.debug(f"Effective config: {json.dumps(merged, sort_keys=True, default=str)}")
    return merged


def logging_settings(project_config: Optional[str] = None) -> Dict[str, Any]:
    """The `logging` section of config.yml."""
    return copy.deepcopy(load_config(project_config).get('logging', {}))
