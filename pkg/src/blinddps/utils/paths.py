# src/blinddps/utils/paths.py
import os
from pathlib import Path
from typing import List, Optional


def get_project_root() -> str:
    """Return the absolute path to the project root directory."""
    current_path = Path(os.path.abspath(__file__))

    # The project root is the first ancestor holding config.yml
    for parent in [current_path, *current_path.parents]:
        if (parent / 'config.yml').exists():
            return str(parent)

    # utils -> blinddps -> src -> project_root
    return str(current_path.parents[3])


def resolve_path(path: str, base_dir: Optional[str] = None) -> str:
    """
    Resolve a possibly relative artifact path.

    Relative paths are tried against base_dir first (usually the directory of
    the experiment config that mentions them), then the working directory,
    then the project root.

    Args:
        path: Path as written in a config or on the command line
        base_dir: Directory the path is relative to, if known

    Returns:
        Absolute path (which may not exist)
    """
    if os.path.isabs(path):
        return path
    candidates: List[str] = []
    if base_dir:
        candidates.append(os.path.join(base_dir, path))
    candidates.append(os.path.abspath(path))
    candidates.append(os.path.join(get_project_root(), path))
    for candidate in candidates:
        if os.path.exists(candidate):
            return os.path.abspath(candidate)
    return os.path.abspath(candidates[0])

