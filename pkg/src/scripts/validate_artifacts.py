#!/usr/bin/env python
"""
Script to validate the outputs of BlindDPS runs.

Checks every manifest.json / *.manifest.json and metrics.json under a
directory against the packaged schemas, and re-hashes every artifact a
manifest lists.

Usage:
    python src/scripts/validate_artifacts.py runs/blind_deblur [report.json]
"""

import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional


def get_project_root():
    """Return the absolute path to the project root directory."""
    current_path = Path(os.path.abspath(__file__))
    # scripts -> src -> project_root
    return str(current_path.parents[2])


project_root = get_project_root()
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from src.blinddps.utils.hashing import content_hash
from src.blinddps.validators import ArtifactValidator

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger('blinddps_validation')


def check_manifest_hashes(manifest_path: str) -> List[str]:
    """Compare the hashes recorded in a manifest with the files on disk."""
    with open(manifest_path, 'r', encoding='utf-8') as f:
        manifest = json.load(f)
    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    problems = []
    for entry in manifest.get('inputs', []) + manifest.get('outputs', []):
        path = os.path.normpath(os.path.join(base_dir, entry['path']))
        if not os.path.exists(path):
            problems.append(f"{entry['path']}: missing")
        elif content_hash(path) != entry['hash']:
            problems.append(f"{entry['path']}: hash mismatch")
    return problems


def validate_directory(directory: str, output_file: Optional[str] = None) -> bool:
    """
    Validate every manifest and metrics file under a directory.

    Args:
        directory: Run directory (searched recursively)
        output_file: Optional path to save the validation report

    Returns:
        True if every document is valid and every hash matches
    """
    if not os.path.isdir(directory):
        logger.error(f"Directory not found: {directory}")
        return False

    validator = ArtifactValidator()
    report: Dict[str, Any] = {'total': 0, 'valid': 0, 'invalid': 0, 'errors': {}}
    for root, _, files in os.walk(directory):
        for name in sorted(files):
            if name.endswith('manifest.json'):
                schema_id = 'manifest'
            elif name == 'metrics.json':
                schema_id = 'metrics'
            else:
                continue
            path = os.path.join(root, name)
            result = validator.validate_file(path, schema_id)
            errors = [e for errs in result['errors'].values() for e in (errs if isinstance(errs, list) else [errs])]
            if schema_id == 'manifest' and not errors:
                errors.extend(check_manifest_hashes(path))
            report['total'] += 1
            if errors:
                report['invalid'] += 1
                report['errors'][os.path.relpath(path, directory)] = errors
            else:
                report['valid'] += 1

    logger.info(f"Validation results for {directory}:")
    logger.info(f"  Total documents: {report['total']}")
    logger.info(f"  Valid documents: {report['valid']}")
    logger.info(f"  Invalid documents: {report['invalid']}")
    for path, errors in report['errors'].items():
        for error in errors:
            logger.warning(f"  {path}: {error}")

    if output_file:
        with open(output_file, 'w', encoding='utf-8') as f:
            json.dump(report, f, ensure_ascii=False, indent=2)
        logger.info(f"Validation report saved to {output_file}")
    return report['invalid'] == 0


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print(f"Usage: python {sys.argv[0]} run_directory [output_report.json]")
        sys.exit(1)
    ok = validate_directory(sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else None)
    sys.exit(0 if ok else 1)
