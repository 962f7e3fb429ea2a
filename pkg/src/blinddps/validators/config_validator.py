"""
JSON Schema validator for BlindDPS documents.

This module validates experiment configs, metrics.json reports and
manifest.json files against the Draft-7 schemas shipped in
`blinddps/schemas`.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from jsonschema import Draft7Validator, FormatChecker

from ..exceptions import ArtifactIOError, ConfigError
from ..schemas import SCHEMA_DIR

logger = logging.getLogger('blinddps_validation')

SCHEMA_IDS = ('experiment', 'metrics', 'manifest')


class ArtifactValidator:
    """Validator for the JSON documents the command line reads and writes."""

    def __init__(self, schema_dir: Optional[str] = None):
        """
        Initialize the validator with schemas.

        Args:
            schema_dir: Directory containing `<schema_id>.json` files
                (defaults to the packaged schemas)
        """
        self.schema_dir = schema_dir or SCHEMA_DIR
        self.schemas: Dict[str, Dict[str, Any]] = {}
        self.load_schemas()

    def load_schemas(self):
        """Load every *.json schema in the schema directory, keyed by file stem."""
        if not os.path.isdir(self.schema_dir):
            raise ArtifactIOError(f"Schema directory not found: {self.schema_dir}")
        for schema_file in sorted(os.listdir(self.schema_dir)):
            if not schema_file.endswith('.json'):
                continue
            schema_path = os.path.join(self.schema_dir, schema_file)
            try:
                with open(schema_path, 'r', encoding='utf-8') as f:
                    schema = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                logger.error(f"Error loading schema {schema_file}: {str(e)}")
                continue
            Draft7Validator.check_schema(schema)
            self.schemas[Path(schema_file).stem] = schema
            logger.debug(f"Loaded schema: {Path(schema_file).stem}")

    @staticmethod
    def infer_schema_id(document: Dict[str, Any]) -> Optional[str]:
        """Guess the schema of a document from its keys."""
        if not isinstance(document, dict):
            return None
        if 'outputs' in document and 'tool' in document:
            return 'manifest'
        if 'mnc' in document or 'psnr' in document:
            return 'metrics'
        if set(document) & {'schedule', 'models', 'forward', 'guidance', 'sampler', 'io'}:
            return 'experiment'
        return None

    def validate_document(self, document: Any, schema_id: Optional[str] = None) -> Tuple[bool, List[str]]:
        """
        Validate a single document against a schema.

        Args:
            document: Parsed JSON document
            schema_id: Schema to use; inferred from the document when None

        Returns:
            Tuple of (is_valid, error_messages), messages formatted as
            "<json path>: <message>"
        """
        if not schema_id:
            schema_id = self.infer_schema_id(document)
            if schema_id is None:
                return False, ["Unable to determine document type for validation"]

        if schema_id not in self.schemas:
            return False, [f"Schema '{schema_id}' not found"]

        validator = Draft7Validator(self.schemas[schema_id], format_checker=FormatChecker())
        errors = sorted(validator.iter_errors(document), key=lambda e: list(e.path))
        if errors:
            messages = []
            for error in errors:
                path = '/'.join(str(p) for p in error.path) if error.path else '(root)'
                messages.append(f"{path}: {error.message}")
            return False, messages
        return True, []

    def validate_documents(self, documents: List[Any], schema_id: Optional[str] = None) -> Dict[str, Any]:
        """
        Validate a list of documents.

        Returns:
            Dict with total, valid and invalid counts and errors per document
        """
        results = {'total': len(documents), 'valid': 0, 'invalid': 0, 'errors': {}}
        for i, doc in enumerate(documents):
            is_valid, errors = self.validate_document(doc, schema_id)
            if is_valid:
                results['valid'] += 1
            else:
                results['invalid'] += 1
                results['errors'][f"document_{i}"] = errors
        return results

    def validate_file(self, file_path: str, schema_id: Optional[str] = None) -> Dict[str, Any]:
        """
        Validate the document(s) in a JSON file.

        Args:
            file_path: Path to a JSON file holding one document or a list
            schema_id: Schema to use; inferred per document when None

        Returns:
            Dict with validation results; unreadable files are reported under
            errors['file_error']
        """
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            return {'total': 0, 'valid': 0, 'invalid': 0, 'errors': {'file_error': str(e)}}
        documents = data if isinstance(data, list) else [data]
        return self.validate_documents(documents, schema_id)

    def check(self, document: Any, schema_id: str, source: str = 'document'):
        """Raise ConfigError listing every violation when the document is invalid."""
        is_valid, errors = self.validate_document(document, schema_id)
        if not is_valid:
            for error in errors:
                logger.error(f"{source}: {error}")
            raise ConfigError(f"{source} does not match the '{schema_id}' schema: " + '; '.join(errors))


def validate_document(document: Any, schema_id: Optional[str] = None) -> Tuple[bool, List[str]]:
    """Validate a document with the packaged schemas."""
    return ArtifactValidator().validate_document(document, schema_id)


def validate_file(path: str, schema_id: Optional[str] = None) -> Dict[str, Any]:
    """Validate a JSON file with the packaged schemas."""
    return ArtifactValidator().validate_file(path, schema_id)
