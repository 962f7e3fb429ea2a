"""
Schema validation of experiment configs, metrics and manifests.
"""

from .config_validator import SCHEMA_IDS, ArtifactValidator, validate_document, validate_file
