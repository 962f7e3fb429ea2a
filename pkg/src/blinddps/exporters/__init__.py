"""
Artifact exporters.

This package contains the PFM reader/writer used for every numeric artifact
and the 8-bit Netpbm preview writer.
"""

from .base import BaseExporter
from .pfm import PfmExporter, read_pfm, write_pfm, read_tilt, write_tilt
from .netpbm import NetpbmExporter, export_netpbm
