"""
Evaluation metrics.

This package contains PSNR/MSE, kernel MNC and the per-run MetricReport.
"""

from .image import mse, psnr
from .kernel import mnc, mnc_with_flag
from .report import MetricReport, evaluate
