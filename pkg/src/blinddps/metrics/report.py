"""
Per-run metric reports (metrics.json).
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..pipeline.result import SolveResult
from .image import DEFAULT_PEAK, mse, psnr
from .kernel import mnc_with_flag

INF_SENTINEL = '+inf'


@dataclass
class MetricReport:
    """Scores of one solve against ground truth."""

    psnr: Optional[float] = None
    mse_image: Optional[float] = None
    mse_kernel: Optional[float] = None
    mnc: Optional[float] = None
    argmin_kernel_mse_step: Optional[int] = None
    final_residual: Optional[float] = None
    psnr_measurement: Optional[float] = None
    kernel_padded: bool = False
    psnr_peak: float = DEFAULT_PEAK
    config_hash: Optional[str] = None

    def to_json_dict(self) -> Dict[str, Any]:
        """Plain dict with infinite PSNR values written as "+inf"."""
        out = asdict(self)
        for key in ('psnr', 'psnr_measurement'):
            if out[key] is not None and math.isinf(out[key]):
                out[key] = INF_SENTINEL
        return out

    @classmethod
    def from_json_dict(cls, data: Dict[str, Any]) -> 'MetricReport':
        data = dict(data)
        for key in ('psnr', 'psnr_measurement'):
            if data.get(key) == INF_SENTINEL:
                data[key] = float('inf')
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


def evaluate(x_est: np.ndarray, x_true: Optional[np.ndarray] = None, k_est: Optional[np.ndarray] = None,
             k_true: Optional[np.ndarray] = None, y: Optional[np.ndarray] = None,
             peak: float = DEFAULT_PEAK, result: Optional[SolveResult] = None,
             config_hash: Optional[str] = None) -> MetricReport:
    """
    Score estimates against whatever ground truth is available.

    Args:
        x_est: Image estimate
        x_true: True image
        k_est: Kernel estimate
        k_true: True kernel
        y: Measurement, for the PSNR of the degraded input
        peak: PSNR peak of the data range
        result: Solve result supplying trajectory summaries
        config_hash: Hash of the effective experiment config

    Returns:
        MetricReport
    """
    report = MetricReport(psnr_peak=peak, config_hash=config_hash)
    if x_true is not None:
        report.mse_image = mse(x_est, x_true)
        report.psnr = psnr(x_est, x_true, peak)
        if y is not None:
            report.psnr_measurement = psnr(y, x_true, peak)
    if k_est is not None and k_true is not None:
        report.mnc, report.kernel_padded = mnc_with_flag(k_est, k_true)
        if np.shape(k_est) == np.shape(k_true):
            report.mse_kernel = mse(k_est, k_true)
    if result is not None:
        report.argmin_kernel_mse_step = result.argmin_kernel_mse_step()
        report.final_residual = result.final_residual
    return report
