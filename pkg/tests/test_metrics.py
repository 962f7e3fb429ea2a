#!/usr/bin/env python
"""
Tests for PSNR/MSE, kernel MNC and metric reports.
"""

import json
import os
import sys

import numpy as np
import pytest

project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, project_root)

from src.blinddps.exceptions import ParameterError, ShapeError
from src.blinddps.metrics import MetricReport, evaluate, mnc, mnc_with_flag, mse, psnr
from src.blinddps.pipeline import SolveResult, Snapshot


def _mnc_exhaustive(a, b):
    """Scan every circular shift of b against a."""
    best = -np.inf
    for dr in range(a.shape[0]):
        for dc in range(a.shape[1]):
            best = max(best, float(np.sum(a * np.roll(b, (dr, dc), axis=(0, 1)))))
    return best / (np.linalg.norm(a) * np.linalg.norm(b))


def test_mnc_of_a_kernel_with_itself(rng):
    k = rng.random((5, 5))
    assert mnc(k, k) == pytest.approx(1.0, abs=1e-12)


def test_mnc_is_shift_invariant(rng):
    k = rng.random((7, 7))
    assert mnc(np.roll(k, (2, -3), axis=(0, 1)), k) == pytest.approx(1.0, abs=1e-12)


def test_mnc_of_deltas():
    a = np.zeros((5, 5))
    b = np.zeros((5, 5))
    a[0, 0] = 1.0
    b[3, 1] = 2.0
    assert mnc(a, b) == pytest.approx(1.0, abs=1e-12)


def test_mnc_matches_exhaustive_scan(rng):
    for _ in range(5):
        a = rng.random((4, 6))
        b = rng.random((4, 6))
        assert mnc(a, b) == pytest.approx(_mnc_exhaustive(a, b), rel=1e-10)
        assert mnc(a, b) <= 1.0 + 1e-12


def test_mnc_pads_mismatched_shapes(caplog):
    small = np.zeros((3, 3))
    small[1, 1] = 1.0
    large = np.zeros((5, 5))
    large[2, 2] = 1.0
    value, padded = mnc_with_flag(small, large)
    assert padded
    assert value == pytest.approx(1.0)
    assert 'zero-padding' in caplog.text
    assert not mnc_with_flag(large, large)[1]


def test_mnc_errors():
    with pytest.raises(ParameterError):
        mnc(np.zeros((3, 3)), np.ones((3, 3)))
    with pytest.raises(ShapeError):
        mnc(np.ones(3), np.ones((3, 3)))


def test_psnr_of_a_constant_offset():
    x = np.zeros((8, 8))
    assert mse(x + 0.1, x) == pytest.approx(0.01)
    assert psnr(x + 0.1, x) == pytest.approx(26.0206, abs=1e-4)
    assert psnr(x + 0.1, x, peak=1.0) == pytest.approx(20.0, abs=1e-9)


def test_psnr_of_identical_images_is_infinite():
    x = np.ones((3, 3))
    assert psnr(x, x) == float('inf')


def test_psnr_errors():
    with pytest.raises(ShapeError):
        psnr(np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(ParameterError):
        psnr(np.zeros(2), np.ones(2), peak=0.0)


def test_report_writes_infinite_psnr_as_a_string():
    report = MetricReport(psnr=float('inf'), mse_image=0.0, mnc=1.0)
    data = report.to_json_dict()
    assert data['psnr'] == '+inf'
    # strict JSON, no Infinity literal
    text = json.dumps(data, allow_nan=False)
    restored = MetricReport.from_json_dict(json.loads(text))
    assert restored.psnr == float('inf')
    assert restored.mnc == 1.0


def test_evaluate_with_solve_result(rng):
    x_true = rng.uniform(-1, 1, (6, 6))
    k_true = np.full((3, 3), 1.0 / 9.0)
    k_est = np.zeros((3, 3))
    k_est[1, 1] = 1.0
    trajectory = [
        Snapshot(step=20, t=1.0, residual=2.0, x_hat=x_true, mse_kernel=0.3),
        Snapshot(step=10, t=0.5, residual=1.0, x_hat=x_true, mse_kernel=0.1),
        Snapshot(step=1, t=0.05, residual=0.5, x_hat=x_true, mse_kernel=0.2),
    ]
    result = SolveResult(x0=x_true + 0.1, k0=k_est, trajectory=trajectory, final_residual=0.5)
    report = evaluate(result.x0, x_true, k_est, k_true, y=x_true + 0.2, result=result, config_hash='abc')
    assert report.psnr == pytest.approx(26.0206, abs=1e-4)
    assert report.psnr_measurement < report.psnr
    assert report.mnc == pytest.approx(1.0 / 3.0)
    assert report.mse_kernel == pytest.approx(np.mean((k_est - k_true) ** 2))
    assert report.argmin_kernel_mse_step == 10
    assert report.final_residual == 0.5
    assert report.config_hash == 'abc'
    assert not report.kernel_padded


def test_evaluate_without_truth():
    report = evaluate(np.zeros((2, 2)))
    assert report.psnr is None and report.mnc is None
    assert report.argmin_kernel_mse_step is None
