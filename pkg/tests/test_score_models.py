#!/usr/bin/env python
"""
Tests for the score models: analytic Gaussian and GMM scores, the MLP score,
denoising score matching and the BDPSMDL1 container.
"""

import os
import sys

import numpy as np
import pytest

project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, project_root)

from src.blinddps.diffusion import default_schedule
from src.blinddps.exceptions import (ArtifactIOError, BlindDPSException, CapabilityError, ConfigError,
                                     DivergenceError, ParameterError, ShapeError)
from src.blinddps.models import (GaussianPrior, GaussianScore, GmmPrior, GmmScore, MlpScore, ScoreModel,
                                 TrainingResult, build_score_model, dsm_train, load_model, save_model,
                                 score_eval, score_vjp)
from src.blinddps.models.persistence import MAGIC, model_from_bytes, model_to_bytes


def _fd_gradient(f, x, h=1e-5):
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        grad[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


def _two_component_gmm(dim=1):
    return GmmPrior(np.array([0.3, 0.7]), np.array([[-1.0] * dim, [1.5] * dim]),
                    np.array([[0.2] * dim, [0.5] * dim]))


def test_standard_gaussian_score_is_minus_x(sched, rng):
    model = GaussianScore(GaussianPrior.standard((8,)))
    x = rng.standard_normal(8)
    for i in (1, 250, 1000):
        np.testing.assert_allclose(score_eval(model, x, i, sched), -x, rtol=1e-12)
        c = rng.standard_normal(8)
        np.testing.assert_allclose(score_vjp(model, x, i, sched, c), -c, rtol=1e-12)


def test_gaussian_score_vanishes_at_mode(sched, rng):
    prior = GaussianPrior(rng.standard_normal(5), rng.uniform(0.1, 2.0, 5))
    model = GaussianScore(prior)
    i = 300
    mode = np.sqrt(sched.alpha_bars[i]) * prior.mean
    np.testing.assert_allclose(model.score(mode, i, sched), 0.0, atol=1e-14)


def test_gaussian_score_matches_log_density(sched, rng):
    prior = GaussianPrior(rng.standard_normal(4), rng.uniform(0.1, 2.0, 4))
    model = GaussianScore(prior)
    x = rng.standard_normal(4)
    i = 120
    fd = _fd_gradient(lambda v: model.log_density(v, i, sched), x)
    np.testing.assert_allclose(model.score(x, i, sched), fd, rtol=1e-5)


def test_gaussian_scalar_moments_need_shape():
    model = GaussianScore(GaussianPrior(0.0, 0.25), (3, 3))
    assert model.domain_shape == (3, 3)
    assert model.prior.var.shape == (3, 3)


def test_gmm_score_matches_log_density(sched, rng):
    model = GmmScore(_two_component_gmm(3))
    for i in (5, 200, 700):
        x = rng.standard_normal(3)
        fd = _fd_gradient(lambda v: model.log_density(v, i, sched), x)
        np.testing.assert_allclose(model.score(x, i, sched), fd, rtol=1e-5, atol=1e-9)


def test_gmm_vjp_matches_second_differences(sched, rng):
    model = GmmScore(_two_component_gmm(1))
    for i in (10, 100, 500):
        x = rng.standard_normal(1)
        h = 1e-4
        second = (model.log_density(x + h, i, sched) - 2 * model.log_density(x, i, sched)
                  + model.log_density(x - h, i, sched)) / h ** 2
        vjp = model.vjp(x, i, sched, np.ones(1))
        assert vjp[0] == pytest.approx(second, rel=1e-4, abs=1e-6)


def test_gmm_vjp_matches_score_finite_differences(sched, rng):
    model = GmmScore(_two_component_gmm(4))
    x = rng.standard_normal(4)
    c = rng.standard_normal(4)
    i = 60
    fd = _fd_gradient(lambda v: float(np.dot(c, model.score(v, i, sched))), x)
    np.testing.assert_allclose(model.vjp(x, i, sched, c), fd, rtol=1e-4, atol=1e-8)


def test_mlp_vjp_matches_finite_differences(sched, rng):
    for activation in ('tanh', 'silu'):
        model = MlpScore((2, 3), hidden=(16, 16), activation=activation, rng=np.random.default_rng(3))
        x = rng.standard_normal((2, 3))
        c = rng.standard_normal((2, 3))
        i = 400
        fd = _fd_gradient(lambda v: float(np.sum(c * model.score(v, i, sched))), x)
        np.testing.assert_allclose(model.vjp(x, i, sched, c), fd, rtol=1e-4, atol=1e-8)


def test_mlp_score_parameterization_eps(sched, rng):
    model = MlpScore((4,), hidden=(8,), rng=np.random.default_rng(0))
    x = rng.standard_normal(4)
    i = 50
    a_bar = sched.alpha_bars[i]
    raw, _ = model.forward(x.reshape(1, 4), a_bar)
    np.testing.assert_allclose(model.score(x, i, sched), -raw[0] / np.sqrt(1 - a_bar))


def test_mlp_batches_match_single_evaluations(sched, rng):
    model = MlpScore((5,), hidden=(8,), rng=np.random.default_rng(1))
    batch = rng.standard_normal((3, 5))
    stacked = model.score(batch, 10, sched)
    for row in range(3):
        np.testing.assert_allclose(stacked[row], model.score(batch[row], 10, sched), rtol=1e-13)


def test_mlp_rejects_degenerate_step(sched):
    model = MlpScore((2,), hidden=(4,))
    with pytest.raises(ParameterError):
        model.score(np.zeros(2), 0, sched)


def test_score_shape_mismatch(sched):
    model = GaussianScore(GaussianPrior.standard((4,)))
    with pytest.raises(ShapeError):
        model.score(np.zeros(5), 1, sched)
    with pytest.raises(ShapeError):
        model.vjp(np.zeros(4), 1, sched, np.zeros(3))


def test_unexpected_errors_are_wrapped(sched):
    class Broken(ScoreModel):
        variant = 'broken'

        def _score_impl(self, x, i, sched):
            raise ZeroDivisionError('boom')

    with pytest.raises(BlindDPSException) as info:
        Broken((2,)).score(np.zeros(2), 1, sched)
    assert isinstance(info.value.__cause__, ZeroDivisionError)


def test_dsm_zero_epochs_returns_initialization():
    sched = default_schedule(100)
    data = list(np.random.default_rng(0).standard_normal((32, 4)))
    init = MlpScore((4,), hidden=(8,), rng=np.random.default_rng(5))
    result = dsm_train(data, sched, {'epochs': 0, 'hidden': [8]}, init_model=init)
    assert result.loss_history == []
    assert result.heldout_history == []
    for w_new, w_old in zip(result.model.weights, init.weights):
        assert np.array_equal(w_new, w_old)


def test_dsm_training_reduces_heldout_loss_and_is_reproducible():
    sched = default_schedule(100)
    data = list(np.random.default_rng(0).standard_normal((512, 4)))
    config = {'epochs': 30, 'hidden': [32, 32], 'learning_rate': 0.01, 'batch_size': 64, 'seed': 2}
    first = dsm_train(data, sched, config)
    second = dsm_train(data, sched, config)
    assert len(first.loss_history) == 30
    assert first.heldout_history[-1] < first.heldout_history[0]
    assert first.loss_history == second.loss_history
    for a, b in zip(first.model.weights, second.model.weights):
        assert np.array_equal(a, b)
    frame = first.to_dataframe()
    assert list(frame.columns) == ['epoch', 'loss', 'heldout_loss']


def test_dsm_heldout_rows_never_reach_training():
    """Changing a held-out row moves only the held-out loss."""
    sched = default_schedule(100)
    data = np.random.default_rng(3).standard_normal((100, 4))
    config = {'epochs': 3, 'hidden': [8], 'batch_size': 16, 'seed': 1}
    base = dsm_train(list(data), sched, config)
    assert base.heldout_rows.shape == (20,)

    shifted = data.copy()
    shifted[base.heldout_rows] += 5.0
    other = dsm_train(list(shifted), sched, config)
    np.testing.assert_array_equal(other.heldout_rows, base.heldout_rows)
    assert other.loss_history == base.loss_history
    assert other.heldout_history != base.heldout_history
    for a, b in zip(other.model.weights, base.model.weights):
        assert np.array_equal(a, b)

    trained_row = np.setdiff1d(np.arange(100), base.heldout_rows)[0]
    shifted = data.copy()
    shifted[trained_row] += 5.0
    assert dsm_train(list(shifted), sched, config).loss_history != base.loss_history


def test_dsm_needs_rows_to_hold_out():
    sched = default_schedule(50)
    with pytest.raises(ParameterError):
        dsm_train([np.zeros(3) for _ in range(4)], sched, {'epochs': 1, 'hidden': [4]})


def test_heldout_window_means(caplog):
    result = TrainingResult(MlpScore((2,), hidden=(4,), rng=np.random.default_rng(0)),
                            heldout_history=[3.0] * 10 + [2.0] * 10 + [2.0] * 10 + [9.0] * 5)
    np.testing.assert_allclose(result.heldout_window_means(), [3.0, 2.0, 2.0])
    assert result.heldout_settles()
    rising = TrainingResult(result.model, heldout_history=[1.0] * 10 + [1.5] * 10 + [1.2] * 10)
    assert not rising.heldout_settles()
    assert 'rose between 10-epoch windows' in caplog.text
    with pytest.raises(ParameterError):
        result.heldout_settles(windows=4)


def test_dsm_nan_loss_names_epoch():
    sched = default_schedule(50)
    data = [np.zeros(3) for _ in range(16)]
    data[4] = np.array([np.nan, 0.0, 0.0])
    with pytest.raises(DivergenceError) as info:
        dsm_train(data, sched, {'epochs': 3, 'hidden': [4], 'batch_size': 16})
    assert info.value.epoch == 1


def test_dsm_rejects_empty_or_ragged_dataset():
    sched = default_schedule(50)
    with pytest.raises(ParameterError):
        dsm_train([], sched)
    with pytest.raises(ShapeError):
        dsm_train([np.zeros(3), np.zeros(4)], sched)


def test_model_container_round_trip_is_bit_exact(tmp_path, sched, rng):
    model = MlpScore((3, 2), hidden=(7, 5), activation='silu', parameterization='score',
                     rng=np.random.default_rng(9))
    path = save_model(model, str(tmp_path / 'model.bdps'))
    loaded = load_model(path)
    assert isinstance(loaded, MlpScore)
    assert loaded.hidden == [7, 5]
    assert loaded.activation == 'silu'
    assert loaded.parameterization == 'score'
    for a, b in zip(model.weights + model.biases, loaded.weights + loaded.biases):
        assert np.array_equal(a, b)
    assert model_to_bytes(loaded) == model_to_bytes(model)
    x = rng.standard_normal((3, 2))
    assert np.array_equal(model.score(x, 7, sched), loaded.score(x, 7, sched))


def test_analytic_models_persist(tmp_path, sched):
    gmm = GmmScore(_two_component_gmm(2))
    loaded = load_model(save_model(gmm, str(tmp_path / 'gmm.bdps')))
    x = np.array([0.3, -0.4])
    assert np.array_equal(gmm.score(x, 20, sched), loaded.score(x, 20, sched))
    gauss = GaussianScore(GaussianPrior(0.0, 0.5), (2, 2))
    loaded = model_from_bytes(model_to_bytes(gauss))
    assert loaded.domain_shape == (2, 2)


def test_model_container_header_layout():
    data = model_to_bytes(MlpScore((2,), hidden=(3,)))
    assert data[:8] == MAGIC
    header_len = int.from_bytes(data[8:12], 'little')
    assert data[12:12 + header_len].startswith(b'{')
    # 2+2 inputs → 3 hidden → 2 outputs, float64 blocks
    assert len(data) == 12 + header_len + 8 * (4 * 3 + 3 + 3 * 2 + 2)


def test_corrupt_model_files(tmp_path):
    with pytest.raises(ArtifactIOError):
        model_from_bytes(b'NOTAMODEL' + b'\0' * 16)
    data = model_to_bytes(MlpScore((2,), hidden=(3,)))
    with pytest.raises(ArtifactIOError):
        model_from_bytes(data[:-8])
    with pytest.raises(ArtifactIOError):
        load_model(str(tmp_path / 'missing.bdps'))


def test_base_models_cannot_be_saved():
    with pytest.raises(CapabilityError):
        model_to_bytes(ScoreModel((2,)))


def test_build_score_model_entries(tmp_path):
    assert build_score_model(None) is None
    assert build_score_model({'kind': 'uniform'}) is None
    gauss = build_score_model({'kind': 'gaussian', 'mean': 0.0, 'var': 0.25, 'shape': [4, 4]})
    assert isinstance(gauss, GaussianScore) and gauss.domain_shape == (4, 4)
    gmm = build_score_model({'kind': 'gmm', 'weights': [0.5, 0.5], 'means': [[-1.0], [1.0]],
                             'vars': [[0.1], [0.1]]})
    assert isinstance(gmm, GmmScore)

    path = save_model(MlpScore((3,), hidden=(4,)), str(tmp_path / 'm.bdps'))
    assert isinstance(build_score_model('m.bdps', str(tmp_path)), MlpScore)
    assert isinstance(build_score_model({'kind': 'mlp', 'path': path}), MlpScore)


@pytest.mark.parametrize('entry', [
    {'kind': 'gaussian', 'mean': 0.0, 'var': 1.0},
    {'kind': 'gmm', 'weights': [1.0]},
    {'kind': 'mlp'},
    {'kind': 'transformer'},
    42,
])
def test_build_score_model_rejects_bad_entries(entry):
    with pytest.raises(ConfigError):
        build_score_model(entry)
