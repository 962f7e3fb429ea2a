#!/usr/bin/env python
"""
Tests for the command line: generators, degradation, solving, evaluation
and the exit codes of failed runs.
"""

import json
import logging
import os
import sys

import numpy as np
import pandas as pd
import pytest

project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, project_root)

from src.blinddps.cli import main
from src.blinddps.cli.commands import parse_floats, parse_seeds
from src.blinddps.cli.config import effective_config, parse_overrides
from src.blinddps.exceptions import ConfigError
from src.blinddps.exporters import read_pfm, read_tilt, write_pfm
from src.blinddps.guidance import in_simplex
from src.blinddps.utils import content_hash
from src.blinddps.validators import ArtifactValidator


@pytest.fixture(autouse=True)
def restore_logging(monkeypatch):
    """main() reconfigures the root logger; put it back after each test."""
    monkeypatch.setenv('BDPS_THREADS', '1')
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def _error_record(capsys):
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith('{')]
    return json.loads(lines[-1])


@pytest.fixture
def toy_problem(tmp_path):
    """Image, kernel, measurement and an experiment config with analytic priors."""
    gen = np.random.default_rng(3)
    x = (0.5 * gen.standard_normal((6, 6))).astype(np.float32).astype(np.float64)
    write_pfm(str(tmp_path / 'x.pfm'), x)
    assert main(['gen-kernel', '--kind', 'gaussian', '--std', '0.8', '--size', '3',
                 '--out', str(tmp_path / 'k.pfm')]) == 0
    assert main(['degrade', '--image', str(tmp_path / 'x.pfm'), '--kernel', str(tmp_path / 'k.pfm'),
                 '--sigma', '0.02', '--seed', '1', '--out', str(tmp_path / 'y.pfm')]) == 0
    config = {
        'schedule': {'n_steps': 20, 'rescale': True},
        'models': {
            'image': {'kind': 'gaussian', 'mean': 0.0, 'var': 0.25, 'shape': [6, 6]},
            'kernel': {'kind': 'gaussian', 'mean': 1.0 / 9.0, 'var': 0.01, 'shape': [3, 3]},
        },
        'forward': {'kind': 'blur', 'sigma': 0.02},
        'guidance': {'alpha': 0.3, 'reg': 'l1', 'lambda': 1.0},
        'sampler': {'method': 'blind-deblur', 'seed': 0, 'snapshot_stride': 5},
        'io': {'measurement': 'y.pfm', 'image': 'x.pfm', 'kernel': 'k.pfm', 'output_dir': 'run'},
    }
    config_path = tmp_path / 'experiment.json'
    config_path.write_text(json.dumps(config))
    return tmp_path, str(config_path)


def test_parse_seeds_and_floats():
    assert parse_seeds('7') == [7]
    assert parse_seeds('2..5') == [2, 3, 4, 5]
    assert parse_floats('0, 0.1,1') == [0.0, 0.1, 1.0]
    with pytest.raises(ConfigError):
        parse_seeds('5..2')
    with pytest.raises(ConfigError):
        parse_seeds('a..b')
    with pytest.raises(ConfigError):
        parse_floats('1,x')


def test_overrides_become_nested_values():
    nested = parse_overrides(['guidance.alpha=0.5', 'guidance.reg=l0', 'sampler.final_noise=true'])
    assert nested == {'guidance': {'alpha': 0.5, 'reg': 'l0'}, 'sampler': {'final_noise': True}}
    with pytest.raises(ConfigError):
        parse_overrides(['guidance.alpha'])
    with pytest.raises(ConfigError):
        parse_overrides(['guidance..alpha=1'])


def test_effective_config_layers():
    cfg = effective_config({'guidance': {'alpha': 0.1}}, ['guidance.lambda=2.0'])
    assert cfg['guidance']['alpha'] == 0.1
    assert cfg['guidance']['lambda'] == 2.0
    assert cfg['guidance']['reg'] == 'l1'
    assert 'logging' not in cfg and 'paths' not in cfg
    with pytest.raises(ConfigError):
        effective_config({}, ['guidance.alpha=-1'])


def test_gen_kernel_writes_kernel_and_manifest(tmp_path):
    out = tmp_path / 'kernels' / 'motion.pfm'
    assert main(['gen-kernel', '--kind', 'motion', '--size', '9', '--seed', '4',
                 '--preview', str(tmp_path / 'motion'), '--out', str(out)]) == 0
    kernel = read_pfm(str(out))
    assert kernel.shape == (9, 9)
    assert in_simplex(kernel, tol=1e-5)
    assert (tmp_path / 'motion.pgm').exists()

    manifest_path = tmp_path / 'kernels' / 'motion.manifest.json'
    manifest = json.loads(manifest_path.read_text())
    assert ArtifactValidator().validate_document(manifest, 'manifest')[0]
    assert manifest['command'] == 'gen-kernel'
    assert manifest['seed'] == 4
    assert manifest['outputs'][0] == {'path': 'motion.pfm', 'hash': content_hash(str(out))}


def test_gen_kernel_is_reproducible(tmp_path):
    for name in ('a.pfm', 'b.pfm'):
        assert main(['gen-kernel', '--size', '7', '--seed', '2', '--out', str(tmp_path / name)]) == 0
    assert content_hash(str(tmp_path / 'a.pfm')) == content_hash(str(tmp_path / 'b.pfm'))


def test_gen_tilt(tmp_path):
    assert main(['gen-tilt', '--grid-n', '4', '--amplitude', '1.5', '--height', '8', '--width', '10',
                 '--out', str(tmp_path / 'phi')]) == 0
    phi = read_tilt(str(tmp_path / 'phi'))
    assert phi.shape == (8, 10, 2)
    assert np.max(np.linalg.norm(phi, axis=-1)) == pytest.approx(1.5, rel=1e-6)
    manifest = json.loads((tmp_path / 'phi.manifest.json').read_text())
    assert [o['path'] for o in manifest['outputs']] == ['phi_dx.pfm', 'phi_dy.pfm']


def test_gen_dataset(tmp_path):
    out = tmp_path / 'bars'
    assert main(['gen-dataset', '--kind', 'bars', '--count', '3', '--size', '8', '--out', str(out)]) == 0
    index = pd.read_csv(out / 'index.csv')
    assert len(index) == 3
    manifest = json.loads((out / 'manifest.json').read_text())
    assert len(manifest['outputs']) == 4


def test_degrade_writes_measurement(toy_problem):
    tmp_path, _ = toy_problem
    y = read_pfm(str(tmp_path / 'y.pfm'))
    assert y.shape == (6, 6)
    manifest = json.loads((tmp_path / 'y.manifest.json').read_text())
    assert manifest['config']['sigma'] == 0.02
    assert {i['path'] for i in manifest['inputs']} == {'x.pfm', 'k.pfm'}


def test_solve_single_run(toy_problem):
    tmp_path, config_path = toy_problem
    assert main(['solve', '--config', config_path]) == 0
    run = tmp_path / 'run'
    for name in ('x0.pfm', 'k0.pfm', 'trajectory.csv', 'metrics.json', 'manifest.json'):
        assert (run / name).exists(), name

    assert read_pfm(str(run / 'x0.pfm')).shape == (6, 6)
    assert in_simplex(read_pfm(str(run / 'k0.pfm')), tol=1e-5)

    trajectory = pd.read_csv(run / 'trajectory.csv')
    assert list(trajectory['step']) == [20, 15, 10, 5, 1]

    metrics = json.loads((run / 'metrics.json').read_text())
    assert ArtifactValidator().validate_document(metrics, 'metrics')[0]
    assert 0.0 < metrics['mnc'] <= 1.0 + 1e-9
    manifest = json.loads((run / 'manifest.json').read_text())
    assert manifest['config_hash'] == metrics['config_hash']
    assert manifest['seed'] == 0
    assert 'y.pfm' in {os.path.basename(i['path']) for i in manifest['inputs']}


def test_solve_is_reproducible(toy_problem):
    tmp_path, config_path = toy_problem
    for out in ('a', 'b'):
        assert main(['solve', '--config', config_path, '--out', str(tmp_path / out)]) == 0
    for name in ('x0.pfm', 'k0.pfm'):
        assert content_hash(str(tmp_path / 'a' / name)) == content_hash(str(tmp_path / 'b' / name))


def test_solve_over_seeds(toy_problem):
    tmp_path, config_path = toy_problem
    assert main(['solve', '--config', config_path, '--seeds', '0..2', '--set', 'sampler.method="dps"',
                 '--out', str(tmp_path / 'seeds')]) == 0
    summary = pd.read_csv(tmp_path / 'seeds' / 'summary.csv')
    assert list(summary['seed']) == [0, 1, 2]
    assert set(summary['method']) == {'dps'}
    for seed in range(3):
        assert (tmp_path / 'seeds' / f"seed_{seed:03d}" / 'x0.pfm').exists()


def test_evaluate_run_dir(toy_problem):
    tmp_path, config_path = toy_problem
    assert main(['solve', '--config', config_path]) == 0
    out = tmp_path / 'eval.json'
    assert main(['evaluate', '--run-dir', str(tmp_path / 'run'), '--truth-image', str(tmp_path / 'x.pfm'),
                 '--truth-kernel', str(tmp_path / 'k.pfm'), '--out', str(out)]) == 0
    report = json.loads(out.read_text())
    solved = json.loads((tmp_path / 'run' / 'metrics.json').read_text())
    assert report['psnr'] == pytest.approx(solved['psnr'], rel=1e-5)
    assert report['argmin_kernel_mse_step'] == solved['argmin_kernel_mse_step']
    assert report['config_hash'] == solved['config_hash']


def test_usage_and_config_errors_exit_with_2(toy_problem, capsys):
    tmp_path, config_path = toy_problem
    assert main(['no-such-command']) == 2
    assert _error_record(capsys)['error'] == 'ConfigError'
    assert main(['solve', '--config', config_path, '--set', 'guidance.reg=l2']) == 2
    assert _error_record(capsys)['exit_code'] == 2
    assert main(['solve', '--set', 'io.measurement="y.pfm"']) == 2


def test_missing_files_exit_with_3(tmp_path, capsys):
    assert main(['degrade', '--image', str(tmp_path / 'nope.pfm'), '--kernel', str(tmp_path / 'k.pfm'),
                 '--out', str(tmp_path / 'y.pfm')]) == 3
    record = _error_record(capsys)
    assert record['error'] == 'ArtifactIOError'
    assert main(['solve', '--config', str(tmp_path / 'missing.json')]) == 3


def test_shape_mismatch_exits_with_6(toy_problem):
    tmp_path, _ = toy_problem
    write_pfm(str(tmp_path / 'small.pfm'), np.zeros((4, 4)))
    assert main(['evaluate', '--estimate-image', str(tmp_path / 'x.pfm'), '--truth-image',
                 str(tmp_path / 'small.pfm'), '--out', str(tmp_path / 'm.json')]) == 6


def test_divergence_exits_with_4_and_keeps_last_states(toy_problem):
    tmp_path, config_path = toy_problem
    with np.errstate(over='ignore', invalid='ignore'):
        code = main(['solve', '--config', config_path, '--set', 'guidance.alpha=1e300', '--method', 'dps',
                     '--out', str(tmp_path / 'diverged')])
    assert code == 4
    assert (tmp_path / 'diverged' / 'diverged_x.pfm').exists()


def test_train_score_finds_datasets_by_name(tmp_path):
    datasets = tmp_path / 'datasets'
    assert main(['gen-dataset', '--kind', 'gaussian-kernels', '--count', '16', '--size', '3',
                 '--out', str(datasets / 'small')]) == 0
    project_config = tmp_path / 'config.yml'
    project_config.write_text(f"environment:\n  current: testing\npaths:\n  testing:\n    datasets: {datasets}\n")
    model_path = tmp_path / 'models' / 'small.bdps'
    assert main(['--project-config', str(project_config), 'train-score', '--dataset', 'small',
                 '--set', 'training.epochs=2', '--set', 'training.hidden=[8]', '--set', 'training.batch_size=8',
                 '--out', str(model_path)]) == 0
    assert model_path.exists()
    history = pd.read_csv(tmp_path / 'models' / 'loss_history.csv')
    assert list(history['epoch']) == [1, 2]
    manifest = json.loads((tmp_path / 'models' / 'small.manifest.json').read_text())
    assert manifest['inputs'][0]['path'] == '../datasets/small/index.csv'
