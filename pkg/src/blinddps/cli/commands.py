"""
Subcommand handlers.

Each handler takes the parsed argparse namespace and returns a process exit
code; library errors propagate to the dispatcher in main.py.
"""

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..analysis import gap_sweep, lipschitz_table, summarize_gap_sweep
from ..datasets import make_dataset, write_dataset
from ..diffusion import schedule_from_config
from ..exceptions import ConfigError, DivergenceError, ShapeError
from ..exporters import export_netpbm, read_pfm, read_tilt, write_pfm, write_tilt
from ..guidance import GuidanceConfig
from ..metrics import MetricReport, evaluate
from ..models import build_score_model, dsm_train, save_model
from ..operators import Measurement, clamp_tilt, degrade, gen_gaussian_kernel, gen_motion_kernel, gen_tilt_field
from ..pipeline import (SamplerOptions, SolveResult, blind_dps_deblur, blind_dps_turbulence, dps_nonblind,
                        sample_prior, uniform_prior_baseline)
from ..utils.data_loader import get_paths, load_dataset
from ..utils.hashing import config_hash
from ..utils.paths import resolve_path
from ..utils.rng import as_streams
from ..validators import ArtifactValidator
from .config import effective_config, read_experiment
from .manifest import manifest_path_for, write_manifest

logger = logging.getLogger('blinddps_cli')

SOLVE_METHODS = ('dps', 'blind-deblur', 'blind-turbulence', 'uniform-baseline')


def parse_seeds(text: str) -> List[int]:
    """Parse "7" or an inclusive range "0..19"."""
    try:
        if '..' in text:
            lo, hi = (int(part) for part in text.split('..', 1))
            if hi < lo:
                raise ConfigError(f"Empty seed range '{text}'")
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError as e:
        raise ConfigError(f"Seeds must be an integer or a range a..b, got '{text}'") from e


def parse_floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError as e:
        raise ConfigError(f"Expected a comma separated list of numbers, got '{text}'") from e


def worker_count(n_jobs: int) -> int:
    """Number of worker processes, capped by BDPS_THREADS."""
    cap = os.environ.get('BDPS_THREADS')
    try:
        limit = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError as e:
        raise ConfigError(f"BDPS_THREADS must be an integer, got '{cap}'") from e
    return max(1, min(n_jobs, limit))


def write_json(path: str, document: Dict[str, Any]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f, ensure_ascii=False, indent=2, sort_keys=True)
    return path


def _ensure_parent(path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def _experiment(args) -> Tuple[Dict[str, Any], str]:
    """Effective config and base directory from --config / --set."""
    document, base_dir = ({}, os.getcwd())
    if getattr(args, 'config', None):
        document, base_dir = read_experiment(args.config)
    cfg = effective_config(document, getattr(args, 'set', None), getattr(args, 'project_config', None))
    return cfg, base_dir


def _kernel_preview(kernel: np.ndarray) -> np.ndarray:
    peak = float(kernel.max())
    return 2.0 * kernel / peak - 1.0 if peak > 0 else kernel


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def cmd_gen_kernel(args) -> int:
    if args.kind == 'gaussian':
        kernel = gen_gaussian_kernel(args.std, args.size)
    else:
        kernel = gen_motion_kernel(args.intensity, args.size, as_streams(args.seed).generator('k', 0))
    _ensure_parent(args.out)
    outputs = [write_pfm(args.out, kernel)]
    if args.preview:
        outputs.append(export_netpbm(args.preview, _kernel_preview(kernel)))
    settings = {'kind': args.kind, 'size': args.size, 'std': args.std, 'intensity': args.intensity}
    write_manifest(manifest_path_for(outputs[0]), 'gen-kernel', settings, outputs, seed=args.seed)
    logger.info(f"Wrote {args.kind} kernel of size {args.size} to {outputs[0]}")
    return 0


def cmd_gen_tilt(args) -> int:
    streams = as_streams(args.seed)
    phi = gen_tilt_field(args.grid_n, args.smooth_std, args.amplitude, (args.height, args.width),
                         streams.generator('phi', 0))
    _ensure_parent(args.out)
    outputs = list(write_tilt(args.out, phi))
    settings = {'grid_n': args.grid_n, 'smooth_std': args.smooth_std, 'amplitude': args.amplitude,
                'shape': [args.height, args.width]}
    prefix = outputs[0][:-len('_dx.pfm')]
    write_manifest(prefix + '.manifest.json', 'gen-tilt', settings, outputs, seed=args.seed)
    logger.info(f"Wrote tilt field {phi.shape} to {prefix}_dx/_dy.pfm")
    return 0


def cmd_gen_dataset(args) -> int:
    params = {}
    if args.intensity is not None:
        params['intensity'] = args.intensity
    if args.std is not None:
        params['std'] = args.std
    if args.amplitude is not None:
        params['amplitude'] = args.amplitude
    items = make_dataset(args.kind, args.count, args.size, args.seed, params)
    index_file = write_dataset(items, args.out, args.kind)
    outputs = [index_file] + sorted(
        os.path.join(args.out, name) for name in os.listdir(args.out) if name.endswith('.pfm'))
    settings = {'kind': args.kind, 'count': args.count, 'size': args.size, **params}
    write_manifest(os.path.join(args.out, 'manifest.json'), 'gen-dataset', settings, outputs, seed=args.seed)
    return 0


# ---------------------------------------------------------------------------
# Training and degradation
# ---------------------------------------------------------------------------

def cmd_train_score(args) -> int:
    cfg, _ = _experiment(args)
    dataset_dir = args.dataset
    if not os.path.isdir(dataset_dir) and not os.path.isabs(dataset_dir):
        # bare names refer to the configured datasets directory
        dataset_dir = os.path.join(get_paths(args.project_config)['datasets'], dataset_dir)
    dataset = load_dataset(dataset_dir)
    sched = schedule_from_config(cfg['schedule'])
    result = dsm_train(dataset, sched, cfg['training'])

    _ensure_parent(args.out)
    model_path = save_model(result.model, args.out)
    history_path = os.path.join(os.path.dirname(os.path.abspath(model_path)), 'loss_history.csv')
    result.to_dataframe().to_csv(history_path, index=False)

    inputs = [os.path.join(dataset_dir, 'index.csv')] if os.path.exists(
        os.path.join(dataset_dir, 'index.csv')) else []
    write_manifest(manifest_path_for(model_path), 'train-score',
                   {'schedule': cfg['schedule'], 'training': cfg['training']},
                   [model_path, history_path], inputs, seed=cfg['training'].get('seed'))
    final = result.loss_history[-1] if result.loss_history else float('nan')
    logger.info(f"Trained {result.model.n_parameters} parameters, final loss {final:.5f}")
    return 0


def cmd_degrade(args) -> int:
    cfg, _ = _experiment(args)
    x = read_pfm(args.image)
    k = read_pfm(args.kernel)
    inputs = [args.image, args.kernel]
    phi = None
    if args.tilt:
        phi = clamp_tilt(read_tilt(args.tilt), cfg['forward'].get('tilt_max_displacement'))
        inputs.append(args.tilt + '_dx.pfm')
        inputs.append(args.tilt + '_dy.pfm')
    sigma = cfg['forward']['sigma'] if args.sigma is None else args.sigma
    y = degrade(x, k, phi, sigma, as_streams(args.seed))

    _ensure_parent(args.out)
    outputs = [write_pfm(args.out, y.grid)]
    if args.preview:
        outputs.append(export_netpbm(args.preview, y.grid))
    write_manifest(manifest_path_for(outputs[0]), 'degrade', {'sigma': sigma, 'forward': cfg['forward']},
                   outputs, inputs, seed=args.seed)
    logger.info(f"Degraded {args.image} with σ = {sigma}")
    return 0


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------

@dataclass
class Problem:
    """Measurement, ground truth and models of one experiment."""

    y: Measurement
    models: Dict[str, Any]
    truth: Dict[str, np.ndarray] = field(default_factory=dict)
    inputs: List[str] = field(default_factory=list)


def load_problem(cfg: Dict[str, Any], base_dir: str) -> Problem:
    """Read the measurement, ground truth and score models named by an experiment config."""
    io = cfg.get('io', {})
    if 'measurement' not in io:
        raise ConfigError("Experiment config needs io.measurement (or --measurement)")
    inputs = []
    y_path = resolve_path(io['measurement'], base_dir)
    y = Measurement(read_pfm(y_path), float(cfg['forward']['sigma']))
    inputs.append(y_path)

    truth = {}
    for name, key in (('x', 'image'), ('k', 'kernel')):
        if key in io:
            path = resolve_path(io[key], base_dir)
            truth[name] = read_pfm(path)
            inputs.append(path)
    if 'tilt' in io:
        prefix = resolve_path(io['tilt'] + '_dx.pfm', base_dir)[:-len('_dx.pfm')]
        truth['phi'] = read_tilt(prefix)
        inputs.extend([prefix + '_dx.pfm', prefix + '_dy.pfm'])

    model_cfg = cfg.get('models', {})
    models = {name: build_score_model(model_cfg.get(name), base_dir) for name in ('image', 'kernel', 'tilt')}
    for name in ('image', 'kernel', 'tilt'):
        entry = model_cfg.get(name)
        if isinstance(entry, str) or (isinstance(entry, dict) and 'path' in entry):
            inputs.append(resolve_path(entry if isinstance(entry, str) else entry['path'], base_dir))
    return Problem(y, models, truth, inputs)


def _kernel_shape(cfg: Dict[str, Any], problem: Problem) -> Tuple[int, int]:
    shape = cfg['sampler'].get('kernel_shape')
    if shape:
        return tuple(int(s) for s in shape)
    if 'k' in problem.truth:
        return problem.truth['k'].shape
    if problem.models.get('kernel') is not None:
        return tuple(problem.models['kernel'].domain_shape)
    return (5, 5)


def run_solver(cfg: Dict[str, Any], problem: Problem, seed: int) -> SolveResult:
    """Dispatch one solve to the sampler named by sampler.method."""
    method = cfg['sampler']['method']
    sched = schedule_from_config(cfg['schedule'])
    guidance = GuidanceConfig.from_dict(cfg['guidance'])
    options = SamplerOptions.from_dict(cfg['sampler'])
    models, truth = problem.models, problem.truth
    if models.get('image') is None:
        raise ConfigError("Every solver needs models.image")

    if method == 'dps':
        if 'k' not in truth:
            raise ConfigError("Non-blind DPS needs the known kernel in io.kernel")
        result = dps_nonblind(problem.y, truth['k'], models['image'], sched, guidance, seed, options,
                              truth.get('x'))
    elif method == 'blind-deblur':
        if models.get('kernel') is None:
            raise ConfigError("Blind deblurring needs models.kernel")
        result = blind_dps_deblur(problem.y, models['image'], models['kernel'], sched, guidance, seed, options,
                                  truth.get('x'), truth.get('k'))
    elif method == 'blind-turbulence':
        if models.get('kernel') is None:
            raise ConfigError("Imaging through turbulence needs models.kernel")
        result = blind_dps_turbulence(problem.y, models['image'], models['kernel'], models.get('tilt'), sched,
                                      guidance, seed, options, truth.get('x'), truth.get('k'),
                                      truth.get('phi'))
    elif method == 'uniform-baseline':
        result = uniform_prior_baseline(problem.y, models['image'], sched, guidance, seed,
                                        _kernel_shape(cfg, problem), options, truth.get('x'), truth.get('k'))
    else:
        raise ConfigError(f"Unknown solver '{method}', expected one of {SOLVE_METHODS}")
    result.config = cfg
    return result


def score_result(result: SolveResult, cfg: Dict[str, Any], problem: Problem) -> MetricReport:
    truth = problem.truth
    return evaluate(result.x0, truth.get('x'), result.k0, truth.get('k'), problem.y.grid,
                    float(cfg['metrics']['psnr_peak']), result, config_hash(cfg))


def write_metrics(path: str, report: MetricReport) -> str:
    document = report.to_json_dict()
    ArtifactValidator().check(document, 'metrics', source='metrics report')
    return write_json(path, document)


def write_solve_outputs(out_dir: str, result: SolveResult, report: Optional[MetricReport],
                        save_snapshots: bool = False) -> List[str]:
    """Write the artifacts of one solve and return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    outputs = [write_pfm(os.path.join(out_dir, 'x0.pfm'), result.x0)]
    if result.x_hat0 is not None:
        outputs.append(write_pfm(os.path.join(out_dir, 'x_hat0.pfm'), result.x_hat0))
    if result.k0 is not None:
        outputs.append(write_pfm(os.path.join(out_dir, 'k0.pfm'), result.k0))
    if result.phi0 is not None:
        outputs.extend(write_tilt(os.path.join(out_dir, 'phi0'), result.phi0))
    trajectory_path = os.path.join(out_dir, 'trajectory.csv')
    result.trajectory_frame().to_csv(trajectory_path, index=False)
    outputs.append(trajectory_path)

    if save_snapshots:
        snap_dir = os.path.join(out_dir, 'snapshots')
        os.makedirs(snap_dir, exist_ok=True)
        for snap in result.trajectory:
            outputs.append(write_pfm(os.path.join(snap_dir, f"x_hat_{snap.step:05d}.pfm"), snap.x_hat))
            if snap.k_hat is not None:
                outputs.append(write_pfm(os.path.join(snap_dir, f"k_hat_{snap.step:05d}.pfm"), snap.k_hat))
            if snap.phi_hat is not None:
                outputs.extend(write_tilt(os.path.join(snap_dir, f"phi_hat_{snap.step:05d}"), snap.phi_hat))

    if report is not None:
        outputs.append(write_metrics(os.path.join(out_dir, 'metrics.json'), report))
    return outputs


def _write_divergence_snapshot(out_dir: str, error: DivergenceError):
    """Keep the last finite chain states of a diverged solve."""
    if not error.last_snapshot:
        return
    os.makedirs(out_dir, exist_ok=True)
    for name, value in error.last_snapshot.items():
        if name == 'step':
            continue
        path = os.path.join(out_dir, f"diverged_{name}")
        if name == 'phi':
            write_tilt(path, value)
        else:
            write_pfm(path + '.pfm', value)
    logger.error(f"Wrote last finite states (step {error.last_snapshot['step']}) to {out_dir}")


def solve_one(cfg: Dict[str, Any], base_dir: str, seed: int, out_dir: Optional[str],
              save_snapshots: bool = False) -> Dict[str, Any]:
    """
    Load, solve, score and (optionally) write one seed of an experiment.

    Returns:
        Summary row with the seed and the metric values
    """
    cfg = json.loads(json.dumps(cfg))
    cfg['sampler']['seed'] = int(seed)
    problem = load_problem(cfg, base_dir)
    try:
        result = run_solver(cfg, problem, seed)
    except DivergenceError as e:
        if out_dir:
            _write_divergence_snapshot(out_dir, e)
        raise
    report = score_result(result, cfg, problem) if problem.truth else None
    if out_dir:
        outputs = write_solve_outputs(out_dir, result, report, save_snapshots)
        write_manifest(os.path.join(out_dir, 'manifest.json'), 'solve', cfg, outputs, problem.inputs, seed)
    row = {'seed': int(seed), 'method': cfg['sampler']['method'], 'final_residual': result.final_residual}
    if report is not None:
        row.update({'psnr': report.psnr, 'psnr_measurement': report.psnr_measurement,
                    'mse_image': report.mse_image, 'mse_kernel': report.mse_kernel, 'mnc': report.mnc,
                    'argmin_kernel_mse_step': report.argmin_kernel_mse_step})
    return row


def _solve_job(job: Tuple[Dict[str, Any], str, int, Optional[str], bool]) -> Dict[str, Any]:
    return solve_one(*job)


def solve_seeds(cfg: Dict[str, Any], base_dir: str, seeds: List[int], out_root: Optional[str],
                save_snapshots: bool = False) -> pd.DataFrame:
    """Independent solves over seeds, fanned out across worker processes."""
    jobs = [(cfg, base_dir, seed, os.path.join(out_root, f"seed_{seed:03d}") if out_root else None,
             save_snapshots) for seed in seeds]
    workers = worker_count(len(jobs))
    if workers == 1:
        rows = [_solve_job(job) for job in jobs]
    else:
        logger.info(f"Solving {len(jobs)} seeds on {workers} workers")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_solve_job, jobs))
    return pd.DataFrame(rows).sort_values('seed').reset_index(drop=True)


def _apply_solve_flags(args, cfg: Dict[str, Any]):
    if args.method:
        cfg['sampler']['method'] = args.method
    for key in ('measurement', 'image', 'kernel', 'tilt'):
        value = getattr(args, key, None)
        if value:
            cfg['io'][key] = os.path.abspath(value)


def cmd_solve(args) -> int:
    cfg, base_dir = _experiment(args)
    _apply_solve_flags(args, cfg)
    if args.out:
        out = os.path.abspath(args.out)
    elif cfg['io'].get('output_dir'):
        out = os.path.join(base_dir, cfg['io']['output_dir'])
    else:
        raise ConfigError("solve needs --out or io.output_dir")

    if args.seeds:
        seeds = parse_seeds(args.seeds)
        summary = solve_seeds(cfg, base_dir, seeds, out, args.save_snapshots)
        os.makedirs(out, exist_ok=True)
        summary_path = os.path.join(out, 'summary.csv')
        summary.to_csv(summary_path, index=False)
        logger.info(f"Wrote per-seed summary to {summary_path}")
    else:
        row = solve_one(cfg, base_dir, int(cfg['sampler']['seed']), out, args.save_snapshots)
        logger.info(f"Solve finished: {row}")
    return 0


def cmd_sample_prior(args) -> int:
    cfg, base_dir = _experiment(args)
    entry = args.model if args.model else cfg['models'].get(args.variable)
    model = build_score_model(entry, base_dir)
    if model is None:
        raise ConfigError(f"No score model given for '{args.variable}'")
    sched = schedule_from_config(cfg['schedule'])
    shape = tuple(args.shape) if args.shape else tuple(model.domain_shape)
    streams = as_streams(args.seed)
    os.makedirs(args.out, exist_ok=True)

    outputs = []
    for j in range(args.count):
        sample = sample_prior(model, sched, shape, streams.child('sample', j), final_noise=cfg['sampler']['final_noise'])
        outputs.append(write_pfm(os.path.join(args.out, f"sample_{j:04d}.pfm"), np.atleast_2d(sample)))
    write_manifest(os.path.join(args.out, 'manifest.json'), 'sample-prior',
                   {'schedule': cfg['schedule'], 'model': entry, 'shape': list(shape)}, outputs, seed=args.seed)
    logger.info(f"Wrote {args.count} prior samples to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Evaluation and analysis
# ---------------------------------------------------------------------------

def _trajectory_summaries(path: str) -> Tuple[Optional[int], Optional[float]]:
    frame = pd.read_csv(path)
    final_residual = float(frame['residual'].iloc[-1]) if not frame.empty else None
    kernel = frame.dropna(subset=['mse_kernel'])
    argmin = int(kernel.loc[kernel['mse_kernel'].idxmin(), 'step']) if not kernel.empty else None
    return argmin, final_residual


def cmd_evaluate(args) -> int:
    run_dir = args.run_dir
    x_path = args.estimate_image or (os.path.join(run_dir, 'x0.pfm') if run_dir else None)
    if not x_path:
        raise ConfigError("evaluate needs --estimate-image or --run-dir")
    k_path = args.estimate_kernel or (os.path.join(run_dir, 'k0.pfm') if run_dir else None)
    x_est = read_pfm(x_path)
    k_est = read_pfm(k_path) if k_path and os.path.exists(k_path) else None
    x_true = read_pfm(args.truth_image) if args.truth_image else None
    k_true = read_pfm(args.truth_kernel) if args.truth_kernel else None
    y = read_pfm(args.measurement) if args.measurement else None
    if x_true is not None and x_true.shape != x_est.shape:
        raise ShapeError(f"Estimate {x_est.shape} and truth {x_true.shape} differ in shape")

    cfg_hash = None
    if run_dir and os.path.exists(os.path.join(run_dir, 'manifest.json')):
        with open(os.path.join(run_dir, 'manifest.json'), 'r', encoding='utf-8') as f:
            cfg_hash = json.load(f).get('config_hash')
    report = evaluate(x_est, x_true, k_est, k_true, y, args.peak, config_hash=cfg_hash)
    trajectory = os.path.join(run_dir, 'trajectory.csv') if run_dir else None
    if trajectory and os.path.exists(trajectory):
        report.argmin_kernel_mse_step, report.final_residual = _trajectory_summaries(trajectory)

    out = args.out or (os.path.join(run_dir, 'metrics.json') if run_dir else 'metrics.json')
    write_metrics(out, report)
    logger.info(f"Wrote metrics to {out}")
    return 0


def cmd_analyze_gap(args) -> int:
    cfg, _ = _experiment(args)
    analysis = cfg['analysis']
    sched = schedule_from_config(cfg['schedule'])
    sigmas = parse_floats(args.sigmas) if args.sigmas else [float(s) for s in analysis['sigmas']]
    frame = gap_sweep(sched, sigmas, int(args.instances or analysis['instances']), int(analysis['n_mc']),
                      int(analysis['seed']), int(analysis['dimension']), args.step, args.placement)
    _ensure_parent(args.out)
    frame.to_csv(args.out, index=False)
    outputs = [args.out]
    summary = summarize_gap_sweep(frame)
    stem, _ = os.path.splitext(args.out)
    summary_path = stem + '_summary.csv'
    summary.to_csv(summary_path, index=False)
    outputs.append(summary_path)
    if args.lipschitz:
        table = lipschitz_table([1, 2, 4], sigmas, seed=int(analysis['seed']))
        table_path = stem + '_lipschitz.csv'
        table.to_csv(table_path, index=False)
        outputs.append(table_path)
    write_manifest(manifest_path_for(args.out), 'analyze-gap',
                   {'schedule': cfg['schedule'], 'analysis': analysis, 'placement': args.placement},
                   outputs, seed=int(analysis['seed']))
    for _, row in summary.iterrows():
        logger.info(f"σ = {row['sigma']}: mean gap {row['mean_gap']:.4g}, "
                    f"certified domination {row['certified_dominated_rate']:.0%}")
    return 0


def cmd_sweep_lambda(args) -> int:
    cfg, base_dir = _experiment(args)
    _apply_solve_flags(args, cfg)
    seeds = parse_seeds(args.seeds)
    rows = []
    for lam in parse_floats(args.lambdas):
        run_cfg = json.loads(json.dumps(cfg))
        run_cfg['guidance']['lambda'] = lam
        frame = solve_seeds(run_cfg, base_dir, seeds, None)
        frame['lambda'] = lam
        rows.append(frame)
    runs = pd.concat(rows, ignore_index=True)
    table = runs.groupby('lambda').agg(mean_mnc=('mnc', 'mean'), mean_mse_kernel=('mse_kernel', 'mean'),
                                       mean_psnr=('psnr', 'mean'), runs=('seed', 'count')).reset_index()
    _ensure_parent(args.out)
    table.to_csv(args.out, index=False)
    logger.info(f"λ sweep over {len(seeds)} seeds written to {args.out}")
    return 0


def cmd_compare_priors(args) -> int:
    cfg, base_dir = _experiment(args)
    _apply_solve_flags(args, cfg)
    seeds = parse_seeds(args.seeds)
    frames = []
    for method in ('blind-deblur', 'uniform-baseline'):
        run_cfg = json.loads(json.dumps(cfg))
        run_cfg['sampler']['method'] = method
        frames.append(solve_seeds(run_cfg, base_dir, seeds, None))
    runs = pd.concat(frames, ignore_index=True)
    _ensure_parent(args.out)
    runs.to_csv(args.out, index=False)
    means = runs.groupby('method')['mnc'].mean()
    logger.info(f"Mean MNC per kernel prior: {means.to_dict()}")
    return 0
