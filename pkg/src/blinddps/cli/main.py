"""
Command line entry point.

Usage:
    python run_solver.py gen-kernel --kind gaussian --std 3.0 --size 64 --out k.pfm
    python run_solver.py degrade --image x.pfm --kernel k.pfm --sigma 0.02 --out y.pfm
    python run_solver.py solve --config data/configs/blind_deblur_toy.json --seeds 0..19
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from ..datasets import DATASET_KINDS
from ..exceptions import BlindDPSException, ConfigError
from ..analysis.experiments import PLACEMENTS
from . import commands
from .config import logging_settings

logger = logging.getLogger('blinddps_cli')


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises ConfigError instead of exiting on usage errors."""

    def error(self, message):
        raise ConfigError(message)


def _add_experiment_args(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='Experiment config (JSON)')
    parser.add_argument('--set', action='append', metavar='PATH=VALUE',
                        help='Override a config leaf, e.g. --set guidance.alpha=0.3 (repeatable)')


def _add_problem_args(parser: argparse.ArgumentParser):
    parser.add_argument('--method', choices=commands.SOLVE_METHODS, help='Sampler (default: sampler.method)')
    parser.add_argument('--measurement', help='Measurement PFM (default: io.measurement)')
    parser.add_argument('--image', help='Ground-truth image PFM')
    parser.add_argument('--kernel', help='Ground-truth (or, for dps, known) kernel PFM')
    parser.add_argument('--tilt', help='Ground-truth tilt prefix')


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='blinddps', description='Blind inverse problems with parallel diffusion priors')
    parser.add_argument('--project-config', help='Alternative config.yml (default: BDPS_CONFIG or the project one)')
    sub = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    sub.required = True

    p = sub.add_parser('gen-kernel', help='Generate a motion or Gaussian blur kernel')
    p.add_argument('--kind', choices=('motion', 'gaussian'), default='motion')
    p.add_argument('--size', type=int, default=64)
    p.add_argument('--std', type=float, default=3.0)
    p.add_argument('--intensity', type=float, default=0.5)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--preview', help='Optional 8-bit PGM preview path')
    p.add_argument('--out', required=True)
    p.set_defaults(handler=commands.cmd_gen_kernel)

    p = sub.add_parser('gen-tilt', help='Generate a smooth random tilt field')
    p.add_argument('--grid-n', type=int, default=32)
    p.add_argument('--smooth-std', type=float, default=1.0)
    p.add_argument('--amplitude', type=float, default=1.0)
    p.add_argument('--height', type=int, default=64)
    p.add_argument('--width', type=int, default=64)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True, help='Output prefix (<prefix>_dx.pfm, <prefix>_dy.pfm)')
    p.set_defaults(handler=commands.cmd_gen_tilt)

    p = sub.add_parser('gen-dataset', help='Generate a synthetic toy dataset')
    p.add_argument('--kind', choices=DATASET_KINDS, default='mixed')
    p.add_argument('--count', type=int, default=1000)
    p.add_argument('--size', type=int, default=16)
    p.add_argument('--intensity', type=float)
    p.add_argument('--std', type=float)
    p.add_argument('--amplitude', type=float)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True, help='Output directory')
    p.set_defaults(handler=commands.cmd_gen_dataset)

    p = sub.add_parser('train-score', help='Train an MLP score by denoising score matching')
    _add_experiment_args(p)
    p.add_argument('--dataset', required=True, help='Dataset directory')
    p.add_argument('--out', required=True, help='Model file')
    p.set_defaults(handler=commands.cmd_train_score)

    p = sub.add_parser('degrade', help='Apply the forward model and measurement noise')
    _add_experiment_args(p)
    p.add_argument('--image', required=True)
    p.add_argument('--kernel', required=True)
    p.add_argument('--tilt', help='Tilt prefix for the turbulence model')
    p.add_argument('--sigma', type=float, help='Noise std (default: forward.sigma)')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--preview')
    p.add_argument('--out', required=True)
    p.set_defaults(handler=commands.cmd_degrade)

    p = sub.add_parser('solve', help='Run a posterior sampler')
    _add_experiment_args(p)
    _add_problem_args(p)
    p.add_argument('--seeds', help='Seed or inclusive range a..b (one seed_XXX directory each)')
    p.add_argument('--save-snapshots', action='store_true', help='Also write every trajectory snapshot')
    p.add_argument('--out', help='Output directory (default: io.output_dir)')
    p.set_defaults(handler=commands.cmd_solve)

    p = sub.add_parser('sample-prior', help='Draw unconditional samples from a score model')
    _add_experiment_args(p)
    p.add_argument('--model', help='Model file (default: models.<variable> of the config)')
    p.add_argument('--variable', choices=('image', 'kernel', 'tilt'), default='image')
    p.add_argument('--shape', type=int, nargs='+')
    p.add_argument('--count', type=int, default=1)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True, help='Output directory')
    p.set_defaults(handler=commands.cmd_sample_prior)

    p = sub.add_parser('evaluate', help='Score estimates against ground truth (metrics.json)')
    p.add_argument('--run-dir', help='Solve output directory')
    p.add_argument('--estimate-image')
    p.add_argument('--estimate-kernel')
    p.add_argument('--truth-image')
    p.add_argument('--truth-kernel')
    p.add_argument('--measurement')
    p.add_argument('--peak', type=float, default=2.0)
    p.add_argument('--out')
    p.set_defaults(handler=commands.cmd_evaluate)

    p = sub.add_parser('analyze-gap', help='Jensen-gap sweep over measurement noise levels (CSV)')
    _add_experiment_args(p)
    p.add_argument('--sigmas', help='Comma separated noise levels (default: analysis.sigmas)')
    p.add_argument('--instances', type=int)
    p.add_argument('--step', type=int, help='Reverse step (default: where ᾱ reaches 0.5)')
    p.add_argument('--placement', choices=PLACEMENTS, default='plug-in')
    p.add_argument('--lipschitz', action='store_true', help='Also write the Lipschitz violation table')
    p.add_argument('--out', required=True)
    p.set_defaults(handler=commands.cmd_analyze_gap)

    p = sub.add_parser('sweep-lambda', help='Kernel sparsity sweep over λ and seeds (CSV)')
    _add_experiment_args(p)
    _add_problem_args(p)
    p.add_argument('--lambdas', default='0,0.1,1.0')
    p.add_argument('--seeds', default='0..4')
    p.add_argument('--out', required=True)
    p.set_defaults(handler=commands.cmd_sweep_lambda)

    p = sub.add_parser('compare-priors', help='Uniform kernel prior against the diffusion kernel prior (CSV)')
    _add_experiment_args(p)
    _add_problem_args(p)
    p.add_argument('--seeds', default='0..19')
    p.add_argument('--out', required=True)
    p.set_defaults(handler=commands.cmd_compare_priors)

    return parser


def setup_logging(project_config: Optional[str] = None):
    """Configure the root logger from the logging section of config.yml."""
    settings = logging_settings(project_config)
    level = getattr(logging, str(settings.get('level', 'INFO')).upper(), logging.INFO)
    fmt = settings.get('format', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.get('file'):
        handlers.append(logging.FileHandler(settings['file']))
    logging.basicConfig(level=level, format=fmt, handlers=handlers, force=True)


def _report(error: BlindDPSException) -> int:
    print(json.dumps(error.to_record()), file=sys.stderr)
    return error.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one subcommand and map errors to exit codes.

    Returns:
        0 on success; 2 config, 3 I/O, 4 divergence, 5 capability, 6 shape,
        1 for anything unexpected
    """
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        return _report(e)
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    try:
        setup_logging(args.project_config)
        logger.info(f"Running {args.command}")
        return args.handler(args)
    except BlindDPSException as e:
        logger.error(f"{args.command} failed: {e}")
        return _report(e)
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}")
        record = {'error': type(e).__name__, 'message': str(e), 'exit_code': 1}
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
