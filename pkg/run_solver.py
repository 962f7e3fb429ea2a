#!/usr/bin/env python
"""
Helper script to run the BlindDPS command line with proper path configuration.

Usage:
    python run_solver.py gen-dataset --kind mixed --count 2000 --out data/datasets/toy16
    python run_solver.py train-score --dataset data/datasets/toy16 --out data/models/image16.bdps
    python run_solver.py solve --config data/configs/blind_deblur_toy.json --seeds 0..19
    python run_solver.py --help
"""

import os
import sys


def main():
    """Put the project root on sys.path and hand over to the CLI dispatcher."""
    project_root = os.path.abspath(os.path.dirname(__file__))
    if project_root not in sys.path:
        sys.path.insert(0, project_root)

    from src.blinddps.cli import main as cli_main
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
