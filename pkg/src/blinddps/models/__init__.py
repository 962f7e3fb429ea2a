"""
Score models.

This package contains the ScoreModel base class, the analytic Gaussian and
Gaussian-mixture scores, the MLP score with its trainer, and persistence.
"""

from .base import ScoreModel, score_eval, score_vjp
from .analytic import GaussianPrior, GaussianScore, GmmPrior, GmmScore
from .mlp import MlpScore
from .training import TrainingResult, dsm_train, dsm_loss
from .persistence import save_model, load_model
from .factory import build_score_model
