"""
Guidance settings shared by all guided samplers.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from ..exceptions import ConfigError, ParameterError

REG_KINDS = ('none', 'l1', 'l0')
NORMS = ('unsquared', 'squared')


@dataclass(frozen=True)
class GuidanceConfig:
    """
    Step sizes, kernel regularization and projection switches.

    Attributes:
        step_size: α applied to every guided chain unless overridden
        reg_kind: Kernel regularizer, one of 'none', 'l1', 'l0'
        reg_weight: λ
        l0_threshold: τ, scaled by λ and the kernel step size in the ℓ0 prox
        project_kernel: Apply P_C to the kernel estimate every step
        norm: 'unsquared' residual norm or the 'squared' ablation
        tilt_step_size: Step size of the tilt chain (defaults to step_size)
        baseline_image_step: α_x of the uniform-prior baseline
        baseline_kernel_step: α_k of the uniform-prior baseline
        baseline_lambda: λ of the uniform-prior baseline (ℓ0)
        sigma_init: Std of the Gaussian kernel the baseline starts from
    """

    step_size: float = 0.3
    reg_kind: str = 'l1'
    reg_weight: float = 1.0
    l0_threshold: float = 1e-3
    project_kernel: bool = True
    norm: str = 'unsquared'
    tilt_step_size: Optional[float] = None
    baseline_image_step: float = 0.3
    baseline_kernel_step: float = 0.3
    baseline_lambda: float = 5.0
    sigma_init: float = 1.0

    def __post_init__(self):
        if self.reg_kind not in REG_KINDS:
            raise ParameterError(f"Unknown regularizer '{self.reg_kind}', expected one of {REG_KINDS}")
        if self.norm not in NORMS:
            raise ParameterError(f"Unknown residual norm '{self.norm}', expected one of {NORMS}")
        steps = [self.step_size, self.baseline_image_step, self.baseline_kernel_step]
        if self.tilt_step_size is not None:
            steps.append(self.tilt_step_size)
        if any(s < 0 for s in steps):
            raise ParameterError("Step sizes must be non-negative")
        if self.reg_weight < 0 or self.baseline_lambda < 0:
            raise ParameterError("Regularization weights must be non-negative")
        if self.l0_threshold <= 0:
            raise ParameterError("The ℓ0 threshold must be positive")
        if self.sigma_init <= 0:
            raise ParameterError("sigma_init must be positive")

    def step_for(self, variable: str) -> float:
        if variable == 'phi' and self.tilt_step_size is not None:
            return self.tilt_step_size
        return self.step_size

    @classmethod
    def from_dict(cls, section: Optional[Dict[str, Any]]) -> 'GuidanceConfig':
        """Build from the `guidance` section of an experiment config."""
        section = dict(section or {})
        mapping = {
            'alpha': 'step_size', 'reg': 'reg_kind', 'lambda': 'reg_weight',
            'l0_threshold': 'l0_threshold', 'project_kernel': 'project_kernel', 'norm': 'norm',
            'alpha_phi': 'tilt_step_size', 'alpha_x': 'baseline_image_step',
            'alpha_k': 'baseline_kernel_step', 'lambda_baseline': 'baseline_lambda',
            'sigma_init': 'sigma_init',
        }
        unknown = set(section) - set(mapping)
        if unknown:
            raise ConfigError(f"Unknown guidance settings: {sorted(unknown)}")
        kwargs = {mapping[key]: value for key, value in section.items()}
        return cls(**kwargs)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
