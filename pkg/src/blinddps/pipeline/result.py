"""
Solver results and trajectory records.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

TRAJECTORY_COLUMNS = ['step', 't', 'residual', 'mse_image', 'mse_kernel', 'mse_tilt']


@dataclass
class Snapshot:
    """Plug-in estimates and diagnostics logged at one reverse step."""

    step: int
    t: float
    residual: float
    x_hat: np.ndarray
    k_hat: Optional[np.ndarray] = None
    phi_hat: Optional[np.ndarray] = None
    mse_image: Optional[float] = None
    mse_kernel: Optional[float] = None
    mse_tilt: Optional[float] = None


@dataclass
class SolveResult:
    """
    Final estimates of one solve.

    Attributes:
        x0: End of the image chain
        k0: Final kernel, P_C of the last kernel estimate
        phi0: End of the tilt chain (or the fixed field), if any
        x_hat0: Tweedie image estimate at the last step
        trajectory: Logged snapshots, from step N down to 1
        seed: Run seed
        method: Solver name
        config: Echo of the settings used
        final_states: Chain states after the last step
        final_residual: Residual at (x0, k0, phi0)
    """

    x0: np.ndarray
    k0: Optional[np.ndarray]
    phi0: Optional[np.ndarray] = None
    x_hat0: Optional[np.ndarray] = None
    trajectory: List[Snapshot] = field(default_factory=list)
    seed: Optional[int] = None
    method: str = ''
    config: Dict[str, Any] = field(default_factory=dict)
    final_states: Dict[str, np.ndarray] = field(default_factory=dict)
    final_residual: Optional[float] = None

    def trajectory_frame(self) -> pd.DataFrame:
        """One row per snapshot with the columns in TRAJECTORY_COLUMNS."""
        rows = [{
            'step': s.step, 't': s.t, 'residual': s.residual,
            'mse_image': s.mse_image, 'mse_kernel': s.mse_kernel, 'mse_tilt': s.mse_tilt,
        } for s in self.trajectory]
        return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)

    def argmin_kernel_mse_step(self) -> Optional[int]:
        """Step index at which the logged kernel MSE is smallest."""
        frame = self.trajectory_frame().dropna(subset=['mse_kernel'])
        if frame.empty:
            return None
        return int(frame.loc[frame['mse_kernel'].idxmin(), 'step'])
