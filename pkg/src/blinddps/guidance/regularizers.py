"""
Kernel sparsity regularizers.

ℓ1 contributes a subgradient to the kernel update. ℓ0 has no useful
gradient and is applied as a proximal hard threshold instead.
"""

from typing import Tuple

import numpy as np

from ..exceptions import ParameterError
from .config import REG_KINDS


def regularizer(kind: str, k: np.ndarray, lam: float, tau: float = 1e-3) -> Tuple[float, np.ndarray]:
    """
    Value and descent term of λ R(k).

    Args:
        kind: 'none', 'l1' or 'l0'
        k: Kernel
        lam: Weight λ ≥ 0
        tau: ℓ0 support threshold

    Returns:
        (value, descent term); the ℓ0 descent term is zero because the
        prox is applied separately
    """
    if kind not in REG_KINDS:
        raise ParameterError(f"Unknown regularizer '{kind}'")
    if lam < 0:
        raise ParameterError(f"Regularization weight must be non-negative, got {lam}")
    k = np.asarray(k, dtype=np.float64)
    if kind == 'none' or lam == 0:
        return 0.0, np.zeros_like(k)
    if kind == 'l1':
        return float(lam * np.sum(np.abs(k))), lam * np.sign(k)
    return float(lam * np.count_nonzero(np.abs(k) > tau)), np.zeros_like(k)


def hard_threshold(k: np.ndarray, threshold: float) -> np.ndarray:
    """Proximal map of the ℓ0 penalty: zero every entry with |k_j| ≤ threshold."""
    k = np.asarray(k, dtype=np.float64)
    return np.where(np.abs(k) <= threshold, 0.0, k)


def sparsify_kernel(k: np.ndarray, threshold: float) -> np.ndarray:
    """
    Hard threshold a kernel in C and restore the unit sum.

    If every entry would be removed the kernel is returned unchanged.
    """
    if threshold <= 0:
        return np.asarray(k, dtype=np.float64)
    kept = hard_threshold(k, threshold)
    total = kept.sum()
    if total <= 0:
        return np.asarray(k, dtype=np.float64)
    return kept / total
