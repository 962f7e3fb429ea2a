"""
Euclidean projection onto C = {k : 1ᵀk = 1, k ⪰ 0}.
"""

import numpy as np

from ..exceptions import ParameterError

MEMBERSHIP_TOL = 1e-12


def in_simplex(k: np.ndarray, tol: float = 1e-9) -> bool:
    k = np.asarray(k, dtype=np.float64)
    return bool(np.all(k >= 0.0) and abs(k.sum() - 1.0) <= tol)


def project_simplex(k: np.ndarray) -> np.ndarray:
    """
    Project onto the probability simplex by sort-and-threshold.

    Members of C (within 1e−12 on the sum) are returned unchanged, which
    makes the projection exactly idempotent.

    Args:
        k: Array of any shape with finite entries

    Returns:
        Array with the shape of k, nonnegative and summing to 1
    """
    k = np.asarray(k, dtype=np.float64)
    if not np.all(np.isfinite(k)):
        raise ParameterError("Cannot project a kernel with non-finite entries")
    if k.size == 0:
        raise ParameterError("Cannot project an empty kernel")
    if in_simplex(k, MEMBERSHIP_TOL):
        return k.copy()

    flat = k.ravel()
    u = np.sort(flat)[::-1]
    css = np.cumsum(u)
    ranks = np.arange(1, flat.size + 1)
    rho = np.nonzero(u + (1.0 - css) / ranks > 0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(flat - theta, 0.0).reshape(k.shape)
