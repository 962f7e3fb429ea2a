"""
Tilt warp T_φ.

Bilinear sampling of the image at p + φ(p) with edge clamping. φ[..., 0] is
the column displacement dx and φ[..., 1] the row displacement dy, in pixels.
The warp is linear in the image; its adjoint scatters with the same weights.
"""

from dataclasses import dataclass

import numpy as np

from ..exceptions import ParameterError, ShapeError


@dataclass
class _Stencil:
    r0: np.ndarray
    r1: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    fr: np.ndarray
    fc: np.ndarray
    inside_r: np.ndarray
    inside_c: np.ndarray


def _axis_stencil(coord: np.ndarray, size: int):
    clamped = np.clip(coord, 0.0, size - 1.0)
    inside = (coord >= 0.0) & (coord <= size - 1.0)
    if size == 1:
        zeros = np.zeros(coord.shape, dtype=np.intp)
        return zeros, zeros, np.zeros(coord.shape), inside
    lo = np.minimum(np.floor(clamped), size - 2).astype(np.intp)
    return lo, lo + 1, clamped - lo, inside


def _stencil(image_shape, phi: np.ndarray) -> _Stencil:
    H, W = image_shape[:2]
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (H, W, 2):
        raise ShapeError(f"Tilt field shape {phi.shape} does not match image {(H, W)}")
    if not np.all(np.isfinite(phi)):
        raise ParameterError("Tilt field contains non-finite displacements")
    rows, cols = np.meshgrid(np.arange(H, dtype=np.float64), np.arange(W, dtype=np.float64), indexing='ij')
    r0, r1, fr, inside_r = _axis_stencil(rows + phi[:, :, 1], H)
    c0, c1, fc, inside_c = _axis_stencil(cols + phi[:, :, 0], W)
    return _Stencil(r0, r1, c0, c1, fr, fc, inside_r, inside_c)


def _weights(st: _Stencil, ndim: int):
    w = ((1 - st.fr) * (1 - st.fc), (1 - st.fr) * st.fc, st.fr * (1 - st.fc), st.fr * st.fc)
    if ndim == 3:
        w = tuple(a[:, :, None] for a in w)
    return w


def _check_image(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (2, 3):
        raise ShapeError(f"Images must be H×W or H×W×C, got {x.shape}")
    return x


def tilt_warp(x: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """
    Warp x by the displacement field φ.

    Args:
        x: H×W or H×W×C image
        phi: H×W×2 field (dx, dy)

    Returns:
        Warped image with the shape of x
    """
    x = _check_image(x)
    st = _stencil(x.shape, phi)
    w00, w01, w10, w11 = _weights(st, x.ndim)
    return (w00 * x[st.r0, st.c0] + w01 * x[st.r0, st.c1]
            + w10 * x[st.r1, st.c0] + w11 * x[st.r1, st.c1])


def tilt_warp_adjoint(v: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Adjoint of x ↦ T_φ(x) for fixed φ."""
    v = _check_image(v)
    st = _stencil(v.shape, phi)
    out = np.zeros_like(v)
    for weight, rr, cc in zip(_weights(st, v.ndim), (st.r0, st.r0, st.r1, st.r1), (st.c0, st.c1, st.c0, st.c1)):
        np.add.at(out, (rr, cc), weight * v)
    return out


def tilt_warp_vjp_phi(x: np.ndarray, phi: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
    """
    Vector-Jacobian product of φ ↦ T_φ(x).

    Displacement components whose sample position was clamped get a zero
    derivative.

    Args:
        x: Image being warped
        phi: H×W×2 field
        cotangent: Array with the shape of x

    Returns:
        H×W×2 array
    """
    x = _check_image(x)
    cotangent = np.asarray(cotangent, dtype=np.float64)
    if cotangent.shape != x.shape:
        raise ShapeError(f"Cotangent shape {cotangent.shape} does not match image {x.shape}")
    st = _stencil(x.shape, phi)
    fr, fc = st.fr, st.fc
    if x.ndim == 3:
        fr, fc = fr[:, :, None], fc[:, :, None]
    x00, x01 = x[st.r0, st.c0], x[st.r0, st.c1]
    x10, x11 = x[st.r1, st.c0], x[st.r1, st.c1]
    d_col = (1 - fr) * (x01 - x00) + fr * (x11 - x10)
    d_row = (1 - fc) * (x10 - x00) + fc * (x11 - x01)
    g_dx = d_col * cotangent
    g_dy = d_row * cotangent
    if x.ndim == 3:
        g_dx, g_dy = g_dx.sum(axis=2), g_dy.sum(axis=2)
    grad = np.stack([g_dx * st.inside_c, g_dy * st.inside_r], axis=-1)
    if x.shape[1] == 1:
        grad[:, :, 0] = 0.0
    if x.shape[0] == 1:
        grad[:, :, 1] = 0.0
    return grad
