"""Matrix-free grid transfers: full weighting, linear interpolation, cutting.

Fine and coarse grids have sizes 2**k - 1; the prolongation is twice the
transpose of the restriction in 1D and four times in 2D.
"""

from __future__ import annotations

import numpy as np

from .errors import GridSizeError
from .stencil import grid_depth


def _fine_sizes(m_fine: int) -> int:
    k = grid_depth(m_fine)
    if k < 2:
        raise GridSizeError(f"fine grid size {m_fine} has no coarser level")
    return (m_fine - 1) // 2


def restrict_1d(v: np.ndarray) -> np.ndarray:
    """Full weighting: coarse_i = (v_{2i-1} + 2 v_{2i} + v_{2i+1}) / 4."""
    v = np.asarray(v)
    mc = _fine_sizes(v.shape[0])
    return 0.25 * (v[0 : 2 * mc - 1 : 2] + 2.0 * v[1::2] + v[2::2])


def prolong_1d(v: np.ndarray) -> np.ndarray:
    """Linear interpolation; columns are (1/2) * [1, 2, 1]^T.

    Fine points sitting on coarse points copy the coarse value; in-between
    points take the average of their flanking coarse values (zero outside).
    """
    v = np.asarray(v)
    mc = v.shape[0]
    grid_depth(mc)
    mf = 2 * mc + 1
    out = np.zeros(mf, dtype=v.dtype)
    out[1::2] = v
    out[2:-1:2] = 0.5 * (v[:-1] + v[1:])
    out[0] = 0.5 * v[0]
    out[-1] = 0.5 * v[-1]
    return out


def cut(v: np.ndarray) -> np.ndarray:
    """Select the fine entries that coincide with coarse grid points."""
    v = np.asarray(v)
    _fine_sizes(v.shape[0])
    return v[1::2].copy()


def restrict_2d(field: np.ndarray) -> np.ndarray:
    """Tensor-product full weighting on a square grid."""
    field = np.asarray(field)
    if field.ndim != 2 or field.shape[0] != field.shape[1]:
        raise GridSizeError(f"expected a square grid, got shape {field.shape}")
    mc = _fine_sizes(field.shape[0])
    rows = 0.25 * (field[0 : 2 * mc - 1 : 2] + 2.0 * field[1::2] + field[2::2])
    return 0.25 * (rows[:, 0 : 2 * mc - 1 : 2] + 2.0 * rows[:, 1::2] + rows[:, 2::2])


def _prolong_axis0(x: np.ndarray) -> np.ndarray:
    mc = x.shape[0]
    out = np.zeros((2 * mc + 1,) + x.shape[1:], dtype=x.dtype)
    out[1::2] = x
    out[2:-1:2] = 0.5 * (x[:-1] + x[1:])
    out[0] = 0.5 * x[0]
    out[-1] = 0.5 * x[-1]
    return out


def prolong_2d(field: np.ndarray) -> np.ndarray:
    """Tensor-product linear interpolation on a square grid."""
    field = np.asarray(field)
    if field.ndim != 2 or field.shape[0] != field.shape[1]:
        raise GridSizeError(f"expected a square grid, got shape {field.shape}")
    grid_depth(field.shape[0])
    rows = _prolong_axis0(field)
    return np.swapaxes(_prolong_axis0(np.swapaxes(rows, 0, 1)), 0, 1)
