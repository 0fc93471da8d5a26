"""Anisotropic visibility: how detectable a cell is from a fixation.

Detectability d' between a fixated cell k and a probed cell i is a
peak-normalized Gaussian of the center offset,

    d'(k, i) = exp(-1/2 * [dx^2 / sigma_x_sq + dy^2 / sigma_y_sq])

so d' = 1 at the fixated cell and decays with the squared Mahalanobis
distance, faster horizontally than vertically under the default covariance
diag(2600, 4000) px^2. The value depends on the offset only, which makes the
full pairwise table buildable from broadcast center differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Cell, GridConfig, cell_center


@dataclass(frozen=True)
class VisibilityParams:
    """Squared axis scales (px^2) of the visibility Gaussian."""

    sigma_x_sq: float = 2600.0
    sigma_y_sq: float = 4000.0

    def __post_init__(self) -> None:
        if self.sigma_x_sq <= 0 or self.sigma_y_sq <= 0:
            raise ValueError("visibility variances must be positive")


@dataclass(frozen=True)
class VisibilityField:
    """d' of every cell for one fixated cell, shaped (grid_rows, grid_cols)."""

    fixation: Cell
    values: np.ndarray


def visibility_at_offset(dx: float, dy: float, params: VisibilityParams) -> float:
    """d' for a raw pixel offset between two cell centers."""
    q = dx * dx / params.sigma_x_sq + dy * dy / params.sigma_y_sq
    return math.exp(-0.5 * q)


def visibility(k: Cell, i: Cell, params: VisibilityParams, cfg: GridConfig) -> float:
    """d' between fixated cell ``k`` and probed cell ``i``."""
    ck = cell_center(k, cfg)
    ci = cell_center(i, cfg)
    return visibility_at_offset(ci.x - ck.x, ci.y - ck.y, params)


def _center_coords(cfg: GridConfig) -> tuple[np.ndarray, np.ndarray]:
    """Flat (n_cells,) arrays of cell-center x and y, row-major cell order."""
    half = cfg.cell_size_px // 2
    cx = np.minimum(
        np.arange(cfg.grid_cols) * cfg.cell_size_px + half, cfg.image_width_px - 1
    )
    cy = np.minimum(
        np.arange(cfg.grid_rows) * cfg.cell_size_px + half, cfg.image_height_px - 1
    )
    xs = np.tile(cx, cfg.grid_rows).astype(np.float64)
    ys = np.repeat(cy, cfg.grid_cols).astype(np.float64)
    return xs, ys


def visibility_table(params: VisibilityParams, cfg: GridConfig) -> np.ndarray:
    """Full (n_cells, n_cells) d' matrix; row k holds the field for fixation k."""
    xs, ys = _center_coords(cfg)
    dx = xs[np.newaxis, :] - xs[:, np.newaxis]
    dy = ys[np.newaxis, :] - ys[:, np.newaxis]
    q = dx * dx / params.sigma_x_sq + dy * dy / params.sigma_y_sq
    return np.exp(-0.5 * q)


def visibility_field(
    k: Cell, params: VisibilityParams, cfg: GridConfig
) -> VisibilityField:
    """d' of every cell when fixating ``k``, as a (rows, cols) grid."""
    xs, ys = _center_coords(cfg)
    ck = cell_center(k, cfg)
    q = (xs - ck.x) ** 2 / params.sigma_x_sq + (ys - ck.y) ** 2 / params.sigma_y_sq
    values = np.exp(-0.5 * q).reshape(cfg.grid_rows, cfg.grid_cols)
    return VisibilityField(fixation=k, values=values)
