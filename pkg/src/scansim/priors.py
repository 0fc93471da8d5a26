"""Priors over target location.

A pixel-level ``SaliencyMap`` is reduced to a cell-level ``PriorGrid`` by
averaging the pixels each cell covers. Every prior is floored with
eps = 1e-9 / n_cells and normalized, so no cell is ever impossible and the
posterior machinery can work in log space. Alternative priors (flat, center
Gaussian, seeded noise, human fixation density) act as controls.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .grid import GridConfig, PixelPoint

PRIOR_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SaliencyMap:
    """Non-negative pixel saliency, shaped (image_height_px, image_width_px)."""

    values: np.ndarray
    image_id: str | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("saliency map must be a 2-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("saliency map contains non-finite values")
        if np.any(v < 0):
            raise ValueError("saliency map contains negative values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class PriorGrid:
    """Cell-level probability of target presence; strictly positive, sums to 1."""

    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError("prior grid must be a 2-D array")
        if np.any(p <= 0):
            raise ValueError("prior grid entries must be strictly positive")
        if abs(p.sum() - 1.0) > PRIOR_SUM_TOL:
            raise ValueError("prior grid must sum to 1")
        object.__setattr__(self, "p", p)

    @property
    def flat(self) -> np.ndarray:
        return self.p.reshape(-1)


def _floor_and_normalize(raw: np.ndarray) -> np.ndarray:
    """Normalize, add the epsilon floor to every cell, renormalize.

    Normalizing first makes the floor invariant to rescaling the input map;
    an all-zero input degenerates to the uniform prior.
    """
    raw = np.asarray(raw, dtype=np.float64)
    total = raw.sum()
    p = raw / total if total > 0 else np.zeros_like(raw)
    p = p + 1e-9 / raw.size
    return p / p.sum()


def load_saliency_map(
    path: str | Path, cfg: GridConfig | None = None, image_id: str | None = None
) -> SaliencyMap:
    """Read a saliency map from a CSV matrix or an 8-bit grayscale image."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        values = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    else:
        with Image.open(path) as img:
            values = np.asarray(img.convert("L"), dtype=np.float64)
    if cfg is not None and values.shape != (cfg.image_height_px, cfg.image_width_px):
        raise ValueError(
            f"saliency map {path} is {values.shape[1]}x{values.shape[0]}, "
            f"expected {cfg.image_width_px}x{cfg.image_height_px}"
        )
    return SaliencyMap(values=values, image_id=image_id)


def cell_means(values: np.ndarray, cfg: GridConfig) -> np.ndarray:
    """Mean pixel value per cell; partial border cells average what they cover."""
    if values.shape != (cfg.image_height_px, cfg.image_width_px):
        raise ValueError("pixel array does not match the grid's image dimensions")
    d = cfg.cell_size_px
    row_edges = np.arange(cfg.grid_rows) * d
    col_edges = np.arange(cfg.grid_cols) * d
    sums = np.add.reduceat(np.add.reduceat(values, row_edges, axis=0), col_edges, axis=1)
    row_sizes = np.minimum(row_edges + d, cfg.image_height_px) - row_edges
    col_sizes = np.minimum(col_edges + d, cfg.image_width_px) - col_edges
    counts = np.outer(row_sizes, col_sizes).astype(np.float64)
    return sums / counts


def grid_prior_from_saliency(smap: SaliencyMap, cfg: GridConfig) -> PriorGrid:
    """Reduce a pixel saliency map to a floored, normalized cell prior."""
    return PriorGrid(_floor_and_normalize(cell_means(smap.values, cfg)))


def flat_prior(cfg: GridConfig) -> PriorGrid:
    p = np.full((cfg.grid_rows, cfg.grid_cols), 1.0 / cfg.n_cells)
    return PriorGrid(p / p.sum())


def center_prior(cfg: GridConfig, sigma_px: float | None = None) -> PriorGrid:
    """Isotropic Gaussian prior at the image center, sampled at cell centers."""
    if sigma_px is None:
        sigma_px = 0.25 * min(cfg.image_width_px, cfg.image_height_px)
    if sigma_px <= 0:
        raise ValueError("sigma_px must be positive")
    from .visibility import _center_coords

    xs, ys = _center_coords(cfg)
    mx = cfg.image_width_px / 2.0
    my = cfg.image_height_px / 2.0
    q = ((xs - mx) ** 2 + (ys - my) ** 2) / (2.0 * sigma_px * sigma_px)
    raw = np.exp(-q).reshape(cfg.grid_rows, cfg.grid_cols)
    return PriorGrid(_floor_and_normalize(raw))


def noise_prior(cfg: GridConfig, seed: int | np.random.Generator) -> PriorGrid:
    """Seeded white-noise prior; identical seeds give identical grids."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    raw = rng.uniform(size=(cfg.grid_rows, cfg.grid_cols))
    return PriorGrid(_floor_and_normalize(raw))


def human_density_map(
    fixations: Sequence[PixelPoint], cfg: GridConfig, kernel_sigma_px: float = 25.0
) -> SaliencyMap:
    """Sum of unit-mass Gaussians at fixation points, truncated at the border.

    The kernels are separable, so each fixation contributes an outer product
    of 1-D Gaussians over pixel coordinates. Identical fixations stack
    linearly.
    """
    if kernel_sigma_px <= 0:
        raise ValueError("kernel_sigma_px must be positive")
    xs = np.arange(cfg.image_width_px, dtype=np.float64)
    ys = np.arange(cfg.image_height_px, dtype=np.float64)
    out = np.zeros((cfg.image_height_px, cfg.image_width_px))
    two_var = 2.0 * kernel_sigma_px * kernel_sigma_px
    norm = 1.0 / (np.pi * two_var)
    for p in fixations:
        gx = np.exp(-((xs - p.x) ** 2) / two_var)
        gy = np.exp(-((ys - p.y) ** 2) / two_var)
        out += norm * np.outer(gy, gx)
    return SaliencyMap(values=out)
