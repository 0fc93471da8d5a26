"""Template responses: what a fixation reports about each cell.

Each fixation yields a noisy scalar response W per cell. Plain variant:
W ~ Normal(mean, std) with mean +0.5 at the target cell, -0.5 elsewhere, and
std 1/d'. Correlation-aware variant: the mean is additionally pulled by the
cross-correlation between the target template and the local image content,

    mean = mu * (d' + 1/2) + corr * (3/2 - d'),   mu = +/-0.5
    std  = 1 / (a * d' + b)

so far-from-fixation cells (d' ~ 0) answer with their visual similarity to
the target rather than pure noise. corr lives in [-0.5, 0.5]: normalized
cross-correlation scaled by one half.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .grid import GridConfig, cell_center, index_to_cell

ResponseMode = Literal["deterministic", "sampled"]


@dataclass(frozen=True)
class TemplateParams:
    """Std shaping constants and the observation mode."""

    a: float = 3.0
    b: float = 4.0
    mode: ResponseMode = "deterministic"

    def __post_init__(self) -> None:
        if self.a < 0 or self.b <= 0:
            raise ValueError("requires a >= 0 and b > 0")
        if self.mode not in ("deterministic", "sampled"):
            raise ValueError(f"unknown response mode {self.mode!r}")


@dataclass(frozen=True)
class ResponseStats:
    mean: float
    std: float


@dataclass(frozen=True)
class CorrelationMap:
    """Template cross-correlation per cell, shaped (rows, cols), in [-0.5, 0.5]."""

    c: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError("correlation map must be a 2-D array")
        if np.any(np.abs(c) > 0.5):
            raise ValueError("correlation values must lie in [-0.5, 0.5]")
        object.__setattr__(self, "c", c)

    @property
    def flat(self) -> np.ndarray:
        return self.c.reshape(-1)


def zero_correlation(cfg: GridConfig) -> CorrelationMap:
    return CorrelationMap(np.zeros((cfg.grid_rows, cfg.grid_cols)))


def _ncc(window: np.ndarray, patch: np.ndarray) -> float:
    """Zero-mean normalized cross-correlation; 0 when either side is flat."""
    w = window - window.mean()
    p = patch - patch.mean()
    denom_sq = float((w * w).sum()) * float((p * p).sum())
    if denom_sq <= 0.0:
        return 0.0
    r = float((w * p).sum()) / np.sqrt(denom_sq)
    # guard rounding just past the mathematical bound
    return min(1.0, max(-1.0, r))


def correlation_map(
    image: np.ndarray, patch: np.ndarray, cfg: GridConfig
) -> CorrelationMap:
    """Correlate the target template with the window centered at each cell.

    Windows have the patch's shape and are cropped (together with the
    matching part of the patch) at the image border.
    """
    image = np.asarray(image, dtype=np.float64)
    patch = np.asarray(patch, dtype=np.float64)
    if image.shape != (cfg.image_height_px, cfg.image_width_px):
        raise ValueError("image does not match the grid's dimensions")
    if patch.ndim != 2 or patch.size == 0:
        raise ValueError("patch must be a non-empty 2-D array")
    ph, pw = patch.shape
    out = np.empty((cfg.grid_rows, cfg.grid_cols))
    for idx in range(cfg.n_cells):
        cell = index_to_cell(idx, cfg)
        center = cell_center(cell, cfg)
        left = int(center.x) - pw // 2
        top = int(center.y) - ph // 2
        x0, x1 = max(left, 0), min(left + pw, cfg.image_width_px)
        y0, y1 = max(top, 0), min(top + ph, cfg.image_height_px)
        window = image[y0:y1, x0:x1]
        sub = patch[y0 - top : y1 - top, x0 - left : x1 - left]
        out[cell.row, cell.col] = 0.5 * _ncc(window, sub)
    return CorrelationMap(out)


def response_stats_ibs(is_target: bool, dprime: float) -> ResponseStats:
    """Plain response: mean +/-0.5 by target status, std 1/d'."""
    if dprime <= 0:
        raise ValueError("dprime must be positive")
    return ResponseStats(mean=0.5 if is_target else -0.5, std=1.0 / dprime)


def _corr_pulled_mean(mu, dprime, corr):
    # grouped so the extreme mu == corr == +/-0.5 case stays exactly at +/-1
    return 0.5 * mu + 1.5 * corr + (mu - corr) * dprime


def response_stats_cibs(
    is_target: bool, dprime: float, corr: float, params: TemplateParams
) -> ResponseStats:
    """Correlation-pulled response mean, bounded std 1/(a*d'+b)."""
    if not 0 <= dprime <= 1:
        raise ValueError("dprime must lie in [0, 1]")
    if abs(corr) > 0.5:
        raise ValueError("corr must lie in [-0.5, 0.5]")
    mu = 0.5 if is_target else -0.5
    return ResponseStats(
        mean=float(_corr_pulled_mean(mu, dprime, corr)),
        std=1.0 / (params.a * dprime + params.b),
    )


def observe(
    stats: ResponseStats, params: TemplateParams, rng: np.random.Generator | None = None
) -> float:
    """One response: the mean in deterministic mode, a Normal draw otherwise."""
    if params.mode == "deterministic":
        return stats.mean
    if rng is None:
        raise ValueError("sampled mode needs a random generator")
    return float(rng.normal(stats.mean, stats.std))


# vectorized forms used by the search loop and the decision kernel


def ibs_field_stats(
    dprime: np.ndarray, target_mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(mean, std) per cell for a plain-response fixation."""
    if np.any(dprime <= 0):
        raise ValueError("dprime must be positive")
    mean = np.where(target_mask, 0.5, -0.5)
    return mean, 1.0 / dprime


def cibs_field_stats(
    dprime: np.ndarray,
    target_mask: np.ndarray,
    corr: np.ndarray,
    params: TemplateParams,
) -> tuple[np.ndarray, np.ndarray]:
    """(mean, std) per cell for a correlation-pulled fixation."""
    mu = np.where(target_mask, 0.5, -0.5)
    return _corr_pulled_mean(mu, dprime, corr), 1.0 / (params.a * dprime + params.b)


def ibs_decision_stats(
    dtable: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-candidate (non-target mean, target-mean gap, std) matrices."""
    if np.any(dtable <= 0):
        raise ValueError("dprime must be positive")
    mu0 = np.full_like(dtable, -0.5)
    dmu = np.ones_like(dtable)
    return mu0, dmu, 1.0 / dtable


def cibs_decision_stats(
    dtable: np.ndarray, corr_flat: np.ndarray, params: TemplateParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Correlation-aware decision stats; corr enters per probed cell (column)."""
    corr_row = corr_flat[np.newaxis, :]
    mu0 = _corr_pulled_mean(-0.5, dtable, corr_row)
    # target-vs-nontarget mean gap: (mu difference) * (d' + 1/2)
    dmu = dtable + 0.5
    return mu0, dmu, 1.0 / (params.a * dtable + params.b)
