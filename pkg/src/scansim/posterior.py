"""Log-domain posterior over target location.

Each fixation multiplies the posterior by exp(d'^2 * W) per cell; here that
is an addition of d'^2 * W to per-cell log weights seeded with the log prior.
Probabilities are recovered with a max-shifted softmax, so hundreds of
updates cannot overflow and tiny weights cannot underflow to hard zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Cell
from .priors import PriorGrid
from .visibility import VisibilityField


@dataclass(frozen=True)
class PosteriorState:
    """Accumulated log weights (log prior + evidence), plus fixation history."""

    log_weights: np.ndarray
    fixations: tuple[Cell, ...] = ()

    @property
    def n_updates(self) -> int:
        return len(self.fixations)


def init(prior: PriorGrid) -> PosteriorState:
    return PosteriorState(log_weights=np.log(prior.p))


def update(
    state: PosteriorState,
    fixation: Cell,
    responses: np.ndarray,
    dprime: VisibilityField | np.ndarray,
) -> PosteriorState:
    """Fold one fixation's responses in; returns a new state, inputs untouched."""
    if isinstance(dprime, VisibilityField):
        dprime = dprime.values
    if responses.shape != state.log_weights.shape:
        raise ValueError("responses shape does not match the posterior grid")
    if dprime.shape != state.log_weights.shape:
        raise ValueError("visibility shape does not match the posterior grid")
    log_w = state.log_weights + dprime * dprime * responses
    return PosteriorState(log_weights=log_w, fixations=state.fixations + (fixation,))


def probabilities(state: PosteriorState) -> np.ndarray:
    """Normalized posterior grid; max-shifted exponentiation keeps it finite."""
    shifted = state.log_weights - state.log_weights.max()
    w = np.exp(shifted)
    return w / w.sum()
