"""Fixation-selection policies and the search trial loop.

Four policies choose the next fixation from the current belief state:

* ``ibs``      pick the cell maximizing the posterior-weighted probability of
               identifying the target after the saccade (plain responses).
* ``cibs``     same planner with correlation-pulled responses.
* ``greedy``   maximize the expected detectability-weighted posterior mass at
               the next fixation, ignoring how the belief will be updated.
* ``saliency_ior``  walk the prior's peaks, suppressing every visited cell
               and its neighborhood.

A trial starts at the forced initial fixation (rank 1, not a saccade) and
stops when a fixation hits the target or the saccade budget is spent. The
Bayesian policies and greedy update the posterior with the current
fixation's responses before every decision; visited cells stay candidates
(inhibition of return is emergent), only an immediate refixation of the
current cell is excluded.

Ties always resolve to the lowest (row, col) cell. Decisions Monte-Carlo
average ``mc_samples`` seeded response-field draws shared across candidates
in both response modes; ``response_mode`` only picks whether the realized
responses fed to the posterior update are noise-free means (deterministic)
or seeded draws (sampled).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from . import _kernels, posterior
from ._rng import derive_rng
from .grid import (
    Cell,
    GridConfig,
    Scanpath,
    Trial,
    cell_index,
    index_to_cell,
    pixel_to_cell,
    target_hit,
)
from .posterior import PosteriorState
from .priors import PriorGrid
from .template import (
    CorrelationMap,
    TemplateParams,
    cibs_decision_stats,
    cibs_field_stats,
    ibs_decision_stats,
    ibs_field_stats,
)
from .visibility import VisibilityField, VisibilityParams, visibility_table

logger = logging.getLogger(__name__)

POLICIES = ("ibs", "cibs", "greedy", "saliency_ior")
Policy = Literal["ibs", "cibs", "greedy", "saliency_ior"]


@dataclass(frozen=True)
class SearchConfig:
    """Policy choice plus the knobs shared by every trial of a run."""

    policy: Policy = "ibs"
    max_saccades: int = 12
    mc_samples: int = 64
    seed: int = 0
    response_mode: Literal["deterministic", "sampled"] = "deterministic"
    ior_radius: int = 1

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.max_saccades < 1:
            raise ValueError("max_saccades must be at least 1")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be at least 1")
        if self.response_mode not in ("deterministic", "sampled"):
            raise ValueError(f"unknown response mode {self.response_mode!r}")
        if self.ior_radius < 0:
            raise ValueError("ior_radius must be non-negative")


@dataclass(frozen=True)
class SearchResult:
    scanpath: Scanpath
    found: bool
    saccades_used: int


@dataclass
class SearchContext:
    """Per-image immutable inputs plus cached pairwise tables.

    ``dtable[k, i]`` is d' of cell i when fixating cell k (flat row-major
    indices); ``corr`` is required by the cibs policy only.
    """

    grid: GridConfig
    vis: VisibilityParams
    template: TemplateParams
    prior: PriorGrid
    corr: CorrelationMap | None = None
    dtable: np.ndarray = field(init=False, repr=False)
    d2table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.prior.p.shape != (self.grid.grid_rows, self.grid.grid_cols):
            raise ValueError("prior does not match the grid")
        if self.corr is not None and self.corr.c.shape != self.prior.p.shape:
            raise ValueError("correlation map does not match the grid")
        self.dtable = visibility_table(self.vis, self.grid)
        self.d2table = self.dtable * self.dtable
        self._decision_stats_cache: dict[str, tuple] = {}

    def decision_stats(self, kind: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cached per-candidate (mu0, dmu, sigma) matrices for ibs/cibs."""
        if kind not in self._decision_stats_cache:
            if kind == "ibs":
                stats = ibs_decision_stats(self.dtable)
            elif kind == "cibs":
                if self.corr is None:
                    raise ValueError("cibs requires a correlation map")
                stats = cibs_decision_stats(self.dtable, self.corr.flat, self.template)
            else:
                raise ValueError(f"no decision stats for policy {kind!r}")
            self._decision_stats_cache[kind] = stats
        return self._decision_stats_cache[kind]

    def field_stats(
        self, kind: str, fixation_index: int, target_index: int
    ) -> tuple[np.ndarray, np.ndarray]:
        """Flat (mean, std) response stats for one fixation, true target known."""
        dprime = self.dtable[fixation_index]
        mask = np.arange(self.grid.n_cells) == target_index
        if kind == "cibs":
            if self.corr is None:
                raise ValueError("cibs requires a correlation map")
            return cibs_field_stats(dprime, mask, self.corr.flat, self.template)
        return ibs_field_stats(dprime, mask)


def _response_kind(policy: str) -> str:
    return "cibs" if policy == "cibs" else "ibs"


def p_correct(
    i: Cell,
    k_next: Cell,
    state: PosteriorState,
    v_next: VisibilityField | np.ndarray,
    context: SearchContext,
    cfg: SearchConfig,
    rng: np.random.Generator | None = None,
) -> float:
    """Probability that the posterior argmax identifies ``i`` after fixating
    ``k_next``, given the target really is at ``i``.

    Always a Monte-Carlo estimate: draws ``cfg.mc_samples`` response fields
    from ``rng`` and counts the fraction whose updated argmax lands on
    ``i``. An argmax tie counts as incorrect.
    """
    grid = context.grid
    n = grid.n_cells
    ii = cell_index(i, grid)
    dprime = v_next.values if isinstance(v_next, VisibilityField) else v_next
    dprime = np.asarray(dprime, dtype=np.float64).reshape(-1)
    if dprime.shape != (n,):
        raise ValueError("visibility field does not match the grid")
    kind = _response_kind(cfg.policy)
    mask = np.arange(n) == ii
    if kind == "cibs":
        if context.corr is None:
            raise ValueError("cibs requires a correlation map")
        mean, std = cibs_field_stats(dprime, mask, context.corr.flat, context.template)
    else:
        mean, std = ibs_field_stats(dprime, mask)
    log_w = state.log_weights.reshape(-1)
    d2 = dprime * dprime
    others = np.arange(n) != ii
    if rng is None:
        raise ValueError("p_correct needs a random generator")
    z = rng.standard_normal((cfg.mc_samples, n))
    scores = log_w + d2 * (mean + std * z)
    if n > 1:
        rest = scores[:, others].max(axis=1)
    else:
        rest = np.full(cfg.mc_samples, -np.inf)
    return float(np.mean(scores[:, ii] > rest))


def _bayes_objectives(
    state: PosteriorState,
    context: SearchContext,
    cfg: SearchConfig,
    rng: np.random.Generator | None,
) -> np.ndarray:
    """Expected-correct objective for every candidate fixation.

    Planning always integrates over response noise: one shared block of
    ``cfg.mc_samples`` standard-normal fields prices every candidate, so
    candidates are compared under common random numbers.
    """
    n = context.grid.n_cells
    mu0, dmu, sigma = context.decision_stats(_response_kind(cfg.policy))
    log_w = np.ascontiguousarray(state.log_weights.reshape(-1), dtype=np.float64)
    probs = posterior.probabilities(state).reshape(-1)
    if rng is None:
        raise ValueError("fixation planning needs a random generator")
    z = rng.standard_normal((cfg.mc_samples, n))
    return _kernels.decision_objectives(
        log_w, probs, context.d2table, mu0, dmu, sigma, z
    )


def next_fixation_ibs(
    state: PosteriorState,
    context: SearchContext,
    cfg: SearchConfig,
    current: Cell,
    rng: np.random.Generator | None = None,
) -> Cell:
    """Argmax-of-expected-correct planner; serves both ibs and cibs.

    Every cell except the current fixation is a candidate; ties go to the
    lowest (row, col) cell.
    """
    obj = _bayes_objectives(state, context, cfg, rng)
    obj[cell_index(current, context.grid)] = -np.inf
    return index_to_cell(int(np.argmax(obj)), context.grid)


def next_fixation_greedy(
    state: PosteriorState, context: SearchContext, current: Cell
) -> Cell:
    """Maximize the detectability-weighted posterior mass at the saccade target."""
    p = posterior.probabilities(state).reshape(-1)
    scores = context.dtable @ p
    scores[cell_index(current, context.grid)] = -np.inf
    return index_to_cell(int(np.argmax(scores)), context.grid)


def _suppression_mask(
    visited: Sequence[Cell], grid: GridConfig, radius: int
) -> np.ndarray:
    mask = np.zeros((grid.grid_rows, grid.grid_cols), dtype=bool)
    for c in visited:
        r0, r1 = max(c.row - radius, 0), min(c.row + radius, grid.grid_rows - 1)
        c0, c1 = max(c.col - radius, 0), min(c.col + radius, grid.grid_cols - 1)
        mask[r0 : r1 + 1, c0 : c1 + 1] = True
    return mask.reshape(-1)


def next_fixation_saliency(
    visited: Sequence[Cell],
    context: SearchContext,
    radius: int = 1,
) -> Cell:
    """Prior argmax with every visited cell's neighborhood suppressed to zero."""
    grid = context.grid
    mask = _suppression_mask(visited, grid, radius)
    if mask.all():
        logger.warning("all cells suppressed; falling back to the global prior argmax")
        return index_to_cell(int(np.argmax(context.prior.flat)), grid)
    vals = np.where(mask, 0.0, context.prior.flat)
    return index_to_cell(int(np.argmax(vals)), grid)


def _validate_trial(trial: Trial, grid: GridConfig) -> None:
    t = trial.target
    if (
        t.left < 0
        or t.top < 0
        or t.left + t.width > grid.image_width_px
        or t.top + t.height > grid.image_height_px
    ):
        raise ValueError(f"target region of trial {trial.image_id!r} leaves the image")


def run_search(trial: Trial, context: SearchContext, cfg: SearchConfig) -> SearchResult:
    """Run one trial; see the module docstring for the loop contract."""
    grid = context.grid
    _validate_trial(trial, grid)
    if cfg.policy == "cibs" and context.corr is None:
        raise ValueError("cibs requires a correlation map in the context")

    sampled = cfg.response_mode == "sampled"
    resp_rng = derive_rng(cfg.seed, trial.image_id, "responses") if sampled else None
    dec_rng = (
        derive_rng(cfg.seed, trial.image_id, "decision")
        if cfg.policy in ("ibs", "cibs")
        else None
    )

    target_index = cell_index(pixel_to_cell(trial.target.center, grid), grid)
    current = pixel_to_cell(trial.initial_fixation, grid)
    path = [current]
    saccades = 0
    found = False

    state = (
        posterior.init(context.prior) if cfg.policy != "saliency_ior" else None
    )
    kind = _response_kind(cfg.policy)
    shape = (grid.grid_rows, grid.grid_cols)

    while True:
        if target_hit(current, trial.target, grid):
            found = True
            break
        if saccades == trial.max_saccades:
            break
        if cfg.policy == "saliency_ior":
            nxt = next_fixation_saliency(path, context, cfg.ior_radius)
        else:
            fix_index = cell_index(current, grid)
            mean, std = context.field_stats(kind, fix_index, target_index)
            if sampled:
                w = mean + std * resp_rng.standard_normal(grid.n_cells)
            else:
                w = mean
            state = posterior.update(
                state,
                current,
                np.asarray(w).reshape(shape),
                context.dtable[fix_index].reshape(shape),
            )
            if cfg.policy == "greedy":
                nxt = next_fixation_greedy(state, context, current)
            else:
                nxt = next_fixation_ibs(state, context, cfg, current, dec_rng)
        if nxt == current:
            # degenerate saliency fallback on a fully suppressed grid
            break
        current = nxt
        path.append(nxt)
        saccades += 1

    return SearchResult(
        scanpath=Scanpath(tuple(path)), found=found, saccades_used=saccades
    )
