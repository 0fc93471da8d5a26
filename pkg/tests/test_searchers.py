"""Fixation policies and the search loop."""

import numpy as np
import pytest

from scansim import posterior
from scansim._rng import derive_rng
from scansim.grid import (
    Cell,
    GridConfig,
    PixelPoint,
    TargetRegion,
    Trial,
    cell_center,
    target_hit,
)
from scansim.priors import PriorGrid, flat_prior, noise_prior
from scansim.searchers import (
    SearchConfig,
    SearchContext,
    next_fixation_greedy,
    next_fixation_saliency,
    p_correct,
    run_search,
)
from scansim.template import TemplateParams, zero_correlation
from scansim.visibility import VisibilityParams, visibility_field

CFG = GridConfig(image_width_px=160, image_height_px=128, cell_size_px=32)


def make_context(cfg=CFG, prior=None, with_corr=False):
    return SearchContext(
        grid=cfg,
        vis=VisibilityParams(),
        template=TemplateParams(),
        prior=prior if prior is not None else flat_prior(cfg),
        corr=zero_correlation(cfg) if with_corr else None,
    )


def peaked_prior(cfg, cell, mass=1.0 - 1e-9):
    p = np.full((cfg.grid_rows, cfg.grid_cols), (1.0 - mass) / (cfg.n_cells - 1))
    p[cell.row, cell.col] = mass
    return PriorGrid(p=p / p.sum())


def region_of(cell, cfg=CFG):
    return TargetRegion(
        left=cell.col * cfg.cell_size_px,
        top=cell.row * cfg.cell_size_px,
        width=cfg.cell_size_px,
        height=cfg.cell_size_px,
    )


def make_trial(target_cell, init_cell, budget=12, cfg=CFG):
    return Trial(
        image_id="unit",
        target=region_of(target_cell, cfg),
        initial_fixation=cell_center(init_cell, cfg),
        max_saccades=budget,
    )


def test_search_config_validation():
    for bad in (
        dict(policy="other"),
        dict(max_saccades=0),
        dict(mc_samples=0),
        dict(response_mode="noisy"),
        dict(ior_radius=-1),
    ):
        with pytest.raises(ValueError):
            SearchConfig(**bad)


def test_context_validation():
    other = GridConfig(image_width_px=64, image_height_px=64, cell_size_px=32)
    with pytest.raises(ValueError, match="prior"):
        SearchContext(
            grid=CFG,
            vis=VisibilityParams(),
            template=TemplateParams(),
            prior=flat_prior(other),
        )
    with pytest.raises(ValueError, match="correlation"):
        SearchContext(
            grid=CFG,
            vis=VisibilityParams(),
            template=TemplateParams(),
            prior=flat_prior(CFG),
            corr=zero_correlation(other),
        )


def test_cibs_requires_correlation_map():
    trial = make_trial(Cell(4, 3), Cell(0, 0))
    with pytest.raises(ValueError, match="correlation"):
        run_search(trial, make_context(), SearchConfig(policy="cibs"))


def test_immediate_hit_uses_no_saccades():
    trial = make_trial(Cell(2, 1), Cell(2, 1))
    for policy in ("ibs", "greedy", "saliency_ior"):
        r = run_search(trial, make_context(), SearchConfig(policy=policy))
        assert r.found
        assert r.saccades_used == 0
        assert r.scanpath.fixations == (Cell(2, 1),)


def test_target_region_outside_image_rejected():
    trial = Trial(
        image_id="bad",
        target=TargetRegion(left=150, top=0, width=32, height=32),
        initial_fixation=PixelPoint(10, 10),
        max_saccades=4,
    )
    with pytest.raises(ValueError, match="leaves the image"):
        run_search(trial, make_context(), SearchConfig())


def test_greedy_goes_to_the_posterior_peak():
    j = Cell(4, 3)
    ctx = make_context(prior=peaked_prior(CFG, j))
    trial = make_trial(j, Cell(0, 0), budget=4)
    r = run_search(trial, ctx, SearchConfig(policy="greedy"))
    assert r.found
    assert r.saccades_used == 1
    assert r.scanpath.fixations == (Cell(0, 0), j)


def test_greedy_breaks_exact_ties_toward_the_lowest_index():
    cfg = GridConfig(image_width_px=96, image_height_px=32, cell_size_px=32)
    ctx = make_context(cfg=cfg)
    state = posterior.init(flat_prior(cfg))
    # from the middle of a 1x3 strip both ends score identically
    assert next_fixation_greedy(state, ctx, Cell(1, 0)) == Cell(0, 0)


def test_point_mass_posterior_ties_every_candidate():
    """An already-certain posterior scores all candidates identically.

    With zero weight everywhere else, every sampled no-target score is
    -inf, so each candidate identifies the believed cell with probability
    exactly one and the planner falls to the lowest-index tie-break
    regardless of the noise draws.
    """
    lw = np.full((CFG.grid_rows, CFG.grid_cols), -np.inf)
    lw[0, 0] = 0.0
    ctx = make_context()
    state = posterior.PosteriorState(log_weights=lw)
    config = SearchConfig(policy="ibs", mc_samples=16)

    from scansim.searchers import _bayes_objectives, next_fixation_ibs

    obj = _bayes_objectives(state, ctx, config, derive_rng(0, "tie"))
    assert np.all(obj == 1.0)
    for seed in range(3):
        for current in (Cell(2, 1), Cell(4, 3), Cell(1, 0)):
            nxt = next_fixation_ibs(
                state, ctx, config, current, derive_rng(seed, "tie")
            )
            assert nxt == Cell(0, 0)


def test_single_candidate_strip_returns_the_other_cell():
    # two cells, current excluded, so the remaining cell wins outright
    cfg = GridConfig(image_width_px=64, image_height_px=32, cell_size_px=32)
    prior = PriorGrid(p=np.array([[0.99, 0.01]]))
    ctx = make_context(cfg=cfg, prior=prior)
    state = posterior.init(prior)

    from scansim.searchers import next_fixation_ibs

    nxt = next_fixation_ibs(
        state, ctx, SearchConfig(policy="ibs"), Cell(1, 0), derive_rng(0, "strip")
    )
    assert nxt == Cell(0, 0)


def test_saliency_policy_skips_suppressed_neighborhoods():
    p = np.full((CFG.grid_rows, CFG.grid_cols), 1e-6)
    p[1, 3] = 0.9  # adjacent to the visited cell, inside its radius-1 box
    p[0, 0] = 0.5
    prior = PriorGrid(p=p / p.sum())
    ctx = make_context(prior=prior)
    assert next_fixation_saliency([Cell(2, 1)], ctx, radius=1) == Cell(0, 0)
    # radius 0 only blocks the visited cell itself
    assert next_fixation_saliency([Cell(2, 1)], ctx, radius=0) == Cell(3, 1)


def test_saliency_policy_full_suppression_falls_back(caplog):
    cfg = GridConfig(image_width_px=64, image_height_px=64, cell_size_px=32)
    p = np.array([[0.1, 0.2], [0.3, 0.4]])
    ctx = make_context(cfg=cfg, prior=PriorGrid(p=p))
    with caplog.at_level("WARNING", logger="scansim.searchers"):
        got = next_fixation_saliency([Cell(0, 0)], ctx, radius=1)
    assert got == Cell(1, 1)
    assert any("suppressed" in r.message for r in caplog.records)


def test_saliency_ior_run_visits_distinct_cells():
    prior = noise_prior(CFG, 3)
    ctx = make_context(prior=prior)
    trial = make_trial(Cell(4, 3), Cell(0, 0), budget=CFG.n_cells - 1)
    r = run_search(trial, ctx, SearchConfig(policy="saliency_ior", ior_radius=0))
    fixations = r.scanpath.fixations
    assert len(set(fixations)) == len(fixations)
    assert r.saccades_used <= trial.max_saccades


def test_saliency_ior_terminates_when_everything_is_suppressed():
    cfg = GridConfig(image_width_px=64, image_height_px=64, cell_size_px=32)
    p = np.array([[0.4, 0.3], [0.2, 0.1]])
    ctx = make_context(cfg=cfg, prior=PriorGrid(p=p))
    trial = make_trial(Cell(1, 1), Cell(0, 0), budget=30, cfg=cfg)
    r = run_search(trial, ctx, SearchConfig(policy="saliency_ior", ior_radius=1))
    # the full-grid suppression fallback ends the trial early
    assert r.saccades_used < 30


def test_found_flag_matches_the_last_fixation():
    prior = noise_prior(CFG, 9)
    for policy in ("ibs", "greedy", "saliency_ior"):
        for budget in (2, 6, 12):
            trial = make_trial(Cell(1, 3), Cell(3, 0), budget=budget)
            ctx = make_context(prior=prior)
            r = run_search(trial, ctx, SearchConfig(policy=policy))
            assert target_hit(r.scanpath.fixations[-1], trial.target, CFG) == r.found
            assert r.saccades_used == len(r.scanpath.fixations) - 1
            assert r.saccades_used <= budget


def test_runs_are_reproducible():
    trial = make_trial(Cell(4, 2), Cell(0, 1))
    for mode in ("deterministic", "sampled"):
        cfg = SearchConfig(policy="ibs", response_mode=mode, seed=7)
        a = run_search(trial, make_context(), cfg)
        b = run_search(trial, make_context(), cfg)
        assert a == b


def test_sampled_runs_depend_on_the_seed():
    trial = make_trial(Cell(4, 2), Cell(0, 1))
    paths = set()
    for seed in range(4):
        cfg = SearchConfig(policy="ibs", response_mode="sampled", seed=seed)
        paths.add(run_search(trial, make_context(), cfg).scanpath.fixations)
    assert len(paths) > 1


def test_budget_runs_share_a_prefix():
    trial12 = make_trial(Cell(0, 3), Cell(4, 0), budget=12)
    trial3 = make_trial(Cell(0, 3), Cell(4, 0), budget=3)
    for mode in ("deterministic", "sampled"):
        cfg = SearchConfig(policy="ibs", response_mode=mode, seed=1)
        short = run_search(trial3, make_context(), cfg).scanpath.fixations
        long = run_search(trial12, make_context(), cfg).scanpath.fixations
        assert long[: len(short)] == short


def test_deterministic_search_finds_a_planted_target():
    trial = make_trial(Cell(4, 3), Cell(0, 0), budget=CFG.n_cells)
    ctx_plain = make_context()
    ctx_corr = make_context(with_corr=True)
    assert run_search(trial, ctx_plain, SearchConfig(policy="ibs")).found
    assert run_search(trial, ctx_corr, SearchConfig(policy="cibs")).found


def test_p_correct_bounds_and_reproducibility():
    ctx = make_context()
    state = posterior.init(ctx.prior)
    cfg = SearchConfig(policy="ibs", mc_samples=64)
    k = Cell(2, 1)
    v = visibility_field(k, ctx.vis, ctx.grid)
    a = p_correct(k, k, state, v, ctx, cfg, derive_rng(0, "t"))
    b = p_correct(k, k, state, v, ctx, cfg, derive_rng(0, "t"))
    assert a == b
    assert 0.0 <= a <= 1.0
    with pytest.raises(ValueError, match="random generator"):
        p_correct(k, k, state, v, ctx, cfg)


def test_p_correct_prefers_looking_at_the_hypothesis():
    """Identifying a cell is easier while fixating it than from far away."""
    ctx = make_context()
    cfg = SearchConfig(policy="ibs", mc_samples=512)
    state = posterior.init(ctx.prior)
    i = Cell(4, 3)
    near = p_correct(
        i, i, state, visibility_field(i, ctx.vis, ctx.grid), ctx, cfg,
        derive_rng(1, "near"),
    )
    far_k = Cell(0, 0)
    far = p_correct(
        i, far_k, state, visibility_field(far_k, ctx.vis, ctx.grid), ctx, cfg,
        derive_rng(1, "far"),
    )
    assert near > far
