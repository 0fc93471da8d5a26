"""Human-vs-model comparison metrics, frozen small-case oracles included."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scansim.grid import Cell, GridConfig, Scanpath
from scansim.metrics import (
    PerformanceCurve,
    auc_from_scores,
    dissimilarity_records,
    jaccard,
    mean_agreement,
    participant_curve,
    performance_curve,
    regression_slope_null_intercept,
    roc_auc,
    scanpath_dissimilarity,
    spearman,
    tfm_vector,
    weighted_distance,
)
from scansim.priors import SaliencyMap

CFG = GridConfig(image_width_px=1024, image_height_px=768, cell_size_px=32)


def path(*cells):
    return Scanpath(tuple(Cell(c, r) for c, r in cells))


# ---------------------------------------------------------------------------
# performance curves


def test_performance_curve():
    curve = performance_curve({4: [True, True], 2: [True, False]})
    assert curve.budgets == (2, 4)
    assert curve.proportions == (0.5, 1.0)
    assert curve.std is None


def test_participant_curve_spread():
    curve = participant_curve({2: [0.0, 1.0]})
    assert curve.proportions == (0.5,)
    assert curve.std == pytest.approx((math.sqrt(0.5),), abs=1e-12)


def test_curve_validation():
    with pytest.raises(ValueError):
        PerformanceCurve(budgets=(1, 2), proportions=(0.5,))
    with pytest.raises(ValueError):
        performance_curve({2: []})


def test_weighted_distance_oracle():
    human = PerformanceCurve(budgets=(2, 4), proportions=(0.5, 0.5), std=(0.5, 0.5))
    model = PerformanceCurve(budgets=(2, 4), proportions=(0.5, 1.0))
    # only the second budget differs: 0.5 / (4 * 0.25) = 0.5
    assert weighted_distance(human, model) == pytest.approx(0.5, abs=1e-12)
    same = PerformanceCurve(budgets=(2, 4), proportions=(0.5, 0.5))
    assert weighted_distance(human, same) == 0.0


def test_weighted_distance_requires_positive_spread():
    model = PerformanceCurve(budgets=(2,), proportions=(1.0,))
    no_std = PerformanceCurve(budgets=(2,), proportions=(0.0,))
    with pytest.raises(ValueError):
        weighted_distance(no_std, model)
    zero = PerformanceCurve(budgets=(2,), proportions=(0.0,), std=(0.0,))
    with pytest.raises(ValueError):
        weighted_distance(zero, model)
    other = PerformanceCurve(budgets=(4,), proportions=(1.0,))
    human = PerformanceCurve(budgets=(2,), proportions=(0.0,), std=(0.5,))
    with pytest.raises(ValueError):
        weighted_distance(human, other)


# ---------------------------------------------------------------------------
# found-vector agreement


def test_tfm_vector_applies_budgets():
    got = tfm_vector(
        found=[True, True, False], saccades=[3, 9, 0], budgets=[4, 8, 12]
    )
    assert got.tolist() == [True, False, False]
    with pytest.raises(ValueError):
        tfm_vector([True], [1, 2], [3])


def test_jaccard_oracles():
    assert jaccard([True, False, True], [True, True, False]) == pytest.approx(1 / 3)
    assert jaccard([False, False], [False, False]) == 1.0
    assert jaccard([True], [True]) == 1.0
    with pytest.raises(ValueError):
        jaccard([True], [True, False])


def test_mean_agreement_oracles():
    x = [True, False, True, False]
    assert mean_agreement(x, [True, False, False, False]) == 0.75
    assert mean_agreement(x, x) == 1.0
    with pytest.raises(ValueError):
        mean_agreement([True], [True, False])


# ---------------------------------------------------------------------------
# rank correlation and regression


def test_spearman_oracles():
    assert spearman([1, 2, 3], [2, 1, 3]) == pytest.approx(0.5, abs=1e-12)
    assert spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0, abs=1e-12)
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)
    assert math.isnan(spearman([1, 1, 1], [1, 2, 3]))
    with pytest.raises(ValueError):
        spearman([1, 2], [3, 4])


def test_spearman_matches_scipy_with_ties():
    stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(0)
    for _ in range(40):
        n = int(rng.integers(3, 25))
        x = rng.integers(0, 6, n).astype(float)
        y = rng.integers(0, 6, n).astype(float)
        want = stats.spearmanr(x, y).correlation
        got = spearman(x, y)
        if math.isnan(want):
            assert math.isnan(got)
        else:
            assert got == pytest.approx(want, abs=1e-12)


def test_regression_slope_oracles():
    assert regression_slope_null_intercept([1, 2], [1, 1]) == pytest.approx(0.6)
    x = np.linspace(0.5, 3.0, 7)
    assert regression_slope_null_intercept(x, 2 * x) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError):
        regression_slope_null_intercept([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        regression_slope_null_intercept([1.0], [1.0, 2.0])


# ---------------------------------------------------------------------------
# scanpath dissimilarity


def test_dissimilarity_identity_and_bounds():
    s = path((0, 0), (3, 1), (5, 5))
    assert scanpath_dissimilarity(s, s, CFG) == 0.0
    with pytest.raises(ValueError):
        scanpath_dissimilarity(s, path((1, 1)), CFG)


def test_dissimilarity_single_pair_oracle():
    # one saccade each, differing by 64 px against a 1280 px diagonal
    a = path((0, 0), (4, 0))
    b = path((0, 0), (6, 0))
    assert scanpath_dissimilarity(a, b, CFG) == pytest.approx(
        64.0 / 1280.0, abs=1e-12
    )


def test_dissimilarity_unmatched_saccade_oracle():
    # identical first saccade; the extra 64 px saccade is amortized over
    # an alignment of length two
    a = path((0, 0), (4, 0))
    b = path((0, 0), (4, 0), (6, 0))
    assert scanpath_dissimilarity(a, b, CFG) == pytest.approx(
        32.0 / 1280.0, abs=1e-12
    )


small_paths = st.lists(
    st.tuples(st.integers(0, 7), st.integers(0, 7)), min_size=2, max_size=6
).filter(lambda pts: all(a != b for a, b in zip(pts, pts[1:])))


@settings(max_examples=80, deadline=None)
@given(small_paths, small_paths)
def test_dissimilarity_symmetric_and_bounded(p1, p2):
    a, b = path(*p1), path(*p2)
    d_ab = scanpath_dissimilarity(a, b, CFG)
    d_ba = scanpath_dissimilarity(b, a, CFG)
    assert d_ab == pytest.approx(d_ba, abs=1e-12)
    assert 0.0 <= d_ab <= 1.0


def test_dissimilarity_records_and_skips():
    h1 = path((0, 0), (4, 0))
    h2 = path((0, 0), (6, 0))
    model = path((0, 0), (4, 0))
    records, skipped = dissimilarity_records(
        {
            "a": [h1, h2],
            "b": [h1],            # one correct human only
            "c": [h1, h2],        # no model run found the target
            "d": [h1, path((5, 5))],  # the single-fixation path drops out
        },
        {"a": model, "b": model, "c": None, "d": model},
        CFG,
    )
    assert [r.image_id for r in records] == ["a"]
    rec = records[0]
    assert rec.bhsd == pytest.approx(64.0 / 1280.0, abs=1e-12)
    d1 = scanpath_dissimilarity(h1, model, CFG)
    d2 = scanpath_dissimilarity(h2, model, CFG)
    assert rec.hmsd == pytest.approx((d1 + d2) / 2, abs=1e-12)
    assert ("b", "fewer than 2 correct human scanpaths") in skipped
    assert ("c", "no correct model scanpath") in skipped
    assert ("d", "fewer than 2 correct human scanpaths") in skipped


# ---------------------------------------------------------------------------
# ROC / AUC


def test_auc_from_scores_oracles():
    assert auc_from_scores([1.0], [0.0]) == 1.0
    assert auc_from_scores([0.0], [1.0]) == 0.0
    assert auc_from_scores([0.5, 0.5], [0.5]) == 0.5
    assert auc_from_scores([0.8, 0.4], [0.6, 0.2]) == pytest.approx(0.75, abs=1e-12)
    with pytest.raises(ValueError):
        auc_from_scores([], [1.0])


def test_threshold_set_changes_the_sweep():
    # sweeping at the positive scores only crosses the negatives differently
    pos, neg = [0.5], [0.9, 0.1]
    assert auc_from_scores(pos, neg) == pytest.approx(0.5, abs=1e-12)
    assert auc_from_scores(pos, neg, thresholds=pos) == pytest.approx(
        0.75, abs=1e-12
    )


def _map_with_positives(shape, positives, hot=1.0):
    values = np.zeros(shape)
    for x, y in positives:
        values[y, x] = hot
    return SaliencyMap(values=values)


def test_roc_auc_perfect_separation():
    pts = [(3, 2), (7, 5), (1, 8)]
    smap = _map_with_positives((10, 10), pts)
    for variant in ("paper_main", "judd", "borji"):
        assert roc_auc(smap, pts, variant=variant, seed=0) == 1.0
    assert (
        roc_auc(smap, pts, variant="shuffled", negatives_source=[(0, 0), (9, 9)])
        == 1.0
    )


def test_roc_auc_constant_map_is_chance():
    smap = SaliencyMap(values=np.ones((10, 10)))
    pts = [(3, 2), (7, 5)]
    for variant in ("paper_main", "judd", "borji"):
        assert roc_auc(smap, pts, variant=variant, seed=1) == 0.5
    assert (
        roc_auc(smap, pts, variant="shuffled", negatives_source=[(0, 0), (9, 9)])
        == 0.5
    )


def test_roc_auc_judd_thresholds_at_positives():
    values = np.zeros((1, 3))
    values[0] = [0.9, 0.5, 0.1]
    smap = SaliencyMap(values=values)
    pts = [(1, 0)]
    assert roc_auc(smap, pts, variant="paper_main") == pytest.approx(0.5, abs=1e-12)
    assert roc_auc(smap, pts, variant="judd") == pytest.approx(0.75, abs=1e-12)


def test_roc_auc_borji_is_seeded():
    rng = np.random.default_rng(8)
    smap = SaliencyMap(values=rng.random((20, 30)))
    pts = [(3, 2), (17, 11), (29, 19), (5, 5)]
    a = roc_auc(smap, pts, variant="borji", seed=4)
    b = roc_auc(smap, pts, variant="borji", seed=4)
    c = roc_auc(smap, pts, variant="borji", seed=5)
    assert a == b
    assert 0.0 <= a <= 1.0
    assert a != c  # ten small resamples almost surely differ across seeds


def test_roc_auc_positives_never_serve_as_negatives():
    # every non-fixated pixel outscores the fixated one; if the fixation
    # leaked into the negative pool the AUC would rise above zero
    values = np.ones((5, 5))
    values[2, 2] = 0.0
    smap = SaliencyMap(values=values)
    assert roc_auc(smap, [(2, 2)], variant="paper_main") == 0.0
    # shuffled negatives drawn at the fixation location are discarded
    with pytest.raises(ValueError, match="no negative"):
        roc_auc(smap, [(2, 2)], variant="shuffled", negatives_source=[(2, 2)])


def test_roc_auc_validation():
    smap = SaliencyMap(values=np.ones((4, 4)))
    with pytest.raises(ValueError, match="unknown AUC variant"):
        roc_auc(smap, [(0, 0)], variant="nss")
    with pytest.raises(ValueError, match="at least one positive"):
        roc_auc(smap, [], variant="paper_main")
    with pytest.raises(ValueError, match="needs fixation locations"):
        roc_auc(smap, [(0, 0)], variant="shuffled")


def test_roc_auc_clamps_out_of_bounds_fixations():
    values = np.zeros((4, 4))
    values[3, 3] = 1.0
    smap = SaliencyMap(values=values)
    # the fixation lands past the corner and clamps onto the hot pixel
    assert roc_auc(smap, [(10.0, 10.0)], variant="paper_main") == 1.0
