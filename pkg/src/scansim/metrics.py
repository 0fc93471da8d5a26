"""Human-vs-model comparison metrics.

Detection-side: performance curves over saccade budgets, a std-weighted
curve distance, Jaccard and mean agreement over per-image found vectors.
Scanpath-side: a saccade-vector alignment dissimilarity, aggregated into
between-human (bhSD) and human-model (hmSD) records per image, summarized
by rank correlation and a null-intercept regression slope. Saliency-side:
ROC/AUC in four variants.

Found vectors are plain boolean arrays, one entry per image: TFP marks the
images a participant found, TFM the images the model found within that
participant's per-image budgets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .grid import GridConfig, PixelPoint, Scanpath, cell_center
from .priors import SaliencyMap

AUC_VARIANTS = ("paper_main", "judd", "borji", "shuffled")


@dataclass(frozen=True)
class PerformanceCurve:
    """Proportion of targets found per saccade budget, budgets ascending."""

    budgets: tuple[int, ...]
    proportions: tuple[float, ...]
    std: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.budgets) != len(self.proportions):
            raise ValueError("budgets and proportions must align")
        if any(b2 <= b1 for b1, b2 in zip(self.budgets, self.budgets[1:])):
            raise ValueError("budgets must be strictly ascending")
        if any(not 0 <= p <= 1 for p in self.proportions):
            raise ValueError("proportions must lie in [0, 1]")
        if self.std is not None and len(self.std) != len(self.budgets):
            raise ValueError("std must align with budgets")


@dataclass(frozen=True)
class DissimilarityRecord:
    """Per-image scanpath dissimilarity summary over correct trials."""

    image_id: str
    bhsd: float
    hmsd: float


def performance_curve(
    found_by_budget: Mapping[int, Sequence[bool]],
) -> PerformanceCurve:
    """Mean found-rate per budget."""
    budgets = tuple(sorted(found_by_budget))
    props = []
    for b in budgets:
        group = np.asarray(found_by_budget[b], dtype=bool)
        if group.size == 0:
            raise ValueError(f"budget {b} has no results")
        props.append(float(group.mean()))
    return PerformanceCurve(budgets=budgets, proportions=tuple(props))


def participant_curve(
    proportions_by_budget: Mapping[int, Sequence[float]],
) -> PerformanceCurve:
    """Mean and across-participant std (ddof=1) of per-participant rates."""
    budgets = tuple(sorted(proportions_by_budget))
    means, stds = [], []
    for b in budgets:
        vals = np.asarray(proportions_by_budget[b], dtype=np.float64)
        if vals.size == 0:
            raise ValueError(f"budget {b} has no participants")
        means.append(float(vals.mean()))
        stds.append(float(vals.std(ddof=1)) if vals.size > 1 else float("nan"))
    return PerformanceCurve(budgets=budgets, proportions=tuple(means), std=tuple(stds))


def weighted_distance(human: PerformanceCurve, model: PerformanceCurve) -> float:
    """Sum over budgets of |human - model| / (4 * std_N^2).

    std_N is the per-budget across-participant standard deviation carried by
    the human curve.
    """
    if human.budgets != model.budgets:
        raise ValueError("curves cover different budget sets")
    if human.std is None:
        raise ValueError("human curve carries no per-budget std")
    total = 0.0
    for ph, pm, s in zip(human.proportions, model.proportions, human.std):
        if not (s > 0 and math.isfinite(s)):
            raise ValueError("per-budget std must be positive for the weighting")
        total += abs(ph - pm) / (4.0 * s * s)
    return total


def tfm_vector(
    found: Sequence[bool], saccades: Sequence[int], budgets: Sequence[int]
) -> np.ndarray:
    """Model found-vector under a participant's per-image budget schedule."""
    found = np.asarray(found, dtype=bool)
    saccades = np.asarray(saccades, dtype=np.int64)
    budgets = np.asarray(budgets, dtype=np.int64)
    if not found.shape == saccades.shape == budgets.shape:
        raise ValueError("found, saccades, and budgets must align")
    return found & (saccades <= budgets)


def jaccard(tfp: Sequence[bool], tfm: Sequence[bool]) -> float:
    """|intersection| / |union|; two all-false vectors agree perfectly (1)."""
    a = np.asarray(tfp, dtype=bool)
    b = np.asarray(tfm, dtype=bool)
    if a.shape != b.shape:
        raise ValueError("found vectors differ in length")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def mean_agreement(x: Sequence[bool], y: Sequence[bool]) -> float:
    """1 - mean absolute difference."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("found vectors differ in length")
    return float(1.0 - np.abs(a - b).mean())


def _saccade_vectors(s: Scanpath, cfg: GridConfig) -> np.ndarray:
    centers = np.array(
        [(c.x, c.y) for c in (cell_center(f, cfg) for f in s)], dtype=np.float64
    )
    return np.diff(centers, axis=0)


def scanpath_dissimilarity(s1: Scanpath, s2: Scanpath, cfg: GridConfig) -> float:
    """Shape difference of two scanpaths in [0, 1].

    Each scanpath becomes its sequence of saccade vectors (pixel differences
    of consecutive cell centers). The sequences are aligned by dynamic
    programming minimizing total Euclidean vector-difference cost, where an
    unmatched saccade pairs with the zero vector (its own magnitude as
    cost); equal-cost alignments resolve to the fewest pairings. The result
    is the mean aligned cost over the alignment length, divided by the image
    diagonal and clamped into [0, 1].
    """
    if len(s1) < 2 or len(s2) < 2:
        raise ValueError("scanpath dissimilarity needs at least one saccade each")
    u = _saccade_vectors(s1, cfg)
    v = _saccade_vectors(s2, cfg)
    m, n = len(u), len(v)
    pair_cost = np.linalg.norm(u[:, np.newaxis, :] - v[np.newaxis, :, :], axis=2)
    gap_u = np.linalg.norm(u, axis=1)
    gap_v = np.linalg.norm(v, axis=1)

    cost = np.empty((m + 1, n + 1))
    length = np.empty((m + 1, n + 1), dtype=np.int64)
    cost[0, 0] = 0.0
    length[0, 0] = 0
    for i in range(1, m + 1):
        cost[i, 0] = cost[i - 1, 0] + gap_u[i - 1]
        length[i, 0] = i
    for j in range(1, n + 1):
        cost[0, j] = cost[0, j - 1] + gap_v[j - 1]
        length[0, j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            best_c = cost[i - 1, j - 1] + pair_cost[i - 1, j - 1]
            best_l = length[i - 1, j - 1] + 1
            for c, l in (
                (cost[i - 1, j] + gap_u[i - 1], length[i - 1, j] + 1),
                (cost[i, j - 1] + gap_v[j - 1], length[i, j - 1] + 1),
            ):
                if c < best_c or (c == best_c and l < best_l):
                    best_c, best_l = c, l
            cost[i, j] = best_c
            length[i, j] = best_l

    mean_cost = cost[m, n] / length[m, n]
    diagonal = math.hypot(cfg.image_width_px, cfg.image_height_px)
    return min(max(mean_cost / diagonal, 0.0), 1.0)


def dissimilarity_records(
    human_paths: Mapping[str, Sequence[Scanpath]],
    model_paths: Mapping[str, Scanpath | None],
    cfg: GridConfig,
) -> tuple[list[DissimilarityRecord], list[tuple[str, str]]]:
    """bhSD and hmSD per image; under-populated images are skipped, not fatal.

    Callers pass correct trials only. Scanpaths without a saccade cannot be
    compared and are dropped here, counting toward the skip reasons.
    """
    records: list[DissimilarityRecord] = []
    skipped: list[tuple[str, str]] = []
    for image_id in sorted(human_paths):
        humans = [s for s in human_paths[image_id] if len(s) >= 2]
        if len(humans) < 2:
            skipped.append((image_id, "fewer than 2 correct human scanpaths"))
            continue
        model = model_paths.get(image_id)
        if model is None or len(model) < 2:
            skipped.append((image_id, "no correct model scanpath"))
            continue
        pair_sum, pairs = 0.0, 0
        for a in range(len(humans)):
            for b in range(a + 1, len(humans)):
                pair_sum += scanpath_dissimilarity(humans[a], humans[b], cfg)
                pairs += 1
        hm = [scanpath_dissimilarity(h, model, cfg) for h in humans]
        records.append(
            DissimilarityRecord(
                image_id=image_id,
                bhsd=pair_sum / pairs,
                hmsd=float(np.mean(hm)),
            )
        )
    return records, skipped


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    xs = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks; nan when either side is constant."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("inputs differ in length")
    if a.size < 3:
        raise ValueError("rank correlation needs at least 3 points")
    ra = _average_ranks(a) - (a.size + 1) / 2.0
    rb = _average_ranks(b) - (b.size + 1) / 2.0
    denom_sq = float(ra @ ra) * float(rb @ rb)
    if denom_sq == 0:
        return float("nan")
    return float((ra @ rb) / math.sqrt(denom_sq))


def regression_slope_null_intercept(
    x: Sequence[float], y: Sequence[float]
) -> float:
    """Least-squares slope of y = slope * x."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("inputs differ in length")
    sxx = float(a @ a)
    if sxx == 0:
        raise ValueError("x is all zero; slope undefined")
    return float((a @ b) / sxx)


def _pixel_indices(
    points: Sequence[PixelPoint | tuple[float, float]], shape: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    h, w = shape
    xs, ys = [], []
    for p in points:
        x, y = (p.x, p.y) if isinstance(p, PixelPoint) else (p[0], p[1])
        xs.append(min(max(int(round(x)), 0), w - 1))
        ys.append(min(max(int(round(y)), 0), h - 1))
    return np.asarray(ys, dtype=np.int64), np.asarray(xs, dtype=np.int64)


def auc_from_scores(
    pos: Sequence[float],
    neg: Sequence[float],
    thresholds: Sequence[float] | None = None,
) -> float:
    """Trapezoidal ROC area; a score >= threshold classifies as positive.

    Sweeps the given thresholds (default: every distinct score) plus the
    implicit all-positive and all-negative endpoints.
    """
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both score sets must be non-empty")
    if thresholds is None:
        thresholds = np.concatenate([pos, neg])
    return _sweep_auc(pos, neg, np.asarray(thresholds, dtype=np.float64))


def _sweep_auc(
    pos: np.ndarray, neg: np.ndarray, thresholds: np.ndarray
) -> float:
    thr = np.unique(thresholds)
    ps = np.sort(pos)
    ns = np.sort(neg)
    tpr = 1.0 - np.searchsorted(ps, thr, side="left") / ps.size
    fpr = 1.0 - np.searchsorted(ns, thr, side="left") / ns.size
    # ascending thresholds give descending rates; orient by ascending fpr
    fpr_curve = np.concatenate(([0.0], fpr[::-1], [1.0]))
    tpr_curve = np.concatenate(([0.0], tpr[::-1], [1.0]))
    return float(
        np.sum(np.diff(fpr_curve) * (tpr_curve[1:] + tpr_curve[:-1]) / 2.0)
    )


def roc_auc(
    smap: SaliencyMap,
    positives: Sequence[PixelPoint | tuple[float, float]],
    variant: str = "paper_main",
    negatives_source: Sequence[PixelPoint | tuple[float, float]] | None = None,
    seed: int | np.random.Generator = 0,
    borji_resamples: int = 10,
) -> float:
    """Area under the ROC of saliency values at fixated vs negative pixels.

    Variants differ in the negative set: ``paper_main`` and ``judd`` use all
    non-fixated pixels (judd sweeps thresholds at the positive scores only);
    ``borji`` draws seeded uniform pixel samples of the positives' size,
    averaged over resamples; ``shuffled`` reads this map at fixation
    locations taken from other images. A ground-truth fixated pixel is never
    used as a negative in any variant.
    """
    if variant not in AUC_VARIANTS:
        raise ValueError(f"unknown AUC variant {variant!r}")
    values = smap.values
    if len(positives) == 0:
        raise ValueError("at least one positive fixation is required")
    py, px = _pixel_indices(positives, values.shape)
    pos_scores = values[py, px]
    pos_mask = np.zeros(values.shape, dtype=bool)
    pos_mask[py, px] = True

    if variant in ("paper_main", "judd"):
        neg_scores = values[~pos_mask]
        if neg_scores.size == 0:
            raise ValueError("no negative pixels remain")
        thresholds = pos_scores if variant == "judd" else np.concatenate(
            [pos_scores, neg_scores]
        )
        return _sweep_auc(pos_scores, neg_scores, thresholds)

    if variant == "borji":
        rng = (
            seed
            if isinstance(seed, np.random.Generator)
            else np.random.default_rng(seed)
        )
        candidates = values[~pos_mask]
        if candidates.size == 0:
            raise ValueError("no negative pixels remain")
        aucs = []
        for _ in range(borji_resamples):
            neg_scores = candidates[rng.integers(0, candidates.size, pos_scores.size)]
            aucs.append(
                _sweep_auc(
                    pos_scores,
                    neg_scores,
                    np.concatenate([pos_scores, neg_scores]),
                )
            )
        return float(np.mean(aucs))

    # shuffled: fixations of other images as negatives, minus this image's own
    if negatives_source is None:
        raise ValueError("shuffled variant needs fixation locations to borrow")
    ny, nx = _pixel_indices(negatives_source, values.shape)
    keep = ~pos_mask[ny, nx]
    if not np.any(keep):
        raise ValueError("no negative pixels remain")
    neg_scores = values[ny[keep], nx[keep]]
    return _sweep_auc(
        pos_scores, neg_scores, np.concatenate([pos_scores, neg_scores])
    )
