"""Seeded synthetic stimulus suites for tests and benchmarks.

Everything here is generated from a single seed: textured images with a
planted target patch, a two-blob saliency map (a broad high-salience decoy
plus a weak blob at the true target), and human-like scanpaths from
simulated participants of varying skill. ``write_suite`` lays a complete
dataset out on disk in the harness's file formats.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from ._rng import derive_rng
from .grid import (
    Cell,
    GridConfig,
    PixelPoint,
    TargetRegion,
    Trial,
    cell_center,
    pixel_to_cell,
)
from .priors import PriorGrid, flat_prior
from .searchers import SearchContext
from .template import TemplateParams, zero_correlation
from .visibility import VisibilityParams

BUDGET_CYCLE = (12, 8, 12, 4, 8, 12, 2, 8, 12, 4)


def textured_image(
    rng: np.random.Generator, cfg: GridConfig, block_px: int = 16
) -> np.ndarray:
    """Blocky grayscale texture with pixel noise, uint8."""
    h, w = cfg.image_height_px, cfg.image_width_px
    coarse = rng.integers(40, 216, (h // block_px + 1, w // block_px + 1))
    img = np.kron(coarse, np.ones((block_px, block_px)))[:h, :w]
    img = img + rng.normal(0.0, 8.0, (h, w))
    return np.clip(img, 0, 255).astype(np.uint8)


def plant_target(
    image: np.ndarray, region: TargetRegion, rng: np.random.Generator
) -> np.ndarray:
    """Stamp a distinctive pattern into the region; returns the patch copy."""
    yy, xx = np.mgrid[0 : region.height, 0 : region.width]
    pattern = 128 + 90 * np.sin(xx * 1.1) * np.cos(yy * 1.3)
    pattern = pattern + rng.normal(0.0, 4.0, pattern.shape)
    sl = (
        slice(region.top, region.top + region.height),
        slice(region.left, region.left + region.width),
    )
    image[sl] = np.clip(pattern, 0, 255).astype(np.uint8)
    return image[sl].copy()


def multi_blob_map(
    cfg: GridConfig,
    decoy_xy: Sequence[tuple[float, float]],
    cluster_xy: tuple[float, float],
    target_xy: tuple[float, float],
    blob_sigma_px: float = 40.0,
    cluster_height: float = 0.6,
    target_height: float = 0.1,
    notch: bool = False,
) -> np.ndarray:
    """Salience with decoy blobs and an off-target blob near the true target.

    The "cluster" blob marks the target's neighborhood without peaking on
    the target cell itself, the way a saliency model highlights a region
    rather than an exact position. Decoy heights taper from 1.0. With
    ``notch`` the cluster's spillover onto the target itself is carved
    back out, leaving the target low-salience inside a salient
    neighborhood.
    """
    xs = np.arange(cfg.image_width_px, dtype=np.float64)
    ys = np.arange(cfg.image_height_px, dtype=np.float64)

    def blob(cx: float, cy: float, sigma: float, height: float) -> np.ndarray:
        gx = np.exp(-0.5 * ((xs - cx) / sigma) ** 2)
        gy = np.exp(-0.5 * ((ys - cy) / sigma) ** 2)
        return height * np.outer(gy, gx)

    out = blob(*cluster_xy, blob_sigma_px, cluster_height)
    if notch:
        tx, ty = target_xy
        cx, cy = cluster_xy
        spill = cluster_height * np.exp(
            -0.5 * (((tx - cx) / blob_sigma_px) ** 2 + ((ty - cy) / blob_sigma_px) ** 2)
        )
        out -= blob(tx, ty, 14.0, 0.9 * spill)
    else:
        out += blob(*target_xy, blob_sigma_px / 2.0, target_height)
    n = max(len(decoy_xy) - 1, 1)
    for i, d in enumerate(decoy_xy):
        out += blob(*d, blob_sigma_px, 1.0 - 0.25 * i / n)
    return out + 1e-4


def _place_cells(
    rng: np.random.Generator,
    cfg: GridConfig,
    n: int,
    keepout: Sequence[Cell],
    min_gap: int = 3,
    keepout_gap: int = 2,
) -> list[Cell]:
    """Seeded rejection sampling of well-separated interior cells."""
    cols, rows = cfg.grid_cols, cfg.grid_rows
    placed: list[Cell] = []
    attempts = 0
    while len(placed) < n and attempts < 10_000:
        attempts += 1
        c = Cell(
            col=int(rng.integers(1, cols - 1)), row=int(rng.integers(1, rows - 1))
        )
        if any(
            max(abs(c.col - p.col), abs(c.row - p.row)) < min_gap for p in placed
        ):
            continue
        if any(
            max(abs(c.col - k.col), abs(c.row - k.row)) < keepout_gap
            for k in keepout
        ):
            continue
        placed.append(c)
    if len(placed) < n:
        raise ValueError("grid too small to place the requested blobs")
    return placed


def _region_for_cell(c: Cell, cfg: GridConfig) -> TargetRegion:
    d = cfg.cell_size_px
    return TargetRegion(left=c.col * d, top=c.row * d, width=d, height=d)


def _simulate_scanpath(
    rng: np.random.Generator,
    start: PixelPoint,
    region: TargetRegion,
    budget: int,
    approach: float,
    noise_px: float,
    cfg: GridConfig,
) -> list[PixelPoint]:
    """Noisy homing toward the target; stops on a hit or at the budget."""
    aim = region.center
    pts = [start]
    p = start
    for _ in range(budget):
        if region.contains(p):
            break
        x = p.x + (aim.x - p.x) * approach + rng.normal(0.0, noise_px)
        y = p.y + (aim.y - p.y) * approach + rng.normal(0.0, noise_px)
        p = PixelPoint(
            x=float(np.clip(x, 0, cfg.image_width_px - 1)),
            y=float(np.clip(y, 0, cfg.image_height_px - 1)),
        )
        pts.append(p)
    return pts


def write_suite(
    root: str | Path,
    n_images: int = 10,
    seed: int = 1234,
    cfg: GridConfig | None = None,
    n_subjects: int = 6,
    n_decoys: int = 3,
) -> tuple[Path, Path]:
    """Write a complete synthetic dataset; returns (manifest, scanpath) paths.

    Images carry one planted target each. The "informative" saliency map is
    the two-blob construction; subjects differ in aim and noise, so found
    rates spread across both budgets and participants.
    """
    root = Path(root)
    cfg = cfg or GridConfig(image_width_px=512, image_height_px=384, cell_size_px=32)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "patches").mkdir(exist_ok=True)
    (root / "saliency").mkdir(exist_ok=True)

    init = PixelPoint(
        x=cfg.image_width_px // 2 - cfg.cell_size_px // 2,
        y=cfg.image_height_px // 2 - cfg.cell_size_px // 2,
    )
    entries = []
    regions: dict[str, TargetRegion] = {}
    for i in range(n_images):
        image_id = f"img{i:03d}"
        rng = derive_rng(seed, image_id, "stimulus")
        init_cell = pixel_to_cell(init, cfg)
        cell = _place_cells(rng, cfg, 1, keepout=[init_cell], keepout_gap=3)[0]
        region = _region_for_cell(cell, cfg)
        # the salience blob marks the target's neighborhood, not the target:
        # mostly adjacent notched blobs, every fifth image a plain offset blob
        notch = i % 5 != 4
        gap = 1 if notch else 2
        offsets = ((gap, 0), (-gap, 0), (0, gap), (0, -gap))
        start = int(rng.integers(0, 4))
        for j in range(4):
            ox, oy = offsets[(start + j) % 4]
            cluster = Cell(
                col=min(max(cell.col + ox, 1), cfg.grid_cols - 2),
                row=min(max(cell.row + oy, 1), cfg.grid_rows - 2),
            )
            if max(abs(cluster.col - cell.col), abs(cluster.row - cell.row)) == gap:
                break
        decoys = _place_cells(
            rng, cfg, n_decoys, keepout=[init_cell, cell, cluster], keepout_gap=3
        )
        img = textured_image(rng, cfg)
        patch = plant_target(img, region, rng)
        smap = multi_blob_map(
            cfg,
            decoy_xy=[
                (cell_center(d, cfg).x, cell_center(d, cfg).y) for d in decoys
            ],
            cluster_xy=(cell_center(cluster, cfg).x, cell_center(cluster, cfg).y),
            target_xy=(region.center.x, region.center.y),
            notch=notch,
        )

        Image.fromarray(img, mode="L").save(root / "images" / f"{image_id}.png")
        Image.fromarray(patch, mode="L").save(root / "patches" / f"{image_id}.png")
        np.savetxt(
            root / "saliency" / f"{image_id}.csv",
            smap,
            fmt="%.8g",
            delimiter=",",
        )
        regions[image_id] = region
        entries.append(
            {
                "image_id": image_id,
                "image_path": f"images/{image_id}.png",
                "target": {
                    "x": region.left,
                    "y": region.top,
                    "width": region.width,
                    "height": region.height,
                },
                "initial_fixation_px": {"x": init.x, "y": init.y},
                "target_patch_path": f"patches/{image_id}.png",
                "saliency": {"informative": f"saliency/{image_id}.csv"},
            }
        )

    manifest_path = root / "manifest.json"
    manifest_path.write_text(
        json.dumps({"images": entries}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    lines = [
        "subject_id,image_id,fixation_index,x_px,y_px,max_saccades,found_flag"
    ]
    for s in range(n_subjects):
        subject_id = f"s{s:02d}"
        approach = 0.8 - 0.06 * s
        noise_px = 6.0 + 8.0 * s
        for i in range(n_images):
            image_id = f"img{i:03d}"
            budget = BUDGET_CYCLE[(i + s) % len(BUDGET_CYCLE)]
            rng = derive_rng(seed, subject_id, image_id, "human")
            pts = _simulate_scanpath(
                rng, init, regions[image_id], budget, approach, noise_px, cfg
            )
            found = int(any(regions[image_id].contains(p) for p in pts))
            for idx, p in enumerate(pts, start=1):
                lines.append(
                    f"{subject_id},{image_id},{idx},{p.x:.2f},{p.y:.2f},"
                    f"{budget},{found}"
                )
    scanpath_path = root / "scanpaths.csv"
    scanpath_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest_path, scanpath_path


def ior_suite(
    n_trials: int = 20, seed: int = 5, cell_size_px: int = 32
) -> list[tuple[Trial, SearchContext]]:
    """Flat-prior trials on a 16x12 grid with varied target placement.

    The default seed is the reference suite for demonstrating emergent
    inhibition of return. With peak-normalized visibility a foveal no-target
    observation shrinks the fixated cell's weight by at most e^-0.75, so the
    correlation-pulled searcher occasionally returns to a visited cell as a
    pure vantage point (its low response noise makes distant mass easy to
    survey); on most seeds one or two of the twenty trials show such a
    revisit within the first ten fixations.
    """
    cfg = GridConfig(
        image_width_px=16 * cell_size_px,
        image_height_px=12 * cell_size_px,
        cell_size_px=cell_size_px,
    )
    context = SearchContext(
        grid=cfg,
        vis=VisibilityParams(),
        template=TemplateParams(),
        prior=flat_prior(cfg),
        corr=zero_correlation(cfg),
    )
    rng = derive_rng(seed, "ior-suite")
    init = cell_center(Cell(col=3, row=3), cfg)
    trials = []
    for i in range(n_trials):
        while True:
            c = Cell(
                col=int(rng.integers(0, cfg.grid_cols)),
                row=int(rng.integers(0, cfg.grid_rows)),
            )
            region = _region_for_cell(c, cfg)
            if not region.contains(init):
                break
        trials.append(
            (
                Trial(
                    image_id=f"trial{i:02d}",
                    target=region,
                    initial_fixation=init,
                    max_saccades=12,
                ),
                context,
            )
        )
    return trials


def benchmark_trial(
    cfg: GridConfig | None = None, prior: PriorGrid | None = None
) -> tuple[Trial, SearchContext]:
    """A full-size search problem for timing runs."""
    cfg = cfg or GridConfig(image_width_px=1024, image_height_px=768)
    context = SearchContext(
        grid=cfg,
        vis=VisibilityParams(),
        template=TemplateParams(),
        prior=prior if prior is not None else flat_prior(cfg),
        corr=zero_correlation(cfg),
    )
    target_cell = Cell(col=cfg.grid_cols - 5, row=cfg.grid_rows - 4)
    trial = Trial(
        image_id="benchmark",
        target=_region_for_cell(target_cell, cfg),
        initial_fixation=cell_center(
            Cell(col=cfg.grid_cols // 2, row=cfg.grid_rows // 2), cfg
        ),
        max_saccades=12,
    )
    return trial, context
