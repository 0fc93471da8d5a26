"""Discrete grid geometry for fixation modelling.

An image of ``image_width_px x image_height_px`` pixels is partitioned into
square cells of ``cell_size_px`` (partial cells at the right/bottom border when
the dimensions are not multiples of the cell size). Fixations live either in
pixel space (``PixelPoint``) or on the grid (``Cell``); the functions here
translate between the two, collapse raw fixation sequences into scanpaths, and
decide target hits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


@dataclass(frozen=True)
class GridConfig:
    """Image dimensions plus the square cell size that induces the grid."""

    image_width_px: int
    image_height_px: int
    cell_size_px: int = 32

    def __post_init__(self) -> None:
        if self.image_width_px <= 0 or self.image_height_px <= 0:
            raise ValueError("image dimensions must be positive")
        if self.cell_size_px <= 0:
            raise ValueError("cell size must be positive")

    @property
    def grid_cols(self) -> int:
        # ceil division: a partial border column still counts as a cell
        return -(-self.image_width_px // self.cell_size_px)

    @property
    def grid_rows(self) -> int:
        return -(-self.image_height_px // self.cell_size_px)

    @property
    def n_cells(self) -> int:
        return self.grid_cols * self.grid_rows


@dataclass(frozen=True)
class Cell:
    """Grid coordinates, column-major in x and row-major in y."""

    col: int
    row: int


@dataclass(frozen=True)
class PixelPoint:
    """A location in image pixel coordinates."""

    x: float
    y: float


@dataclass(frozen=True)
class TargetRegion:
    """Axis-aligned target rectangle in pixel coordinates.

    Membership is half-open: ``left <= x < left + width`` and
    ``top <= y < top + height``, so adjacent regions never share pixels.
    """

    left: int
    top: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("target region must have positive extent")

    def contains(self, p: PixelPoint) -> bool:
        return (
            self.left <= p.x < self.left + self.width
            and self.top <= p.y < self.top + self.height
        )

    @property
    def center(self) -> PixelPoint:
        return PixelPoint(self.left + self.width // 2, self.top + self.height // 2)


@dataclass(frozen=True)
class Scanpath:
    """A sequence of fixated cells with consecutive duplicates collapsed."""

    fixations: tuple[Cell, ...]

    def __post_init__(self) -> None:
        for a, b in zip(self.fixations, self.fixations[1:]):
            if a == b:
                raise ValueError("consecutive fixations must differ")

    def __len__(self) -> int:
        return len(self.fixations)

    def __iter__(self) -> Iterator[Cell]:
        return iter(self.fixations)

    def __getitem__(self, i: int) -> Cell:
        return self.fixations[i]

    @property
    def saccade_count(self) -> int:
        return max(len(self.fixations) - 1, 0)


@dataclass(frozen=True)
class Trial:
    """One search trial: where the target is, where the eyes start, the budget."""

    image_id: str
    target: TargetRegion
    initial_fixation: PixelPoint
    max_saccades: int

    def __post_init__(self) -> None:
        if self.max_saccades < 1:
            raise ValueError("max_saccades must be at least 1")


def clamp_pixel(p: PixelPoint, cfg: GridConfig) -> PixelPoint:
    """Clamp a point into the image bounds [0, W-1] x [0, H-1]."""
    x = min(max(p.x, 0), cfg.image_width_px - 1)
    y = min(max(p.y, 0), cfg.image_height_px - 1)
    return PixelPoint(x, y)


def pixel_to_cell(p: PixelPoint, cfg: GridConfig) -> Cell:
    """Map a pixel to its grid cell (out-of-bounds points are clamped first)."""
    q = clamp_pixel(p, cfg)
    return Cell(int(q.x // cfg.cell_size_px), int(q.y // cfg.cell_size_px))


def cell_center(c: Cell, cfg: GridConfig) -> PixelPoint:
    """Pixel center of a cell, clamped into the image for partial border cells."""
    if not (0 <= c.col < cfg.grid_cols and 0 <= c.row < cfg.grid_rows):
        raise ValueError(f"cell {c} outside {cfg.grid_cols}x{cfg.grid_rows} grid")
    half = cfg.cell_size_px // 2
    x = min(c.col * cfg.cell_size_px + half, cfg.image_width_px - 1)
    y = min(c.row * cfg.cell_size_px + half, cfg.image_height_px - 1)
    return PixelPoint(x, y)


def cell_index(c: Cell, cfg: GridConfig) -> int:
    """Row-major flat index; ordering by index equals (row, col) ordering."""
    return c.row * cfg.grid_cols + c.col


def index_to_cell(i: int, cfg: GridConfig) -> Cell:
    if not 0 <= i < cfg.n_cells:
        raise ValueError(f"flat index {i} out of range")
    return Cell(i % cfg.grid_cols, i // cfg.grid_cols)


def collapse_refixations(cells: Iterable[Cell]) -> tuple[Cell, ...]:
    """Drop consecutive duplicates; repeated gridded samples are one fixation."""
    out: list[Cell] = []
    for c in cells:
        if not out or out[-1] != c:
            out.append(c)
    return tuple(out)


def grid_scanpath(points: Sequence[PixelPoint], cfg: GridConfig) -> Scanpath:
    """Grid a raw pixel fixation sequence and collapse consecutive duplicates."""
    if not points:
        raise ValueError("a scanpath needs at least one fixation")
    return Scanpath(collapse_refixations(pixel_to_cell(p, cfg) for p in points))


def target_hit(c: Cell, target: TargetRegion, cfg: GridConfig) -> bool:
    """A model fixation hits the target when its cell center falls inside."""
    return target.contains(cell_center(c, cfg))
