"""Batch front end: dataset loading, experiment runs, reports, and the CLI.

The file contracts live here. A stimulus set is a JSON manifest (image
files, target regions, forced initial fixations, optional template patches
and named saliency maps). Human data is a single CSV with a mandatory
header ``subject_id,image_id,fixation_index,x_px,y_px,max_saccades,
found_flag``. Every output is CSV plus JSON, written atomically
(temp + rename) with no timestamps, so a rerun with the same seed
reproduces each file byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

import numpy as np
from PIL import Image

from ._rng import derive_rng
from .grid import (
    Cell,
    GridConfig,
    PixelPoint,
    Scanpath,
    TargetRegion,
    Trial,
    cell_center,
    clamp_pixel,
    grid_scanpath,
    pixel_to_cell,
)
from .metrics import (
    DissimilarityRecord,
    PerformanceCurve,
    auc_from_scores,
    dissimilarity_records,
    jaccard,
    mean_agreement,
    participant_curve,
    performance_curve,
    regression_slope_null_intercept,
    roc_auc,
    spearman,
    tfm_vector,
    weighted_distance,
)
from .priors import (
    PriorGrid,
    SaliencyMap,
    center_prior,
    flat_prior,
    grid_prior_from_saliency,
    human_density_map,
    load_saliency_map,
    noise_prior,
)
from .searchers import POLICIES, SearchConfig, SearchContext, run_search
from .template import CorrelationMap, TemplateParams, correlation_map
from .visibility import VisibilityParams

RESULTS_SCHEMA = "scansim-run-v1"
RANK_BUCKETS = (
    ("1", 1, 1),
    ("2", 2, 2),
    ("3", 3, 3),
    ("4", 4, 4),
    ("5-8", 5, 8),
    ("9-12", 9, 12),
)
BUILTIN_MAPS = ("center", "flat", "human_density")
SCANPATH_COLUMNS = (
    "subject_id",
    "image_id",
    "fixation_index",
    "x_px",
    "y_px",
    "max_saccades",
    "found_flag",
)


# ---------------------------------------------------------------------------
# errors


@dataclass(frozen=True)
class LoadIssue:
    """One problem tied to its source location."""

    file: str
    line: int | None
    message: str

    def as_dict(self) -> dict[str, Any]:
        return {"file": self.file, "line": self.line, "message": self.message}


class HarnessError(Exception):
    """Fatal input problem carrying a machine-readable issue list."""

    def __init__(self, issues: Sequence[LoadIssue] | str):
        if isinstance(issues, str):
            issues = [LoadIssue(file="", line=None, message=issues)]
        self.issues = list(issues)
        super().__init__("; ".join(i.message for i in self.issues))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """Everything a batch run depends on, defaults matching the shipped model."""

    image_width_px: int = 1024
    image_height_px: int = 768
    cell_size_px: int = 32
    sigma_x_sq: float = 2600.0
    sigma_y_sq: float = 4000.0
    template_a: float = 3.0
    template_b: float = 4.0
    response_mode: str = "deterministic"
    policy: str = "ibs"
    prior: str = "flat"
    budgets: tuple[int, ...] = (2, 4, 8, 12)
    mc_samples: int = 64
    ior_radius: int = 1
    seed: int = 0
    out_dir: str = "results"

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.response_mode not in ("deterministic", "sampled"):
            raise ValueError(f"unknown response mode {self.response_mode!r}")
        if not self.budgets:
            raise ValueError("budgets must be non-empty")
        if any(b <= 0 for b in self.budgets) or list(self.budgets) != sorted(
            set(self.budgets)
        ):
            raise ValueError("budgets must be positive, ascending, and distinct")
        if not self.out_dir:
            raise ValueError("out_dir must be non-empty")
        # grid, visibility, and template invariants are enforced by their types
        self.grid_config
        self.visibility_params
        self.template_params

    @property
    def grid_config(self) -> GridConfig:
        return GridConfig(
            image_width_px=self.image_width_px,
            image_height_px=self.image_height_px,
            cell_size_px=self.cell_size_px,
        )

    @property
    def visibility_params(self) -> VisibilityParams:
        return VisibilityParams(
            sigma_x_sq=self.sigma_x_sq, sigma_y_sq=self.sigma_y_sq
        )

    @property
    def template_params(self) -> TemplateParams:
        return TemplateParams(
            a=self.template_a, b=self.template_b, mode=self.response_mode
        )

    def search_config(self, budget: int) -> SearchConfig:
        return SearchConfig(
            policy=self.policy,
            max_saccades=budget,
            mc_samples=self.mc_samples,
            seed=self.seed,
            response_mode=self.response_mode,
            ior_radius=self.ior_radius,
        )

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], source: str) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise HarnessError(
                [
                    LoadIssue(source, None, f"unknown config key {k!r}")
                    for k in unknown
                ]
            )
        kwargs = dict(mapping)
        if "budgets" in kwargs:
            kwargs["budgets"] = tuple(int(b) for b in kwargs["budgets"])
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as e:
            raise HarnessError([LoadIssue(source, None, str(e))]) from e

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Replace the given fields, ignoring None values (unset flags)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if "budgets" in changes:
            changes["budgets"] = tuple(int(b) for b in changes["budgets"])
        return dataclasses.replace(self, **changes) if changes else self


def load_config(path: str | Path) -> tuple[RunConfig, dict[str, str]]:
    """Read a JSON config; returns the config and any dataset path keys.

    ``manifest_path`` and ``scanpath_path`` may sit alongside the RunConfig
    keys; they locate the dataset rather than parameterize the run.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise HarnessError([LoadIssue(str(path), None, f"cannot read: {e}")]) from e
    except json.JSONDecodeError as e:
        raise HarnessError(
            [LoadIssue(str(path), e.lineno, f"invalid JSON: {e.msg}")]
        ) from e
    if not isinstance(raw, dict):
        raise HarnessError([LoadIssue(str(path), None, "config must be an object")])
    paths = {
        k: str(raw.pop(k))
        for k in ("manifest_path", "scanpath_path")
        if k in raw
    }
    return RunConfig.from_mapping(raw, str(path)), paths


# ---------------------------------------------------------------------------
# dataset


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    image_path: Path
    target: TargetRegion
    initial_fixation_px: PixelPoint
    target_patch_path: Path | None = None
    saliency_paths: Mapping[str, Path] = field(default_factory=dict)


@dataclass(frozen=True)
class StimulusManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        ids = [e.image_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate image_id in manifest")

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, image_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.image_id == image_id:
                return e
        raise KeyError(image_id)

    @property
    def image_ids(self) -> tuple[str, ...]:
        return tuple(e.image_id for e in self.entries)


@dataclass(frozen=True)
class HumanTrial:
    """One participant's recorded search on one image."""

    subject_id: str
    image_id: str
    raw_points: tuple[PixelPoint, ...]
    scanpath: Scanpath
    max_saccades: int
    found: bool
    found_flag: bool


@dataclass(frozen=True)
class Dataset:
    manifest: StimulusManifest
    trials: tuple[HumanTrial, ...]
    config: RunConfig
    issues: tuple[LoadIssue, ...] = ()

    @property
    def budgets_present(self) -> tuple[int, ...]:
        return tuple(sorted({t.max_saccades for t in self.trials}))

    @property
    def subjects(self) -> tuple[str, ...]:
        return tuple(sorted({t.subject_id for t in self.trials}))

    def trials_for_image(self, image_id: str) -> tuple[HumanTrial, ...]:
        return tuple(t for t in self.trials if t.image_id == image_id)


def _image_size(path: Path) -> tuple[int, int]:
    with Image.open(path) as im:
        return im.size  # (width, height)


def load_manifest(path: str | Path, cfg: GridConfig) -> StimulusManifest:
    path = Path(path)
    src = str(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise HarnessError([LoadIssue(src, None, f"cannot read: {e}")]) from e
    except json.JSONDecodeError as e:
        raise HarnessError(
            [LoadIssue(src, e.lineno, f"invalid JSON: {e.msg}")]
        ) from e
    if not isinstance(raw, dict) or not isinstance(raw.get("images"), list):
        raise HarnessError(
            [LoadIssue(src, None, 'manifest must be an object with an "images" list')]
        )

    base = path.parent
    errors: list[LoadIssue] = []
    entries: list[ManifestEntry] = []
    for pos, item in enumerate(raw["images"]):
        where = f"images[{pos}]"

        def err(msg: str) -> None:
            errors.append(LoadIssue(src, None, f"{where}: {msg}"))

        if not isinstance(item, dict):
            err("entry must be an object")
            continue
        try:
            image_id = str(item["image_id"])
            image_path = base / str(item["image_path"])
            t = item["target"]
            target = TargetRegion(
                left=int(t["x"]),
                top=int(t["y"]),
                width=int(t["width"]),
                height=int(t["height"]),
            )
            f0 = item["initial_fixation_px"]
            init = PixelPoint(x=float(f0["x"]), y=float(f0["y"]))
        except (KeyError, TypeError, ValueError) as e:
            err(f"malformed entry: {e!r}")
            continue
        patch_path = (
            base / str(item["target_patch_path"])
            if item.get("target_patch_path")
            else None
        )
        saliency = {
            str(name): base / str(p)
            for name, p in (item.get("saliency") or {}).items()
        }

        if not image_path.is_file():
            err(f"image file missing: {image_path}")
            continue
        w, h = _image_size(image_path)
        if (w, h) != (cfg.image_width_px, cfg.image_height_px):
            err(
                f"image is {w}x{h}, grid expects "
                f"{cfg.image_width_px}x{cfg.image_height_px}"
            )
        if not (
            0 <= target.left
            and target.left + target.width <= cfg.image_width_px
            and 0 <= target.top
            and target.top + target.height <= cfg.image_height_px
        ):
            err("target region exceeds image bounds")
        if not (
            0 <= init.x < cfg.image_width_px and 0 <= init.y < cfg.image_height_px
        ):
            err("initial fixation outside image bounds")
        elif target.contains(init) or target.contains(
            cell_center(pixel_to_cell(init, cfg), cfg)
        ):
            err("target region overlaps the initial fixation")
        if patch_path is not None and not patch_path.is_file():
            err(f"target patch missing: {patch_path}")
        for name, p in sorted(saliency.items()):
            if not p.is_file():
                err(f"saliency map {name!r} missing: {p}")
            else:
                try:
                    load_saliency_map(p, cfg)
                except ValueError as e:
                    err(f"saliency map {name!r}: {e}")

        entries.append(
            ManifestEntry(
                image_id=image_id,
                image_path=image_path,
                target=target,
                initial_fixation_px=init,
                target_patch_path=patch_path,
                saliency_paths=saliency,
            )
        )

    if errors:
        raise HarnessError(errors)
    try:
        return StimulusManifest(entries=tuple(entries))
    except ValueError as e:
        raise HarnessError([LoadIssue(src, None, str(e))]) from e


def _parse_scanpath_rows(
    path: Path,
) -> tuple[list[dict[str, Any]], list[LoadIssue]]:
    src = str(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise HarnessError([LoadIssue(src, None, f"cannot read: {e}")]) from e
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise HarnessError([LoadIssue(src, 1, "empty file; header row required")])
    got, want = set(reader.fieldnames), set(SCANPATH_COLUMNS)
    if got != want:
        missing = sorted(want - got)
        extra = sorted(got - want)
        parts = []
        if missing:
            parts.append(f"missing columns {missing}")
        if extra:
            parts.append(f"unknown columns {extra}")
        raise HarnessError([LoadIssue(src, 1, "; ".join(parts))])

    rows: list[dict[str, Any]] = []
    errors: list[LoadIssue] = []
    for row in reader:
        line = reader.line_num
        try:
            rows.append(
                {
                    "subject_id": row["subject_id"].strip(),
                    "image_id": row["image_id"].strip(),
                    "fixation_index": int(row["fixation_index"]),
                    "x_px": float(row["x_px"]),
                    "y_px": float(row["y_px"]),
                    "max_saccades": int(row["max_saccades"]),
                    "found_flag": int(row["found_flag"]),
                    "line": line,
                }
            )
        except (TypeError, ValueError, AttributeError):
            errors.append(LoadIssue(src, line, "unparseable row"))
    return rows, errors


def load_dataset(
    manifest_path: str | Path, scanpath_path: str | Path, config: RunConfig
) -> Dataset:
    """Load and cross-validate the stimulus manifest and the human CSV.

    Raw fixations are clamped into the image (clamps reported), gridded,
    and collapsed. Found flags are recomputed from the raw coordinates
    against the target region; disagreements with the file's flag are
    reported and the recomputed value wins.
    """
    cfg = config.grid_config
    manifest = load_manifest(manifest_path, cfg)
    src = str(scanpath_path)
    rows, errors = _parse_scanpath_rows(Path(scanpath_path))

    groups: dict[tuple[str, str], list[dict[str, Any]]] = {}
    for r in rows:
        if not r["subject_id"] or not r["image_id"]:
            errors.append(LoadIssue(src, r["line"], "empty subject_id or image_id"))
            continue
        groups.setdefault((r["subject_id"], r["image_id"]), []).append(r)

    budget_set = set(config.budgets)
    issues: list[LoadIssue] = []
    trials: list[HumanTrial] = []
    known_images = set(manifest.image_ids)
    for (subject_id, image_id), g in sorted(groups.items()):
        first_line = g[0]["line"]
        if image_id not in known_images:
            errors.append(
                LoadIssue(
                    src, first_line, f"unknown image_id {image_id!r} in scanpath file"
                )
            )
            continue
        g = sorted(g, key=lambda r: r["fixation_index"])
        indices = [r["fixation_index"] for r in g]
        if indices != list(range(1, len(g) + 1)):
            errors.append(
                LoadIssue(
                    src,
                    first_line,
                    f"fixation_index not contiguous from 1 for "
                    f"({subject_id}, {image_id}): {indices}",
                )
            )
            continue
        budgets = {r["max_saccades"] for r in g}
        flags = {r["found_flag"] for r in g}
        if len(budgets) != 1 or len(flags) != 1 or flags - {0, 1}:
            errors.append(
                LoadIssue(
                    src,
                    first_line,
                    f"inconsistent max_saccades or found_flag for "
                    f"({subject_id}, {image_id})",
                )
            )
            continue
        budget = budgets.pop()
        if budget not in budget_set:
            errors.append(
                LoadIssue(
                    src,
                    first_line,
                    f"max_saccades {budget} not in the declared budget set "
                    f"{sorted(budget_set)}",
                )
            )
            continue
        if len(g) > budget + 1:
            errors.append(
                LoadIssue(
                    src,
                    first_line,
                    f"({subject_id}, {image_id}) has {len(g) - 1} saccades, "
                    f"budget allows {budget}",
                )
            )
            continue

        clamped: list[PixelPoint] = []
        for r in g:
            p = PixelPoint(x=r["x_px"], y=r["y_px"])
            q = clamp_pixel(p, cfg)
            if q != p:
                issues.append(
                    LoadIssue(
                        src,
                        r["line"],
                        f"fixation ({p.x}, {p.y}) clamped to ({q.x}, {q.y})",
                    )
                )
            clamped.append(q)

        target = manifest.get(image_id).target
        found = any(target.contains(p) for p in clamped)
        declared = bool(g[0]["found_flag"])
        if found != declared:
            issues.append(
                LoadIssue(
                    src,
                    first_line,
                    f"found_flag={int(declared)} disagrees with coordinates for "
                    f"({subject_id}, {image_id}); recomputed value "
                    f"{int(found)} used",
                )
            )
        trials.append(
            HumanTrial(
                subject_id=subject_id,
                image_id=image_id,
                raw_points=tuple(clamped),
                scanpath=grid_scanpath(clamped, cfg),
                max_saccades=budget,
                found=found,
                found_flag=declared,
            )
        )

    if errors:
        raise HarnessError(errors)
    return Dataset(
        manifest=manifest,
        trials=tuple(trials),
        config=config,
        issues=tuple(issues),
    )


# ---------------------------------------------------------------------------
# model runs


@dataclass(frozen=True)
class ModelTrialResult:
    image_id: str
    budget: int
    found: bool
    saccades_used: int
    scanpath: Scanpath


@dataclass(frozen=True)
class RunOutput:
    results: tuple[ModelTrialResult, ...]
    errors: tuple[dict[str, str], ...]

    def by_trial(self) -> dict[tuple[str, int], ModelTrialResult]:
        return {(r.image_id, r.budget): r for r in self.results}


def _load_gray(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.float64)


def _resolve_prior(
    payload: Mapping[str, Any], config: RunConfig, cfg: GridConfig
) -> PriorGrid:
    name = config.prior
    if name == "flat":
        return flat_prior(cfg)
    if name == "center":
        return center_prior(cfg)
    if name == "noise":
        return noise_prior(
            cfg, derive_rng(config.seed, payload["image_id"], "noise-prior")
        )
    saliency_paths = payload["saliency_paths"]
    if name in saliency_paths:
        smap = load_saliency_map(Path(saliency_paths[name]), cfg)
        return grid_prior_from_saliency(smap, cfg)
    raise ValueError(
        f"prior {name!r} not available for image {payload['image_id']!r}"
    )


def _image_payload(entry: ManifestEntry, config: RunConfig) -> dict[str, Any]:
    return {
        "image_id": entry.image_id,
        "image_path": str(entry.image_path),
        "patch_path": (
            str(entry.target_patch_path) if entry.target_patch_path else None
        ),
        "saliency_paths": {k: str(v) for k, v in entry.saliency_paths.items()},
        "target": (
            entry.target.left,
            entry.target.top,
            entry.target.width,
            entry.target.height,
        ),
        "initial_fixation": (
            entry.initial_fixation_px.x,
            entry.initial_fixation_px.y,
        ),
        "config": config,
    }


def _run_image(
    payload: Mapping[str, Any],
) -> tuple[list[ModelTrialResult], list[dict[str, str]]]:
    """All budgets for one image; module-level so worker processes can run it."""
    config: RunConfig = payload["config"]
    cfg = config.grid_config
    image_id = payload["image_id"]
    try:
        prior = _resolve_prior(payload, config, cfg)
        corr: CorrelationMap | None = None
        if config.policy == "cibs" and payload["patch_path"]:
            corr = correlation_map(
                _load_gray(Path(payload["image_path"])),
                _load_gray(Path(payload["patch_path"])),
                cfg,
            )
        context = SearchContext(
            grid=cfg,
            vis=config.visibility_params,
            template=config.template_params,
            prior=prior,
            corr=corr,
        )
    except Exception as e:
        return [], [
            {"trial_id": f"{image_id}:{b}", "message": str(e)}
            for b in config.budgets
        ]

    left, top, width, height = payload["target"]
    target = TargetRegion(left=left, top=top, width=width, height=height)
    x0, y0 = payload["initial_fixation"]
    results: list[ModelTrialResult] = []
    errors: list[dict[str, str]] = []
    for budget in config.budgets:
        try:
            trial = Trial(
                image_id=image_id,
                target=target,
                initial_fixation=PixelPoint(x=x0, y=y0),
                max_saccades=budget,
            )
            r = run_search(trial, context, config.search_config(budget))
            results.append(
                ModelTrialResult(
                    image_id=image_id,
                    budget=budget,
                    found=r.found,
                    saccades_used=r.saccades_used,
                    scanpath=r.scanpath,
                )
            )
        except Exception as e:
            errors.append({"trial_id": f"{image_id}:{budget}", "message": str(e)})
    return results, errors


def run_experiment(
    dataset: Dataset,
    config: RunConfig | None = None,
    workers: int = 1,
    out_dir: str | Path | None = None,
) -> RunOutput:
    """One model run per (image, budget), in sorted image order.

    Per-trial failures are collected, not raised; the run continues. With
    ``workers > 1`` images are dispatched to a process pool; results keep
    the submission order, so the output is identical to a serial run.
    """
    config = dataset.config if config is None else config
    entries = sorted(dataset.manifest, key=lambda e: e.image_id)
    payloads = [_image_payload(e, config) for e in entries]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_image = list(pool.map(_run_image, payloads))
    else:
        per_image = [_run_image(p) for p in payloads]

    results: list[ModelTrialResult] = []
    errors: list[dict[str, str]] = []
    for res, errs in per_image:
        results.extend(res)
        errors.extend(errs)
    output = RunOutput(results=tuple(results), errors=tuple(errors))
    if out_dir is not None:
        write_run_output(output, config, out_dir)
    return output


def _scanpath_str(s: Scanpath) -> str:
    return " ".join(f"{c.col}:{c.row}" for c in s)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _jsonable(x: Any) -> Any:
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def _json_text(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_run_output(
    output: RunOutput, config: RunConfig, out_dir: str | Path
) -> None:
    out = Path(out_dir)
    rows = [
        [r.image_id, r.budget, int(r.found), r.saccades_used, _scanpath_str(r.scanpath)]
        for r in output.results
    ]
    _atomic_write(
        out / "results.csv",
        _csv_text(["image_id", "budget", "found", "saccades", "scanpath"], rows),
    )
    doc = {
        "schema": RESULTS_SCHEMA,
        "config": dataclasses.asdict(config),
        "results": [
            {
                "image_id": r.image_id,
                "budget": r.budget,
                "found": r.found,
                "saccades": r.saccades_used,
                "scanpath": [[c.col, c.row] for c in r.scanpath],
            }
            for r in output.results
        ],
        "errors": list(output.errors),
    }
    _atomic_write(out / "results.json", _json_text(doc))


def load_model_results(path: str | Path) -> tuple[RunOutput, dict[str, Any]]:
    """Read a results.json back into memory; returns (output, config dict)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise HarnessError([LoadIssue(str(path), None, f"cannot read: {e}")]) from e
    except json.JSONDecodeError as e:
        raise HarnessError(
            [LoadIssue(str(path), e.lineno, f"invalid JSON: {e.msg}")]
        ) from e
    if not isinstance(doc, dict) or doc.get("schema") != RESULTS_SCHEMA:
        raise HarnessError(
            [LoadIssue(str(path), None, f"not a {RESULTS_SCHEMA} document")]
        )
    results = tuple(
        ModelTrialResult(
            image_id=str(r["image_id"]),
            budget=int(r["budget"]),
            found=bool(r["found"]),
            saccades_used=int(r["saccades"]),
            scanpath=Scanpath(
                tuple(Cell(col=int(c), row=int(w)) for c, w in r["scanpath"])
            ),
        )
        for r in doc.get("results", [])
    )
    errors = tuple(dict(e) for e in doc.get("errors", []))
    return RunOutput(results=results, errors=errors), dict(doc.get("config", {}))


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class EvaluationBundle:
    """Table rows, curves, and per-image scanpath records for one model run."""

    table: tuple[dict[str, Any], ...]
    human_curve: PerformanceCurve
    model_curve: PerformanceCurve
    dissimilarity: tuple[DissimilarityRecord, ...]
    skipped: tuple[tuple[str, str], ...]
    warnings: tuple[str, ...]

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        _atomic_write(
            out / "evaluation.csv",
            _csv_text(
                ["metric", "value", "std"],
                [
                    [row["metric"], row["value"], row["std"]]
                    for row in self.table
                ],
            ),
        )
        curve_rows = [
            [b, hm, hs, mm]
            for b, hm, hs, mm in zip(
                self.human_curve.budgets,
                self.human_curve.proportions,
                self.human_curve.std or (),
                self.model_curve.proportions,
            )
        ]
        _atomic_write(
            out / "curves.csv",
            _csv_text(["budget", "human_mean", "human_std", "model_mean"], curve_rows),
        )
        _atomic_write(
            out / "dissimilarity.csv",
            _csv_text(
                ["image_id", "bhsd", "hmsd"],
                [[r.image_id, r.bhsd, r.hmsd] for r in self.dissimilarity],
            ),
        )
        doc = {
            "table": [
                {k: _jsonable(v) for k, v in row.items()} for row in self.table
            ],
            "curves": {
                "budgets": list(self.human_curve.budgets),
                "human_mean": list(self.human_curve.proportions),
                "human_std": [
                    _jsonable(s) for s in (self.human_curve.std or ())
                ],
                "model_mean": list(self.model_curve.proportions),
            },
            "dissimilarity": [
                {"image_id": r.image_id, "bhsd": r.bhsd, "hmsd": r.hmsd}
                for r in self.dissimilarity
            ],
            "skipped": [list(s) for s in self.skipped],
            "warnings": list(self.warnings),
        }
        _atomic_write(out / "evaluation.json", _json_text(doc))


def evaluate(
    dataset: Dataset, output: RunOutput, out_dir: str | Path | None = None
) -> EvaluationBundle:
    """Compare one model run against the human data.

    Emits the five summary rows (curve distance, mean agreement and Jaccard
    with across-participant spread, regression slope, rank correlation),
    the performance curves, and per-image scanpath dissimilarity records.
    """
    budgets = dataset.budgets_present
    if not budgets:
        raise HarnessError("dataset contains no human trials")
    index = output.by_trial()
    missing = sorted(
        {
            f"{image_id}:{b}"
            for image_id in dataset.manifest.image_ids
            for b in budgets
            if (image_id, b) not in index
        }
    )
    if missing:
        raise HarnessError(
            f"model results missing for (image, budget) pairs: {missing}"
        )

    warnings: list[str] = []

    # performance curves and the weighted curve distance
    human_props: dict[int, list[float]] = {b: [] for b in budgets}
    for subject in dataset.subjects:
        mine = [t for t in dataset.trials if t.subject_id == subject]
        for b in budgets:
            at_b = [t for t in mine if t.max_saccades == b]
            if at_b:
                human_props[b].append(
                    sum(t.found for t in at_b) / len(at_b)
                )
    human_curve = participant_curve(human_props)
    model_curve = performance_curve(
        {
            b: [index[(i, b)].found for i in dataset.manifest.image_ids]
            for b in budgets
        }
    )
    try:
        wd = weighted_distance(human_curve, model_curve)
    except ValueError as e:
        wd = float("nan")
        warnings.append(f"weighted distance unavailable: {e}")

    # per-participant agreement on which targets were found
    mas_vals: list[float] = []
    jac_vals: list[float] = []
    for subject in dataset.subjects:
        mine = sorted(
            (t for t in dataset.trials if t.subject_id == subject),
            key=lambda t: t.image_id,
        )
        tfp = [t.found for t in mine]
        runs = [index[(t.image_id, t.max_saccades)] for t in mine]
        tfm = tfm_vector(
            [r.found for r in runs],
            [r.saccades_used for r in runs],
            [t.max_saccades for t in mine],
        )
        mas_vals.append(mean_agreement(tfp, tfm))
        jac_vals.append(jaccard(tfp, tfm))
    mas_arr = np.asarray(mas_vals)
    jac_arr = np.asarray(jac_vals)
    mas_std = float(mas_arr.std(ddof=1)) if mas_arr.size > 1 else float("nan")
    jac_std = float(jac_arr.std(ddof=1)) if jac_arr.size > 1 else float("nan")

    # scanpath records: correct human trials vs the model's widest correct run
    cfg = dataset.config.grid_config
    human_paths = {
        image_id: [
            t.scanpath
            for t in dataset.trials_for_image(image_id)
            if t.found
        ]
        for image_id in dataset.manifest.image_ids
    }
    model_paths: dict[str, Scanpath | None] = {}
    for image_id in dataset.manifest.image_ids:
        correct = [
            index[(image_id, b)] for b in budgets if index[(image_id, b)].found
        ]
        model_paths[image_id] = (
            max(correct, key=lambda r: r.budget).scanpath if correct else None
        )
    records, skipped = dissimilarity_records(human_paths, model_paths, cfg)

    bh = [r.bhsd for r in records]
    hm = [r.hmsd for r in records]
    try:
        slope = regression_slope_null_intercept(bh, hm) if records else float("nan")
        if not records:
            warnings.append("no dissimilarity records; slope unavailable")
    except ValueError as e:
        slope = float("nan")
        warnings.append(f"slope unavailable: {e}")
    if len(records) >= 3:
        rho = spearman(bh, hm)
        if math.isnan(rho):
            warnings.append("rank correlation undefined (constant input)")
    else:
        rho = float("nan")
        warnings.append("fewer than 3 dissimilarity records; rho unavailable")

    table = (
        {"metric": "weighted_distance", "value": wd, "std": None},
        {"metric": "mean_agreement", "value": float(mas_arr.mean()), "std": mas_std},
        {"metric": "jaccard", "value": float(jac_arr.mean()), "std": jac_std},
        {"metric": "regression_slope", "value": slope, "std": None},
        {"metric": "spearman_rho", "value": rho, "std": None},
    )
    bundle = EvaluationBundle(
        table=table,
        human_curve=human_curve,
        model_curve=model_curve,
        dissimilarity=tuple(records),
        skipped=tuple(skipped),
        warnings=tuple(warnings),
    )
    if out_dir is not None:
        bundle.write(out_dir)
    return bundle


# ---------------------------------------------------------------------------
# saliency scoring


def _center_pixel_map(cfg: GridConfig) -> np.ndarray:
    sigma = 0.25 * min(cfg.image_width_px, cfg.image_height_px)
    xs = np.arange(cfg.image_width_px) - (cfg.image_width_px - 1) / 2.0
    ys = np.arange(cfg.image_height_px) - (cfg.image_height_px - 1) / 2.0
    gx = np.exp(-0.5 * (xs / sigma) ** 2)
    gy = np.exp(-0.5 * (ys / sigma) ** 2)
    return np.outer(gy, gx)


def _pixel_map_for(
    name: str,
    entry: ManifestEntry,
    dataset: Dataset,
    cfg: GridConfig,
) -> np.ndarray | None:
    if name == "flat":
        return np.ones((cfg.image_height_px, cfg.image_width_px))
    if name == "center":
        return _center_pixel_map(cfg)
    if name == "human_density":
        pts = [
            p
            for t in dataset.trials_for_image(entry.image_id)
            for p in t.raw_points[1:]
        ]
        if not pts:
            return None
        return human_density_map(pts, cfg).values
    if name in entry.saliency_paths:
        return load_saliency_map(entry.saliency_paths[name], cfg).values
    return None


def eval_saliency(
    dataset: Dataset,
    map_names: Sequence[str] | None = None,
    variants: Sequence[str] = ("paper_main",),
    pooled: bool = False,
    out_dir: str | Path | None = None,
) -> list[dict[str, Any]]:
    """AUC of each saliency map at predicting human fixations, by rank bucket.

    Rank r is the landing of the r-th saccade; the forced initial fixation
    never counts as a positive. Per-image AUCs are averaged unless
    ``pooled`` is set, which pools scores across images into one curve
    (Borji sampling stays per image, pooled per resample). Rows are emitted
    per (map, bucket, variant).
    """
    cfg = dataset.config.grid_config
    manifest_names = sorted(
        {name for e in dataset.manifest for name in e.saliency_paths}
    )
    if map_names is None:
        map_names = manifest_names + [n for n in BUILTIN_MAPS if n not in manifest_names]
    for v in variants:
        if v not in ("paper_main", "judd", "borji", "shuffled"):
            raise HarnessError(f"unknown AUC variant {v!r}")

    # positives per (image, bucket label): saccade landings, clamped
    positives: dict[tuple[str, str], list[PixelPoint]] = {}
    for t in dataset.trials:
        for rank, p in enumerate(t.raw_points):
            if rank == 0:
                continue
            for label, lo, hi in RANK_BUCKETS:
                if lo <= rank <= hi:
                    positives.setdefault((t.image_id, label), []).append(p)

    rows: list[dict[str, Any]] = []
    seed = dataset.config.seed
    for name in map_names:
        maps: dict[str, np.ndarray] = {}
        for entry in dataset.manifest:
            m = _pixel_map_for(name, entry, dataset, cfg)
            if m is not None:
                maps[entry.image_id] = m
        if not maps:
            raise HarnessError(f"saliency map {name!r} not available for any image")
        for label, lo, hi in RANK_BUCKETS:
            scored_images = sorted(
                i for i in maps if positives.get((i, label))
            )
            for variant in variants:
                aucs: list[float] = []
                pooled_pos: list[np.ndarray] = []
                pooled_neg: list[list[np.ndarray]] = []
                n_pos = 0
                for image_id in scored_images:
                    pts = positives[(image_id, label)]
                    smap = SaliencyMap(values=maps[image_id], image_id=image_id)
                    neg_src = None
                    if variant == "shuffled":
                        neg_src = [
                            p
                            for other in scored_images
                            if other != image_id
                            for p in positives[(other, label)]
                        ]
                        if not neg_src:
                            continue
                    rng = derive_rng(seed, image_id, "auc", name, label, variant)
                    if not pooled:
                        aucs.append(
                            roc_auc(
                                smap,
                                pts,
                                variant=variant,
                                negatives_source=neg_src,
                                seed=rng,
                            )
                        )
                        n_pos += len(pts)
                        continue
                    # pooled: collect raw scores, sweep one curve at the end
                    ps, ns = _pooled_scores(
                        smap, pts, variant, neg_src, rng
                    )
                    pooled_pos.append(ps)
                    pooled_neg.append(ns)
                    n_pos += len(pts)

                if pooled and pooled_pos:
                    auc = _pooled_auc(pooled_pos, pooled_neg, variant)
                    rows.append(
                        {
                            "map": name,
                            "bucket": label,
                            "variant": variant,
                            "auc": auc,
                            "n": n_pos,
                        }
                    )
                elif not pooled and aucs:
                    rows.append(
                        {
                            "map": name,
                            "bucket": label,
                            "variant": variant,
                            "auc": float(np.mean(aucs)),
                            "n": len(aucs),
                        }
                    )
                else:
                    rows.append(
                        {
                            "map": name,
                            "bucket": label,
                            "variant": variant,
                            "auc": float("nan"),
                            "n": 0,
                        }
                    )

    if out_dir is not None:
        out = Path(out_dir)
        _atomic_write(
            out / "saliency_auc.csv",
            _csv_text(
                ["map", "bucket", "variant", "auc", "n"],
                [[r["map"], r["bucket"], r["variant"], r["auc"], r["n"]] for r in rows],
            ),
        )
        _atomic_write(
            out / "saliency_auc.json",
            _json_text([{k: _jsonable(v) for k, v in r.items()} for r in rows]),
        )
    return rows


def _pooled_scores(
    smap: SaliencyMap,
    pts: Sequence[PixelPoint],
    variant: str,
    neg_src: Sequence[PixelPoint] | None,
    rng: np.random.Generator,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Positive scores and per-resample negative scores for one image."""
    values = smap.values
    h, w = values.shape
    py = np.clip(np.round([p.y for p in pts]).astype(int), 0, h - 1)
    px = np.clip(np.round([p.x for p in pts]).astype(int), 0, w - 1)
    pos_scores = values[py, px]
    pos_mask = np.zeros(values.shape, dtype=bool)
    pos_mask[py, px] = True
    if variant in ("paper_main", "judd"):
        return pos_scores, [values[~pos_mask]]
    if variant == "borji":
        candidates = values[~pos_mask]
        return pos_scores, [
            candidates[rng.integers(0, candidates.size, pos_scores.size)]
            for _ in range(10)
        ]
    ny = np.clip(np.round([p.y for p in neg_src]).astype(int), 0, h - 1)
    nx = np.clip(np.round([p.x for p in neg_src]).astype(int), 0, w - 1)
    keep = ~pos_mask[ny, nx]
    return pos_scores, [values[ny[keep], nx[keep]]]


def _pooled_auc(
    pooled_pos: list[np.ndarray], pooled_neg: list[list[np.ndarray]], variant: str
) -> float:
    pos = np.concatenate(pooled_pos)
    n_resamples = max(len(ns) for ns in pooled_neg)
    aucs = []
    for r in range(n_resamples):
        neg = np.concatenate([ns[min(r, len(ns) - 1)] for ns in pooled_neg])
        if neg.size == 0:
            return float("nan")
        thresholds = pos if variant == "judd" else np.concatenate([pos, neg])
        aucs.append(auc_from_scores(pos, neg, thresholds))
    return float(np.mean(aucs))


# ---------------------------------------------------------------------------
# report aggregation


def report(out_dir: str | Path) -> dict[str, Any]:
    """Merge whatever run/evaluation/saliency outputs sit in a directory."""
    out = Path(out_dir)
    merged: dict[str, Any] = {}
    results_path = out / "results.json"
    if results_path.is_file():
        output, config = load_model_results(results_path)
        found = sum(r.found for r in output.results)
        merged["run"] = {
            "config": config,
            "trials": len(output.results),
            "found": found,
            "errors": len(output.errors),
        }
    eval_path = out / "evaluation.json"
    if eval_path.is_file():
        merged["evaluation"] = json.loads(eval_path.read_text(encoding="utf-8"))
    sal_path = out / "saliency_auc.json"
    if sal_path.is_file():
        merged["saliency"] = json.loads(sal_path.read_text(encoding="utf-8"))
    if not merged:
        raise HarnessError(f"no run, evaluation, or saliency outputs in {out}")
    _atomic_write(out / "report.json", _json_text(merged))
    table = (merged.get("evaluation") or {}).get("table", [])
    _atomic_write(
        out / "report.csv",
        _csv_text(
            ["metric", "value", "std"],
            [[row["metric"], row["value"], row["std"]] for row in table],
        ),
    )
    return merged


# ---------------------------------------------------------------------------
# CLI


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--seed", type=int, help="global random seed")
    p.add_argument("--policy", choices=POLICIES, help="fixation policy")
    p.add_argument("--prior", help="prior name: flat, center, noise, or a manifest saliency name")
    p.add_argument("--out", help="output directory")
    p.add_argument("--manifest", help="stimulus manifest JSON")
    p.add_argument("--scanpaths", help="human scanpath CSV")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scansim",
        description="Simulate and evaluate gaze policies for visual search on image grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the model over a dataset")
    _add_common_flags(p_run)
    p_run.add_argument("--budgets", help="comma-separated saccade budgets")
    p_run.add_argument("--mc-samples", type=int, dest="mc_samples")
    p_run.add_argument(
        "--response-mode", choices=("deterministic", "sampled"), dest="response_mode"
    )
    p_run.add_argument("--workers", type=int, default=1)
    p_run.set_defaults(func=_cmd_run)

    p_eval = sub.add_parser("evaluate", help="compare a run against the human data")
    _add_common_flags(p_eval)
    p_eval.add_argument("--results", help="results.json from a prior run")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sal = sub.add_parser("eval-saliency", help="score saliency maps against fixations")
    _add_common_flags(p_sal)
    p_sal.add_argument(
        "--variant",
        action="append",
        choices=("paper_main", "judd", "borji", "shuffled"),
        help="AUC variant; repeatable (default paper_main)",
    )
    p_sal.add_argument("--maps", help="comma-separated map names (default: all)")
    p_sal.add_argument("--pooled", action="store_true", help="pool scores across images")
    p_sal.set_defaults(func=_cmd_eval_saliency)

    p_rep = sub.add_parser("report", help="aggregate outputs in a directory")
    p_rep.add_argument("--config", help="JSON config file; flags override its keys")
    p_rep.add_argument("--out", help="directory holding prior outputs")
    p_rep.set_defaults(func=_cmd_report)
    return parser


def _config_from_args(args: argparse.Namespace) -> tuple[RunConfig, str, str]:
    if getattr(args, "config", None):
        config, paths = load_config(args.config)
    else:
        config, paths = RunConfig(), {}
    config = config.with_overrides(
        seed=getattr(args, "seed", None),
        policy=getattr(args, "policy", None),
        prior=getattr(args, "prior", None),
        out_dir=getattr(args, "out", None),
        mc_samples=getattr(args, "mc_samples", None),
        response_mode=getattr(args, "response_mode", None),
        budgets=(
            tuple(int(b) for b in args.budgets.split(","))
            if getattr(args, "budgets", None)
            else None
        ),
    )
    manifest = getattr(args, "manifest", None) or paths.get("manifest_path")
    scanpaths = getattr(args, "scanpaths", None) or paths.get("scanpath_path")
    if not manifest or not scanpaths:
        raise HarnessError(
            "a manifest and a scanpath file are required "
            "(--manifest/--scanpaths or config keys manifest_path/scanpath_path)"
        )
    return config, manifest, scanpaths


def _report_issues(issues: Sequence[LoadIssue]) -> None:
    doc = {"errors": [i.as_dict() for i in issues]}
    print(json.dumps(doc, indent=2, sort_keys=True), file=sys.stderr)


def _cmd_run(args: argparse.Namespace) -> int:
    config, manifest, scanpaths = _config_from_args(args)
    dataset = load_dataset(manifest, scanpaths, config)
    for issue in dataset.issues:
        print(f"note: {issue.message}", file=sys.stderr)
    output = run_experiment(
        dataset, config, workers=args.workers, out_dir=config.out_dir
    )
    print(
        f"wrote {config.out_dir}/results.csv and results.json "
        f"({len(output.results)} trials, {len(output.errors)} errors)"
    )
    if output.errors:
        _report_issues(
            [LoadIssue("", None, f"{e['trial_id']}: {e['message']}") for e in output.errors]
        )
        return 1
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config, manifest, scanpaths = _config_from_args(args)
    dataset = load_dataset(manifest, scanpaths, config)
    results_path = args.results or str(Path(config.out_dir) / "results.json")
    output, _ = load_model_results(results_path)
    bundle = evaluate(dataset, output, out_dir=config.out_dir)
    for w in bundle.warnings:
        print(f"note: {w}", file=sys.stderr)
    print(
        f"wrote {config.out_dir}/evaluation.csv, evaluation.json, "
        f"curves.csv, dissimilarity.csv"
    )
    return 0


def _cmd_eval_saliency(args: argparse.Namespace) -> int:
    config, manifest, scanpaths = _config_from_args(args)
    dataset = load_dataset(manifest, scanpaths, config)
    names = args.maps.split(",") if args.maps else None
    variants = tuple(args.variant) if args.variant else ("paper_main",)
    rows = eval_saliency(
        dataset,
        map_names=names,
        variants=variants,
        pooled=args.pooled,
        out_dir=config.out_dir,
    )
    print(f"wrote {config.out_dir}/saliency_auc.csv ({len(rows)} rows)")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    out_dir = args.out
    if not out_dir and args.config:
        config, _ = load_config(args.config)
        out_dir = config.out_dir
    if not out_dir:
        raise HarnessError("--out (or a config with out_dir) is required")
    report(out_dir)
    print(f"wrote {out_dir}/report.json and report.csv")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HarnessError as e:
        _report_issues(e.issues)
        return 2
    except Exception as e:  # keep the exit contract even for unexpected failures
        _report_issues([LoadIssue("", None, f"{type(e).__name__}: {e}")])
        return 3


if __name__ == "__main__":
    sys.exit(main())
