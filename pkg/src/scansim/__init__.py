"""Simulation engine and evaluation harness for gaze search on image grids.

Models scan an image cell grid for a hidden target, accumulating noisy
visibility-weighted evidence into a posterior and choosing fixations by
policy; the metrics compare model scanpaths and detection performance with
human eye-tracking data, and the CLI drives batch runs and reports.
"""

from .grid import (
    Cell,
    GridConfig,
    PixelPoint,
    Scanpath,
    TargetRegion,
    Trial,
)
from .priors import PriorGrid, SaliencyMap
from .searchers import SearchConfig, SearchContext, SearchResult, run_search
from .template import CorrelationMap, TemplateParams
from .visibility import VisibilityParams

__version__ = "0.1.0"

__all__ = [
    "Cell",
    "CorrelationMap",
    "GridConfig",
    "PixelPoint",
    "PriorGrid",
    "SaliencyMap",
    "Scanpath",
    "SearchConfig",
    "SearchContext",
    "SearchResult",
    "TargetRegion",
    "TemplateParams",
    "Trial",
    "VisibilityParams",
    "run_search",
    "__version__",
]
