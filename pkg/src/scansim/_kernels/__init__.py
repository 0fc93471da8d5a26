"""Fixation-decision kernel with a compiled fast path.

``decision_objectives(log_w, probs, d2, mu0, dmu, sigma, z)`` scores every
candidate fixation k by the posterior-weighted probability of identifying
the target after the planned saccade:

    objective[k] = mean over samples s of
        sum_i probs[i] * 1[ A(i) > max_{j != i} B(j) ]

where, for sampled response field z[s],

    B(j) = log_w[j] + d2[k, j] * (mu0[k, j] + sigma[k, j] * z[s, j])
    A(i) = B(i) + d2[k, i] * dmu[k, i]

B are the per-cell posterior scores if no probed cell held the target and A
lifts one cell's score to its target response; the strict inequality makes
argmax ties count as failures. A single zero row for ``z`` evaluates the
noise-free mean field. Complexity is O(candidates x cells x samples) per
call: the top-two trick prices all hypothetical target placements of one
sample in a single pass.

The Cython build is selected at import when available, with a pure-numpy
fallback; ``set_backend`` / ``get_backend`` let tests and benchmarks pin
either implementation.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import _decision_np

try:  # compiled extension is optional
    from . import _decision_cy

    _DEFAULT_BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on the build environment
    _decision_cy = None
    _DEFAULT_BACKEND = "numpy"

_BACKENDS: dict[str, Callable[..., np.ndarray]] = {"numpy": _decision_np.decision_objectives}
if _decision_cy is not None:
    _BACKENDS["compiled"] = _decision_cy.decision_objectives

_active = _DEFAULT_BACKEND


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    _active = name


def decision_objectives(log_w, probs, d2, mu0, dmu, sigma, z) -> np.ndarray:
    """Candidate scores via the active backend; see the module docstring."""
    return _BACKENDS[_active](log_w, probs, d2, mu0, dmu, sigma, z)
