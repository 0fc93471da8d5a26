"""Numpy fallback for the fixation-decision kernel.

Same contract as the compiled version: see the package __init__ for the
semantics. Vectorizes over samples within each candidate; the compiled
kernel is preferred because this path allocates several (samples, cells)
temporaries per candidate.
"""

from __future__ import annotations

import numpy as np


def decision_objectives(
    log_w: np.ndarray,
    probs: np.ndarray,
    d2: np.ndarray,
    mu0: np.ndarray,
    dmu: np.ndarray,
    sigma: np.ndarray,
    z: np.ndarray,
) -> np.ndarray:
    n_k, n = d2.shape
    n_s = z.shape[0]
    rows = np.arange(n_s)
    cols = np.arange(n)
    out = np.empty(n_k)
    for k in range(n_k):
        # scores if no cell held the target, one row per sampled response field
        b = log_w[np.newaxis, :] + d2[k] * (mu0[k] + sigma[k] * z)
        jm = b.argmax(axis=1)
        m1 = b[rows, jm]
        masked = b.copy()
        masked[rows, jm] = -np.inf
        m2 = masked.max(axis=1)
        # placing the target at cell i lifts only column i, by d2 * dmu
        a = b + d2[k] * dmu[k]
        thr = np.where(cols == jm[:, np.newaxis], m2[:, np.newaxis], m1[:, np.newaxis])
        # cumsum accumulates strictly left to right, matching the compiled
        # loop bit for bit; pairwise .sum()/@ would drift in the last ulps
        hits = np.where(a > thr, probs[np.newaxis, :], 0.0)
        per_sample = np.cumsum(hits, axis=1)[:, -1]
        out[k] = np.cumsum(per_sample)[-1] / n_s
    return out
