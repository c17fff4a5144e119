"""Tracking evaluation: OSPA distance and per-step Monte-Carlo aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class OspaParams:
    cutoff: float = 100.0  # c, meters
    order: float = 1.0  # p

    def __post_init__(self):
        if self.cutoff <= 0:
            raise ValueError("cutoff must be positive")
        if self.order < 1:
            raise ValueError("order must be >= 1")


@dataclass(frozen=True)
class StepMetrics:
    k: int
    q_mean: float
    ospa_mean: float
    truth_cardinality: int
    truth_los: bool


def _as_points(s) -> np.ndarray:
    if len(s) == 0:
        return np.empty((0, 2))
    arr = np.array([getattr(p, "as_array", lambda p=p: np.asarray(p, float))() for p in s])
    return arr.reshape(len(s), 2)


def ospa(truth, estimates, params: OspaParams = OspaParams()) -> float:
    """OSPA distance between two finite point sets.

    For |X| = m <= |Y| = n:
    ``((1/n) (min_assign sum d_c(x, y)^p + c^p (n - m)))^(1/p)`` with
    ``d_c = min(d, c)``. Symmetric; returns 0 for two empty sets.
    """
    X, Y = _as_points(truth), _as_points(estimates)
    m, n = len(X), len(Y)
    if m == 0 and n == 0:
        return 0.0
    if m == 0 or n == 0:
        return params.cutoff
    if m > n:
        X, Y, m, n = Y, X, n, m
    c, p = params.cutoff, params.order
    d = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2)
    cost = np.minimum(d, c) ** p
    rows, cols = linear_sum_assignment(cost)
    total = cost[rows, cols].sum() + c**p * (n - m)
    return float((total / n) ** (1.0 / p))


def aggregate(runs) -> list:
    """Per-step means of q and OSPA across equal-length runs.

    Each run is a sequence of records with ``q``, ``ospa``, ``truth_state``
    and ``truth_los`` attributes (the harness's StepRecord qualifies).
    """
    if not runs:
        return []
    length = len(runs[0])
    if any(len(r) != length for r in runs):
        raise ValueError("runs have mismatched lengths")
    out = []
    for k in range(length):
        recs = [run[k] for run in runs]
        out.append(
            StepMetrics(
                k=k,
                q_mean=float(np.mean([r.q for r in recs])),
                ospa_mean=float(np.mean([r.ospa for r in recs])),
                truth_cardinality=int(recs[0].truth_state is not None),
                truth_los=bool(recs[0].truth_los),
            )
        )
    return out
