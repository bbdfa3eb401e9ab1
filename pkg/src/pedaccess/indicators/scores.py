"""Point-level accessibility scores, density interpolation and composites."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

METHODS = ("binary", "soft", "gaussian")


@dataclass(frozen=True)
class AccessParams:
    """Threshold ``t`` (m), soft-threshold slope ``k`` and gaussian decay variance ``v`` (m²)."""

    t: float = 500.0
    k: float = 5.0
    v: float = 129842.0

    def __post_init__(self):
        for name in ("t", "k", "v"):
            if not getattr(self, name) > 0:
                raise DataError(f"access parameter {name} must be positive")


def access_score(d, method: str = "binary", params: AccessParams = AccessParams()):
    """Score network distance(s) ``d`` in [0, 1].

    ``d`` may be a scalar, ``None`` or an array; ``None`` and NaN mean the
    destination was not reached within the search cutoff and score 0 under
    every method.
    """
    scalar = d is None or np.ndim(d) == 0
    arr = np.atleast_1d(np.asarray(np.nan if d is None else d, dtype=float))
    reached = ~np.isnan(arr)
    t = params.t
    dd = np.where(reached, arr, t)
    if method == "binary":
        s = (dd <= t).astype(float)
    elif method == "soft":
        with np.errstate(over="ignore"):
            s = 1.0 / (1.0 + np.exp(params.k * (dd - t) / t))
    elif method == "gaussian":
        s = np.where(dd <= t, 1.0, np.exp(-((dd - t) ** 2) / params.v))
    else:
        raise DataError(f"unknown access method {method!r}")
    s = np.where(reached, s, 0.0)
    return float(s[0]) if scalar else s


def interpolate_density(d1, d2, l1, l2):
    """Blend two node values by the complement of each node's relative distance.

    A point sitting on a node (``l = 0``) takes that node's value.
    """
    d1, d2, l1, l2 = (np.asarray(a, dtype=float) for a in (d1, d2, l1, l2))
    if (l1 < 0).any() or (l2 < 0).any():
        raise DataError("negative distance to terminal node")
    total = l1 + l2
    with np.errstate(invalid="ignore", divide="ignore"):
        mix = (1 - l1 / total) * d1 + (1 - l2 / total) * d2
    out = np.where(l1 == 0, d1, np.where(l2 == 0, d2, mix))
    return float(out) if out.ndim == 0 else out


def daily_living(fresh_food, convenience, pt_any):
    """Count of the three core daily-living destinations within reach (0..3)."""
    parts = [np.asarray(a, dtype=float) for a in (fresh_food, convenience, pt_any)]
    for p in parts:
        if not np.isin(p, (0.0, 1.0)).all():
            raise DataError("daily living inputs must be binary scores")
    out = parts[0] + parts[1] + parts[2]
    return int(out) if out.ndim == 0 else out


def zscores(values) -> tuple[np.ndarray, bool]:
    """Standardise with the population standard deviation.

    Returns ``(z, degenerate)``; a constant input yields zeros and
    ``degenerate=True``.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise DataError("z-scores need at least two values")
    mean = x.mean()
    sd = np.sqrt(np.mean((x - mean) ** 2))
    if sd == 0 or not np.isfinite(sd):
        return np.zeros_like(x), True
    z = (x - mean) / sd
    return z, False


def walkability(z_pop, z_int, z_dl):
    return np.asarray(z_pop, dtype=float) + np.asarray(z_int, dtype=float) + np.asarray(z_dl, dtype=float)
