"""Error metrics for evaluating a pullback geometry against ordered data."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateCurve
from .pullback import PullbackSpace


def chord_parameters(data) -> np.ndarray:
    """Cumulative l2 chord-length parameters t_k in [0, 1], t_1 = 0."""
    data = np.asarray(data, dtype=np.float64)
    chords = np.linalg.norm(np.diff(data, axis=0), axis=1)
    total = chords.sum()
    if total < 1e-12:
        raise DegenerateCurve("ordered data has zero total chord length")
    return np.concatenate([[0.0], np.cumsum(chords)]) / total


def geodesic_deviations(space: PullbackSpace, data) -> np.ndarray:
    """Per-point l2 deviation from the endpoint geodesic at chord parameters."""
    data = np.asarray(data, dtype=np.float64)
    ts = chord_parameters(data)
    return np.array(
        [np.linalg.norm(space.geodesic(data[0], data[-1], t) - x) for t, x in zip(ts, data)]
    )


def geodesic_error(space: PullbackSpace, data) -> float:
    """Mean deviation of the data from its own endpoint geodesic."""
    return float(geodesic_deviations(space, data).mean())


def variation_deviations(space: PullbackSpace, data, z_new) -> np.ndarray:
    """Per-parameter l2 gap between the geodesic and its z_new variation."""
    data = np.asarray(data, dtype=np.float64)
    z_new = np.asarray(z_new, dtype=np.float64)
    ts = chord_parameters(data)
    return np.array(
        [
            np.linalg.norm(space.geodesic(z_new, data[-1], t) - space.geodesic(data[0], data[-1], t))
            for t in ts
        ]
    )


def variation_error(space: PullbackSpace, data, z_new) -> float:
    """Mean gap after replacing the start point by z_new."""
    return float(variation_deviations(space, data, z_new).mean())


def curve_set_distance(space: PullbackSpace, data, n_samples=1024) -> float:
    """Max distance from the data to the endpoint geodesic as a point set.

    Parameterization-free companion to :func:`geodesic_error`: curved
    pullbacks traverse their geodesics at non-constant l2 speed, so data
    lying exactly on a geodesic can still show a chord-parameter mismatch;
    this metric isolates the geometric (set) deviation.  The geodesic is
    discretised into a polyline and distances are measured to its segments.
    """
    data = np.asarray(data, dtype=np.float64)
    ts = np.linspace(0.0, 1.0, n_samples)
    curve = np.stack([space.geodesic(data[0], data[-1], t) for t in ts])
    seg = np.diff(curve, axis=0)
    seg_len2 = np.maximum((seg**2).sum(-1), 1e-300)
    worst = 0.0
    for x in data:
        rel = x - curve[:-1]
        t = np.clip((rel * seg).sum(-1) / seg_len2, 0.0, 1.0)
        closest = curve[:-1] + t[:, None] * seg
        worst = max(worst, float(np.min(np.linalg.norm(closest - x, axis=1))))
    return worst
