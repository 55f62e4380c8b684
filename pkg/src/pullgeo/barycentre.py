"""Karcher barycentres on a pullback space.

The minimiser is computed in the model manifold with Riemannian gradient
descent (fixed unit step, relative-gradient stopping rule) and mapped back
through the diffeomorphism; a pulled-back Euclidean model admits the exact
closed form instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MaxItersExceeded, ModelNotEuclidean
from .pullback import PullbackSpace


def _as_f64(x):
    return np.asarray(x, dtype=np.float64)


@dataclass
class BarycentreOptions:
    step_size: float = 1.0
    rel_grad_tol: float = 1e-3
    max_iters: int = 1000
    init: np.ndarray | None = None  # defaults to the first data point

    def __post_init__(self):
        if self.step_size <= 0 or self.rel_grad_tol <= 0:
            raise ValueError("step_size and rel_grad_tol must be positive")


def _mean_log(model, p, images):
    # Deterministic pairwise tree sum keeps the reduction order fixed even
    # if the per-point logs are ever computed in parallel.
    logs = [model.log(p, m) for m in images]
    while len(logs) > 1:
        merged = [logs[i] + logs[i + 1] for i in range(0, len(logs) - 1, 2)]
        if len(logs) % 2:
            merged.append(logs[-1])
        logs = merged
    return logs[0] / len(images)


def barycentre(space: PullbackSpace, data, opts: BarycentreOptions | None = None) -> np.ndarray:
    """Karcher barycentre of ``data`` on (R^d, (.,.)^phi).

    Iterates p <- exp_p(mean log_p phi(x^i)) on the model manifold until the
    relative gradient drops below ``rel_grad_tol``, then maps back.
    """
    data = [_as_f64(x) for x in data]
    if not data:
        raise ValueError("barycentre of an empty data set is undefined")
    opts = opts or BarycentreOptions()
    model = space.model
    images = [space.phi.forward(x) for x in data]

    p = space.phi.forward(_as_f64(opts.init)) if opts.init is not None else images[0].copy()
    g = _mean_log(model, p, images)
    g0_norm = model.norm(p, g)
    if g0_norm < 1e-15:
        return space.phi.inverse(p)
    for _ in range(opts.max_iters):
        p = model.exp(p, opts.step_size * g)
        g = _mean_log(model, p, images)
        if model.norm(p, g) / g0_norm < opts.rel_grad_tol:
            return space.phi.inverse(p)
    raise MaxItersExceeded(
        f"barycentre did not converge in {opts.max_iters} iterations",
        last_iterate=space.phi.inverse(p),
    )


def euclidean_barycentre(space: PullbackSpace, data) -> np.ndarray:
    """Closed form phi^{-1}(mean phi(x^i)); the model must be flat."""
    data = [_as_f64(x) for x in data]
    if not data:
        raise ValueError("barycentre of an empty data set is undefined")
    if not space.model.is_euclidean:
        raise ModelNotEuclidean(f"{space.model!r} has no closed-form barycentre")
    images = np.stack([space.phi.forward(x) for x in data])
    return space.phi.inverse(images.mean(axis=0))


def approximate_barycentre(space: PullbackSpace, base, new_data) -> np.ndarray:
    """One Riemannian gradient step from ``base`` towards the new barycentre."""
    new_data = [_as_f64(y) for y in new_data]
    if not new_data:
        raise ValueError("approximate barycentre of an empty data set is undefined")
    p = space.phi.forward(_as_f64(base))
    step = _mean_log(space.model, p, [space.phi.forward(y) for y in new_data])
    return space.phi.inverse(space.model.exp(p, step))
