"""Toy data generators and the experiment configuration record.

Data sets (a) and (b) are noisy samples of a pullback geodesic through the
geometry's base point: a hyperboloid geodesic seen through the global chart
and a great circle seen through the stereographic chart.  Data set (c) is an
Archimedean spiral sampled uniformly in arc length.  All generators return
points in curve order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .diffeo import CompositeDiffeo, HyperboloidChart, StereographicChart
from .pullback import PullbackSpace

HYPERBOLIC_BASE = np.array([0.0, 1.0])
SPHERICAL_BASE = np.array([1.0, 0.0])
SPIRAL_BASE = np.array([0.0, 0.0])


def hyperbolic_geometry() -> PullbackSpace:
    """(R^2, hyperbolic pullback) centred at (0, 1), identity network."""
    return PullbackSpace.of(CompositeDiffeo(HYPERBOLIC_BASE, np.eye(2), HyperboloidChart(2)))


def spherical_geometry() -> PullbackSpace:
    """(R^2, spherical pullback) centred at (1, 0), identity network."""
    return PullbackSpace.of(CompositeDiffeo(SPHERICAL_BASE, np.eye(2), StereographicChart(2)))


@dataclass
class ExperimentConfig:
    """Knobs for the toy experiments; defaults follow the reference runs.

    ``halfwidth`` is the model-space parameter half-range of the sampled
    geodesic for data sets (a)/(b); the spiral shape parameters are
    non-normative visual defaults.
    """

    dataset: str = "hyperbolic_branch"  # hyperbolic_branch | circle_arc | spiral
    n_points: int = 100
    noise_sigma: float = 0.01
    seed: int = 0
    geometry: str = "hyperbolic"  # hyperbolic | spherical | learned
    base_point: tuple = None
    output_dir: str = "out"
    halfwidth: float = 1.5
    spiral_a: float = 0.2
    spiral_b: float = 0.15
    spiral_theta_max: float = 4 * np.pi
    alpha_sub: float = 10.0
    alpha_iso: float = 0.01
    knn_k: int = 2
    pca_radius: float = 0.5
    n_interp: int = 101
    perturb_scales: tuple = (1e-3, 1e-2)
    perturb_trials: int = 20

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.base_point is None:
            self.base_point = tuple(default_base_point(self.dataset))

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            doc = json.load(fh)
        return cls(**doc)

    def to_json(self, path) -> None:
        doc = asdict(self)
        doc["base_point"] = list(self.base_point)
        doc["perturb_scales"] = list(self.perturb_scales)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)


def default_base_point(dataset: str) -> np.ndarray:
    return {
        "hyperbolic_branch": HYPERBOLIC_BASE,
        "circle_arc": SPHERICAL_BASE,
        "spiral": SPIRAL_BASE,
    }[dataset]


def _geodesic_samples(space: PullbackSpace, base, direction, halfwidth, n):
    """Preimages of the model geodesic through phi(base), uniform parameter."""
    m0 = space.phi.forward(base)
    u = space.phi.pushforward(base, direction)
    u = u / space.model.norm(m0, u)
    ts = np.linspace(-halfwidth, halfwidth, n)
    return np.stack([space.phi.inverse(space.model.exp(m0, t * u)) for t in ts])


def spiral_arclength_samples(n, a, b, theta_max):
    """Arc-length-uniform samples of r(theta) = a + b*theta."""
    theta_fine = np.linspace(0.0, theta_max, max(8000, 40 * n))
    r = a + b * theta_fine
    speed = np.sqrt(r**2 + b**2)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(theta_fine))])
    theta = np.interp(np.linspace(0.0, s[-1], n), s, theta_fine)
    radius = a + b * theta
    return np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)


def generate_dataset(cfg: ExperimentConfig):
    """Toy data in curve order; returns ``(points, ordered)``."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.dataset == "hyperbolic_branch":
        space = hyperbolic_geometry()
        pts = _geodesic_samples(space, HYPERBOLIC_BASE, np.array([1.0, 0.0]), cfg.halfwidth, cfg.n_points)
    elif cfg.dataset == "circle_arc":
        space = spherical_geometry()
        pts = _geodesic_samples(space, SPHERICAL_BASE, np.array([1.0, 0.0]), cfg.halfwidth, cfg.n_points)
    elif cfg.dataset == "spiral":
        pts = spiral_arclength_samples(cfg.n_points, cfg.spiral_a, cfg.spiral_b, cfg.spiral_theta_max)
    else:
        raise ValueError(f"unknown dataset {cfg.dataset!r}")
    if cfg.noise_sigma > 0:
        pts = pts + cfg.noise_sigma * rng.standard_normal(pts.shape)
    return pts, True
