"""Diffeomorphisms from R^d into a model manifold.

The composite class chains a translation, an orthogonal map, an invertible
network and a chart inverse:

    phi = (chart_inverse, Id_{d-d'}) o psi o O o T_c,   T_c(x) = x - c.

Charts map between R^{d'} and the first product factor; their differentials
are analytic closed forms.  The embedded network only has to provide
``forward / inverse / jvp / inverse_jvp`` on numpy arrays and is treated as
frozen here.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import PoleExcluded
from .manifolds import Euclidean, Hyperboloid, ManifoldPoint, ModelManifold, Product, Sphere

_ORTHO_TOL = 1e-10


def _as_f64(x):
    return np.asarray(x, dtype=np.float64)


class Diffeomorphism:
    """Invertible smooth map R^d -> model manifold with both differentials."""

    codomain: ModelManifold
    dim: int

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Ambient coordinates of phi(x)."""
        raise NotImplementedError

    def inverse(self, m: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pushforward(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Differential D_x phi applied to v (ambient tangent coordinates)."""
        raise NotImplementedError

    def inverse_pushforward(self, m: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Differential of phi^{-1} at m applied to the ambient tangent w."""
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Charts


class HyperboloidChart:
    """Global chart of H^d: zeta(p) = (p_1, ..., p_d)."""

    kind = "hyperboloid"

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.ambient_dim = self.dim + 1

    def manifold(self) -> ModelManifold:
        return Hyperboloid(self.dim)

    def to_manifold(self, x):
        x = _as_f64(x)
        return np.concatenate([x, [np.sqrt(np.dot(x, x) + 1.0)]])

    def to_coords(self, p):
        return _as_f64(p)[:-1].copy()

    def diff_to_manifold(self, x, v):
        x, v = _as_f64(x), _as_f64(v)
        last = np.dot(x, v) / np.sqrt(np.dot(x, x) + 1.0)
        return np.concatenate([v, [last]])

    def diff_to_coords(self, p, w):
        return _as_f64(w)[:-1].copy()


class StereographicChart:
    """Chart of S^d minus the pole (0, ..., 0, 1), projecting from that pole."""

    kind = "stereographic"

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.ambient_dim = self.dim + 1

    def manifold(self) -> ModelManifold:
        return Sphere(self.dim)

    def to_manifold(self, x):
        x = _as_f64(x)
        u = 1.0 + np.dot(x, x)
        return np.concatenate([2.0 * x / u, [(np.dot(x, x) - 1.0) / u]])

    def to_coords(self, p):
        p = _as_f64(p)
        if p[-1] > 1.0 - 1e-12:
            raise PoleExcluded("stereographic chart undefined at the projection pole")
        return p[:-1] / (1.0 - p[-1])

    def diff_to_manifold(self, x, v):
        x, v = _as_f64(x), _as_f64(v)
        u = 1.0 + np.dot(x, x)
        xv = np.dot(x, v)
        top = (2.0 / u) * (v - (2.0 * xv / u) * x)
        bottom = 4.0 * xv / (u * u)
        return np.concatenate([top, [bottom]])

    def diff_to_coords(self, p, w):
        p, w = _as_f64(p), _as_f64(w)
        if p[-1] > 1.0 - 1e-12:
            raise PoleExcluded("stereographic chart undefined at the projection pole")
        s = 1.0 - p[-1]
        return w[:-1] / s + p[:-1] * (w[-1] / (s * s))


class IdentityChart:
    """Trivial chart of Euclidean R^d."""

    kind = "identity"

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.ambient_dim = self.dim

    def manifold(self) -> ModelManifold:
        return Euclidean(self.dim)

    def to_manifold(self, x):
        return _as_f64(x).copy()

    def to_coords(self, p):
        return _as_f64(p).copy()

    def diff_to_manifold(self, x, v):
        return _as_f64(v).copy()

    def diff_to_coords(self, p, w):
        return _as_f64(w).copy()


_CHART_KINDS = {
    "hyperboloid": HyperboloidChart,
    "stereographic": StereographicChart,
    "identity": IdentityChart,
}


def make_chart(kind: str, dim: int):
    try:
        return _CHART_KINDS[kind](dim)
    except KeyError:
        raise ValueError(f"unknown chart kind {kind!r}") from None


def hyperboloid_chart_inverse(x) -> ManifoldPoint:
    """Point (x, sqrt(|x|^2 + 1)) on the unit hyperboloid H^d."""
    x = _as_f64(x)
    chart = HyperboloidChart(x.shape[0])
    return ManifoldPoint(chart.to_manifold(x), chart.manifold())


def stereographic_chart_inverse(x) -> ManifoldPoint:
    """Point (2x, |x|^2 - 1)/(1 + |x|^2) on the unit sphere S^d."""
    x = _as_f64(x)
    chart = StereographicChart(x.shape[0])
    return ManifoldPoint(chart.to_manifold(x), chart.manifold())


# ---------------------------------------------------------------------------
# Composite diffeomorphism


class IdentityNetwork:
    """Placeholder network: psi = id."""

    def forward(self, x):
        return _as_f64(x).copy()

    def inverse(self, y):
        return _as_f64(y).copy()

    def jvp(self, x, v):
        return _as_f64(v).copy()

    def inverse_jvp(self, y, w):
        return _as_f64(w).copy()


class CompositeDiffeo(Diffeomorphism):
    """(chart_inverse, Id_{d-d'}) o psi o O o T_c with frozen network psi."""

    def __init__(self, center, orthogonal, chart, network=None):
        self.center = _as_f64(center).copy()
        self.orthogonal = _as_f64(orthogonal).copy()
        d = self.center.shape[0]
        if self.orthogonal.shape != (d, d):
            raise ValueError("orthogonal matrix shape does not match center")
        if np.max(np.abs(self.orthogonal @ self.orthogonal.T - np.eye(d))) > _ORTHO_TOL:
            raise ValueError("matrix is not orthogonal within 1e-10")
        if chart.dim > d:
            raise ValueError("chart dimension exceeds the space dimension")
        self.chart = chart
        self.network = network if network is not None else IdentityNetwork()
        self.dim = d
        self.split_dim = chart.dim
        self.codomain = Product(chart.manifold(), d - chart.dim)
        self.center.setflags(write=False)
        self.orthogonal.setflags(write=False)

    # -- evaluation ---------------------------------------------------------

    def forward(self, x):
        y = self.network.forward(self.orthogonal @ (_as_f64(x) - self.center))
        dp = self.split_dim
        return np.concatenate([self.chart.to_manifold(y[:dp]), y[dp:]])

    def inverse(self, m):
        m = _as_f64(m)
        k = self.chart.ambient_dim
        y = np.concatenate([self.chart.to_coords(m[:k]), m[k:]])
        return self.orthogonal.T @ self.network.inverse(y) + self.center

    def pushforward(self, x, v):
        x, v = _as_f64(x), _as_f64(v)
        u = self.orthogonal @ (x - self.center)
        du = self.orthogonal @ v
        y = self.network.forward(u)
        dy = self.network.jvp(u, du)
        dp = self.split_dim
        return np.concatenate([self.chart.diff_to_manifold(y[:dp], dy[:dp]), dy[dp:]])

    def inverse_pushforward(self, m, w):
        m, w = _as_f64(m), _as_f64(w)
        k = self.chart.ambient_dim
        y = np.concatenate([self.chart.to_coords(m[:k]), m[k:]])
        dy = np.concatenate([self.chart.diff_to_coords(m[:k], w[:k]), w[k:]])
        return self.orthogonal.T @ self.network.inverse_jvp(y, dy)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> str:
        """Single JSON document; floats as hex for a bit-exact round trip."""
        doc = {
            "center": _hex_vector(self.center),
            "orthogonal": [_hex_vector(row) for row in self.orthogonal],
            "chart": self.chart.kind,
            "split_dim": self.split_dim,
            "network": None,
        }
        if not isinstance(self.network, IdentityNetwork):
            doc["network"] = self.network.state_dict_hex()
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CompositeDiffeo":
        doc = json.loads(text)
        center = _unhex_vector(doc["center"])
        orthogonal = np.stack([_unhex_vector(row) for row in doc["orthogonal"]])
        chart = make_chart(doc["chart"], doc["split_dim"])
        network = None
        if doc["network"] is not None:
            from .resnet import FrozenResNetMap

            network = FrozenResNetMap.from_state_dict_hex(doc["network"])
        return cls(center, orthogonal, chart, network)


def _hex_vector(v):
    return [float(x).hex() for x in np.asarray(v, dtype=np.float64).ravel()]


def _unhex_vector(items):
    return np.array([float.fromhex(s) for s in items], dtype=np.float64)


def translation_diffeo(center, dim=None) -> CompositeDiffeo:
    """Pure translation x -> x - c onto Euclidean R^d (an isometry)."""
    center = _as_f64(center)
    d = center.shape[0] if dim is None else dim
    return CompositeDiffeo(center, np.eye(d), IdentityChart(d))
