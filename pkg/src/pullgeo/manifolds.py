"""Model spaces with closed-form Riemannian operations.

Supported spaces: Euclidean R^n, the unit sphere S^n with the ambient
Euclidean metric, the unit hyperboloid H^n (upper sheet, Minkowski metric)
and products M x R^k.  Points and tangent vectors live in ambient
coordinates; every operation is an exact closed form, no ODE integration.
All arithmetic is in 64-bit floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AntipodalPoints, ZeroDirection

# Constraint tolerance for membership checks and the near-zero cutoff that
# removes 0/0 in the sin/sinh ratios.
CONSTRAINT_TOL = 1e-10
NEAR_ZERO = 1e-12


def _as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


class ModelManifold:
    """Base class; subclasses implement the metric and the exp/log family."""

    ambient_dim: int
    intrinsic_dim: int
    is_euclidean: bool = False

    def _key(self):
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, ModelManifold) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    # -- constraints ------------------------------------------------------

    def point_defect(self, p: np.ndarray) -> float:
        """Violation of the defining point constraint (0 on the manifold)."""
        raise NotImplementedError

    def tangent_defect(self, p: np.ndarray, v: np.ndarray) -> float:
        """Violation of the tangency constraint at ``p``."""
        raise NotImplementedError

    def check_point(self, p: np.ndarray, tol: float = CONSTRAINT_TOL) -> None:
        d = self.point_defect(p)
        if d > tol:
            raise ValueError(f"point off {self!r} by {d:.3e}")

    def check_tangent(self, p: np.ndarray, v: np.ndarray, tol: float = CONSTRAINT_TOL) -> None:
        d = self.tangent_defect(p, v)
        if d > tol:
            raise ValueError(f"vector not tangent to {self!r} at base point (defect {d:.3e})")

    def project_point(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project_tangent(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- metric and mappings ----------------------------------------------

    def inner(self, p: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        raise NotImplementedError

    def norm(self, p: np.ndarray, v: np.ndarray) -> float:
        # Restricted to the tangent space the metric is positive definite,
        # so clip away the tiny negatives rounding can produce on H^n.
        return float(np.sqrt(max(self.inner(p, v, v), 0.0)))

    def exp(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dist(self, p: np.ndarray, q: np.ndarray) -> float:
        raise NotImplementedError

    def transport(self, p: np.ndarray, q: np.ndarray, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def geodesic(self, p: np.ndarray, q: np.ndarray, t: float) -> np.ndarray:
        return self.exp(p, t * self.log(p, q))

    def curvature_operator(self, p: np.ndarray, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Curvature tensor R(u, v)w at ``p``."""
        raise NotImplementedError

    def tangent_basis(self, p: np.ndarray) -> np.ndarray:
        """Rows form an orthonormal basis of T_p in the manifold metric."""
        raise NotImplementedError

    def curvature_spectrum(self, p: np.ndarray, w: np.ndarray):
        """Eigen-decomposition of Theta -> R(Theta, w)w at ``p``.

        Returns ``(eigenvalues, frame)`` where ``frame`` rows are orthonormal
        in the manifold metric and ``R(frame[j], w)w = eigenvalues[j] * frame[j]``.
        """
        raise NotImplementedError

    def _frame_through(self, p: np.ndarray, unit: np.ndarray) -> np.ndarray:
        """Orthonormal tangent frame whose first row is ``unit``."""
        rows = [unit]
        for cand in self.tangent_basis(p):
            r = cand.copy()
            for b in rows:
                r = r - self.inner(p, b, r) * b
            n = self.norm(p, r)
            if n > 1e-8:
                rows.append(r / n)
            if len(rows) == self.intrinsic_dim:
                break
        return np.stack(rows)


class Euclidean(ModelManifold):
    """Flat R^n with the standard inner product."""

    is_euclidean = True

    def __init__(self, n: int):
        self.n = int(n)
        self.ambient_dim = self.n
        self.intrinsic_dim = self.n

    def __repr__(self):
        return f"Euclidean({self.n})"

    def _key(self):
        return ("Euclidean", self.n)

    def point_defect(self, p):
        return 0.0

    def tangent_defect(self, p, v):
        return 0.0

    def project_point(self, p):
        return _as_f64(p)

    def project_tangent(self, p, v):
        return _as_f64(v)

    def inner(self, p, u, v):
        return float(np.dot(u, v))

    def exp(self, p, v):
        return _as_f64(p) + _as_f64(v)

    def log(self, p, q):
        return _as_f64(q) - _as_f64(p)

    def dist(self, p, q):
        return float(np.linalg.norm(_as_f64(q) - _as_f64(p)))

    def transport(self, p, q, u):
        return _as_f64(u)

    def curvature_operator(self, p, u, v, w):
        return np.zeros(self.n)

    def tangent_basis(self, p):
        return np.eye(self.n)

    def curvature_spectrum(self, p, w):
        w = _as_f64(w)
        nw = np.linalg.norm(w)
        if nw < NEAR_ZERO:
            raise ZeroDirection("curvature spectrum along a zero direction")
        frame = self._frame_through(p, w / nw)
        return np.zeros(self.n), frame


class _ConstantCurvature(ModelManifold):
    """Shared machinery for the sphere (K = +1) and hyperboloid (K = -1)."""

    curvature_sign: float

    def transport(self, p, q, u):
        # Standard constant-curvature transport along the connecting geodesic:
        #   P u = u - <log_p q, u> / d^2 (log_p q + log_q p)
        p, q, u = _as_f64(p), _as_f64(q), _as_f64(u)
        d = self.dist(p, q)
        if d < NEAR_ZERO:
            return u.copy()
        lpq = self.log(p, q)
        lqp = self.log(q, p)
        coeff = self.inner(p, lpq, u) / (d * d)
        return u - coeff * (lpq + lqp)

    def curvature_operator(self, p, u, v, w):
        # R(u, v)w = K (<v, w> u - <u, w> v) in constant curvature K.
        K = self.curvature_sign
        return K * (self.inner(p, v, w) * _as_f64(u) - self.inner(p, u, w) * _as_f64(v))

    def curvature_spectrum(self, p, w):
        w = _as_f64(w)
        nw = self.norm(p, w)
        if nw < NEAR_ZERO:
            raise ZeroDirection("curvature spectrum along a zero direction")
        frame = self._frame_through(p, w / nw)
        eig = np.full(self.intrinsic_dim, self.curvature_sign * nw * nw)
        eig[0] = 0.0  # the direction w itself is flat
        return eig, frame

    def tangent_basis(self, p):
        rows = []
        for e in np.eye(self.ambient_dim):
            r = self.project_tangent(p, e)
            for b in rows:
                r = r - self.inner(p, b, r) * b
            n = self.norm(p, r)
            if n > 1e-8:
                rows.append(r / n)
            if len(rows) == self.intrinsic_dim:
                break
        return np.stack(rows)


class Sphere(_ConstantCurvature):
    """Unit sphere S^n in R^{n+1} with the ambient Euclidean metric."""

    curvature_sign = 1.0

    def __init__(self, n: int):
        self.n = int(n)
        self.ambient_dim = self.n + 1
        self.intrinsic_dim = self.n

    def __repr__(self):
        return f"Sphere({self.n})"

    def _key(self):
        return ("Sphere", self.n)

    def point_defect(self, p):
        return abs(float(np.dot(p, p)) - 1.0)

    def tangent_defect(self, p, v):
        return abs(float(np.dot(p, v)))

    def project_point(self, p):
        p = _as_f64(p)
        return p / np.linalg.norm(p)

    def project_tangent(self, p, v):
        p, v = _as_f64(p), _as_f64(v)
        return v - np.dot(p, v) * p

    def inner(self, p, u, v):
        return float(np.dot(u, v))

    def exp(self, p, v):
        p, v = _as_f64(p), _as_f64(v)
        t = np.linalg.norm(v)
        if t < NEAR_ZERO:
            return p.copy()
        out = np.cos(t) * p + np.sin(t) * (v / t)
        if self.point_defect(out) > NEAR_ZERO:
            out = self.project_point(out)
        return out

    def log(self, p, q):
        p, q = _as_f64(p), _as_f64(q)
        c = float(np.clip(np.dot(p, q), -1.0, 1.0))
        if c < -1.0 + 1e-12:
            raise AntipodalPoints("log map between antipodal points on the sphere")
        u = q - c * p
        nu = np.linalg.norm(u)
        if nu < NEAR_ZERO:
            return np.zeros_like(p)
        return self.dist(p, q) * (u / nu)

    def dist(self, p, q):
        # Chord form of arccos(clamp(<p,q>)): exact at 0 and at pi, where the
        # arccos evaluation would amplify rounding in the inner product.
        p, q = _as_f64(p), _as_f64(q)
        if np.dot(p, q) >= 0.0:
            return float(2.0 * np.arcsin(min(np.linalg.norm(q - p) / 2.0, 1.0)))
        return float(np.pi - 2.0 * np.arcsin(min(np.linalg.norm(q + p) / 2.0, 1.0)))


class Hyperboloid(_ConstantCurvature):
    """Upper sheet of the unit hyperboloid H^n in Minkowski space R^{n,1}."""

    curvature_sign = -1.0

    def __init__(self, n: int):
        self.n = int(n)
        self.ambient_dim = self.n + 1
        self.intrinsic_dim = self.n

    def __repr__(self):
        return f"Hyperboloid({self.n})"

    def _key(self):
        return ("Hyperboloid", self.n)

    def minkowski(self, u, v) -> float:
        u, v = _as_f64(u), _as_f64(v)
        return float(np.dot(u[:-1], v[:-1]) - u[-1] * v[-1])

    def point_defect(self, p):
        p = _as_f64(p)
        if p[-1] <= 0:
            return np.inf
        return abs(self.minkowski(p, p) + 1.0)

    def tangent_defect(self, p, v):
        return abs(self.minkowski(p, v))

    def project_point(self, p):
        # Rescale the last coordinate so the Minkowski constraint holds again.
        p = _as_f64(p).copy()
        p[-1] = np.sqrt(np.dot(p[:-1], p[:-1]) + 1.0)
        return p

    def project_tangent(self, p, v):
        p, v = _as_f64(p), _as_f64(v)
        return v + self.minkowski(p, v) * p

    def inner(self, p, u, v):
        return self.minkowski(u, v)

    def exp(self, p, v):
        p, v = _as_f64(p), _as_f64(v)
        t = np.sqrt(max(self.minkowski(v, v), 0.0))
        if t < NEAR_ZERO:
            return p.copy()
        out = np.cosh(t) * p + np.sinh(t) * (v / t)
        if self.point_defect(out) > NEAR_ZERO:
            out = self.project_point(out)
        return out

    def log(self, p, q):
        p, q = _as_f64(p), _as_f64(q)
        c = max(-self.minkowski(p, q), 1.0)
        u = q - c * p
        nu = np.sqrt(max(self.minkowski(u, u), 0.0))
        if nu < NEAR_ZERO:
            return np.zeros_like(p)
        return self.dist(p, q) * (u / nu)

    def dist(self, p, q):
        # Chord form of arccosh(-<p,q>_M): with delta = q - p one has
        # <delta,delta>_M = 2(cosh(d) - 1), so d = 2 asinh(|delta|_M / 2),
        # which is exact at coincident points.
        delta = _as_f64(q) - _as_f64(p)
        s = np.sqrt(max(self.minkowski(delta, delta), 0.0))
        return float(2.0 * np.arcsinh(s / 2.0))


class Product(ModelManifold):
    """Product M x R^k with the product metric; ambient coords concatenated.

    The Euclidean factor may have dimension zero, which keeps a single code
    path whether or not a manifold is paired with extra flat coordinates.
    """

    def __init__(self, inner_manifold: ModelManifold, euclidean_dim: int):
        if euclidean_dim < 0:
            raise ValueError("euclidean_dim must be >= 0")
        self.inner_manifold = inner_manifold
        self.euclidean_dim = int(euclidean_dim)
        self.ambient_dim = inner_manifold.ambient_dim + self.euclidean_dim
        self.intrinsic_dim = inner_manifold.intrinsic_dim + self.euclidean_dim

    def __repr__(self):
        return f"Product({self.inner_manifold!r}, {self.euclidean_dim})"

    def _key(self):
        return ("Product", self.inner_manifold._key(), self.euclidean_dim)

    @property
    def is_euclidean(self):
        return self.inner_manifold.is_euclidean

    def split(self, x):
        x = _as_f64(x)
        m = self.inner_manifold.ambient_dim
        return x[:m], x[m:]

    def join(self, a, b):
        return np.concatenate([_as_f64(a), _as_f64(b)])

    def point_defect(self, p):
        a, _ = self.split(p)
        return self.inner_manifold.point_defect(a)

    def tangent_defect(self, p, v):
        pa, _ = self.split(p)
        va, _ = self.split(v)
        return self.inner_manifold.tangent_defect(pa, va)

    def project_point(self, p):
        a, b = self.split(p)
        return self.join(self.inner_manifold.project_point(a), b)

    def project_tangent(self, p, v):
        pa, _ = self.split(p)
        va, vb = self.split(v)
        return self.join(self.inner_manifold.project_tangent(pa, va), vb)

    def inner(self, p, u, v):
        pa, _ = self.split(p)
        ua, ub = self.split(u)
        va, vb = self.split(v)
        return self.inner_manifold.inner(pa, ua, va) + float(np.dot(ub, vb))

    def exp(self, p, v):
        pa, pb = self.split(p)
        va, vb = self.split(v)
        return self.join(self.inner_manifold.exp(pa, va), pb + vb)

    def log(self, p, q):
        pa, pb = self.split(p)
        qa, qb = self.split(q)
        return self.join(self.inner_manifold.log(pa, qa), qb - pb)

    def dist(self, p, q):
        pa, pb = self.split(p)
        qa, qb = self.split(q)
        da = self.inner_manifold.dist(pa, qa)
        db = np.linalg.norm(qb - pb)
        return float(np.hypot(da, db))

    def transport(self, p, q, u):
        pa, _ = self.split(p)
        qa, _ = self.split(q)
        ua, ub = self.split(u)
        return self.join(self.inner_manifold.transport(pa, qa, ua), ub)

    def curvature_operator(self, p, u, v, w):
        pa, _ = self.split(p)
        ua, _ = self.split(u)
        va, _ = self.split(v)
        wa, _ = self.split(w)
        ra = self.inner_manifold.curvature_operator(pa, ua, va, wa)
        return self.join(ra, np.zeros(self.euclidean_dim))

    def tangent_basis(self, p):
        pa, _ = self.split(p)
        inner_rows = self.inner_manifold.tangent_basis(pa)
        rows = [self.join(r, np.zeros(self.euclidean_dim)) for r in inner_rows]
        za = np.zeros(self.inner_manifold.ambient_dim)
        rows += [self.join(za, e) for e in np.eye(self.euclidean_dim)]
        return np.stack(rows)

    def curvature_spectrum(self, p, w):
        # Block union: the inner-factor spectrum along the inner component of
        # w plus zero eigenvalues for the Euclidean block.
        pa, _ = self.split(p)
        wa, wb = self.split(w)
        if self.norm(p, w) < NEAR_ZERO:
            raise ZeroDirection("curvature spectrum along a zero direction")
        za = np.zeros(self.inner_manifold.ambient_dim)
        eucl_rows = [self.join(za, e) for e in np.eye(self.euclidean_dim)]
        if self.inner_manifold.norm(pa, wa) < NEAR_ZERO:
            eig_a = np.zeros(self.inner_manifold.intrinsic_dim)
            frame_a = self.inner_manifold.tangent_basis(pa)
        else:
            eig_a, frame_a = self.inner_manifold.curvature_spectrum(pa, wa)
        rows = [self.join(r, np.zeros(self.euclidean_dim)) for r in frame_a] + eucl_rows
        eig = np.concatenate([eig_a, np.zeros(self.euclidean_dim)])
        return eig, np.stack(rows)


# ---------------------------------------------------------------------------
# Typed value layer


@dataclass(frozen=True)
class ManifoldPoint:
    """A point in ambient coordinates, validated against its manifold."""

    coords: np.ndarray
    manifold: ModelManifold

    def __post_init__(self):
        c = _as_f64(self.coords).copy()
        self.manifold.check_point(c)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector at ``base`` in ambient coordinates."""

    base: ManifoldPoint
    coords: np.ndarray

    def __post_init__(self):
        c = _as_f64(self.coords).copy()
        self.base.manifold.check_tangent(self.base.coords, c)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)


@dataclass(frozen=True)
class CurvatureSpectrum:
    """Eigenpairs of Theta -> R(Theta, w)w along a generating direction w."""

    eigenvalues: np.ndarray
    frame: tuple


def _same_base(p: ManifoldPoint, v: TangentVector) -> None:
    if v.base.manifold != p.manifold or not np.allclose(v.base.coords, p.coords, atol=1e-12):
        raise ValueError("tangent vector based at a different point")


def metric_inner(p: ManifoldPoint, u: TangentVector, v: TangentVector) -> float:
    _same_base(p, u)
    _same_base(p, v)
    return p.manifold.inner(p.coords, u.coords, v.coords)


def exp_map(p: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
    _same_base(p, v)
    return ManifoldPoint(p.manifold.exp(p.coords, v.coords), p.manifold)


def log_map(p: ManifoldPoint, q: ManifoldPoint) -> TangentVector:
    if q.manifold != p.manifold:
        raise ValueError("points on different manifolds")
    return TangentVector(p, p.manifold.log(p.coords, q.coords))


def distance(p: ManifoldPoint, q: ManifoldPoint) -> float:
    if q.manifold != p.manifold:
        raise ValueError("points on different manifolds")
    return p.manifold.dist(p.coords, q.coords)


def parallel_transport(p: ManifoldPoint, q: ManifoldPoint, u: TangentVector) -> TangentVector:
    _same_base(p, u)
    return TangentVector(q, p.manifold.transport(p.coords, q.coords, u.coords))


def curvature_spectrum(p: ManifoldPoint, w: TangentVector) -> CurvatureSpectrum:
    _same_base(p, w)
    eig, frame = p.manifold.curvature_spectrum(p.coords, w.coords)
    vecs = tuple(TangentVector(p, row) for row in frame)
    return CurvatureSpectrum(eig, vecs)
