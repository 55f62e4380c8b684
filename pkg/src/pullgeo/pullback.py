"""Riemannian structure on R^d pulled back through a diffeomorphism.

Every mapping is the conjugation of the model-space operation by phi and its
(inverse) pushforward: map the points/vectors over, operate there, map back.
On top of the five basic mappings the module provides pulled-back curvature
spectra, first-order local Lipschitz estimates and the stability-bound
calculators for geodesics and approximate barycentres.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beta import beta_geo, beta_logpoint
from .diffeo import Diffeomorphism
from .errors import SingularJacobian, ZeroDirection
from .manifolds import ModelManifold


def _as_f64(x):
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class StabilityReport:
    """First-order geodesic perturbation bound, factored as in the theory.

    ``bound = lipschitz_inv * beta_factor * lipschitz_fwd`` multiplies the
    l2 size of an endpoint perturbation.
    """

    lipschitz_fwd: float
    lipschitz_inv: float
    beta_factor: float
    bound: float


@dataclass(frozen=True)
class PullbackSpectrum:
    """Pulled-back curvature eigenpairs: frame rows live in R^d."""

    eigenvalues: np.ndarray
    frame: np.ndarray


class PullbackSpace:
    """(R^d, (., .)^phi): model manifold geometry seen through phi."""

    def __init__(self, model: ModelManifold, phi: Diffeomorphism):
        if model.ambient_dim != phi.codomain.ambient_dim:
            raise ValueError("phi codomain does not match the model manifold")
        self.model = model
        self.phi = phi
        self.dim = phi.dim

    @classmethod
    def of(cls, phi: Diffeomorphism) -> "PullbackSpace":
        return cls(phi.codomain, phi)

    # -- metric --------------------------------------------------------------

    def inner(self, x, u, v) -> float:
        m = self.phi.forward(x)
        return self.model.inner(m, self.phi.pushforward(x, u), self.phi.pushforward(x, v))

    def norm(self, x, v) -> float:
        return float(np.sqrt(max(self.inner(x, v, v), 0.0)))

    def gram(self, x) -> np.ndarray:
        """Pullback Gram matrix of the standard basis at x (d x d, SPD)."""
        d = self.dim
        m = self.phi.forward(x)
        cols = [self.phi.pushforward(x, e) for e in np.eye(d)]
        G = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                G[i, j] = G[j, i] = self.model.inner(m, cols[i], cols[j])
        return G

    # -- the five pulled-back mappings ----------------------------------------

    def geodesic(self, x, y, t: float) -> np.ndarray:
        g = self.model.geodesic(self.phi.forward(x), self.phi.forward(y), t)
        return self.phi.inverse(g)

    def log(self, x, y) -> np.ndarray:
        mx = self.phi.forward(x)
        return self.phi.inverse_pushforward(mx, self.model.log(mx, self.phi.forward(y)))

    def exp(self, x, v) -> np.ndarray:
        mx = self.phi.forward(x)
        return self.phi.inverse(self.model.exp(mx, self.phi.pushforward(x, v)))

    def distance(self, x, y) -> float:
        return self.model.dist(self.phi.forward(x), self.phi.forward(y))

    def transport(self, x, y, v) -> np.ndarray:
        mx = self.phi.forward(x)
        my = self.phi.forward(y)
        w = self.model.transport(mx, my, self.phi.pushforward(x, v))
        return self.phi.inverse_pushforward(my, w)

    # -- curvature -------------------------------------------------------------

    def curvature_spectrum(self, x, w) -> PullbackSpectrum:
        """Eigenpairs of the pulled-back operator Psi -> R^phi(Psi, w)w.

        Eigenvalues agree with the model-space spectrum at phi(x) along the
        pushforward of w; eigenvectors are the inverse pushforwards of the
        model frame and stay orthonormal in the pullback metric.
        """
        w = _as_f64(w)
        mx = self.phi.forward(x)
        pw = self.phi.pushforward(x, w)
        if self.model.norm(mx, pw) < 1e-12:
            raise ZeroDirection("curvature spectrum along a zero direction")
        eig, frame = self.model.curvature_spectrum(mx, pw)
        pulled = np.stack([self.phi.inverse_pushforward(mx, row) for row in frame])
        return PullbackSpectrum(eig, pulled)

    # -- Lipschitz and stability ------------------------------------------------

    def local_lipschitz(self, x):
        """First-order (fwd, inv) Lipschitz surrogates from the Gram spectrum."""
        lam = np.linalg.eigvalsh(self.gram(x))
        lam_min, lam_max = float(lam[0]), float(lam[-1])
        if lam_min < 1e-14:
            raise SingularJacobian(f"pushforward numerically singular (lambda_min={lam_min:.3e})")
        return float(np.sqrt(lam_max)), float(1.0 / np.sqrt(lam_min))

    def geodesic_stability_bound(self, x, y, t: float, perturbed: str = "start") -> StabilityReport:
        """Bound on the geodesic's l2 sensitivity to moving one endpoint.

        ``perturbed`` selects which endpoint moves: the eigenvalues are
        taken along the connecting log at that endpoint's image, and the
        spreading factor is beta(lambda_max, 1 - t) for the start point and
        beta(mu_max, t) for the end point.
        """
        if perturbed == "start":
            spec = self.curvature_spectrum(x, self.log(x, y))
            beta = beta_geo(float(np.max(spec.eigenvalues)), 1.0 - t)
            lip_fwd, _ = self.local_lipschitz(x)
        elif perturbed == "end":
            spec = self.curvature_spectrum(y, self.log(y, x))
            beta = beta_geo(float(np.max(spec.eigenvalues)), t)
            lip_fwd, _ = self.local_lipschitz(y)
        else:
            raise ValueError("perturbed must be 'start' or 'end'")
        _, lip_inv = self.local_lipschitz(self.geodesic(x, y, t))
        return StabilityReport(lip_fwd, lip_inv, beta, lip_inv * beta * lip_fwd)

    def barycentre_stability_bound(self, data, barycentre) -> float:
        """Per-unit-perturbation coefficient for the approximate barycentre.

        (Lip_inv at the barycentre / N) * sum_i beta_L(kappa^i_max) * Lip_fwd(x^i),
        with each kappa^i taken at x^i along the log towards the barycentre.
        """
        data = [_as_f64(x) for x in data]
        _, lip_inv = self.local_lipschitz(barycentre)
        total = 0.0
        for x in data:
            v = self.log(x, barycentre)
            if self.norm(x, v) < 1e-12:
                beta = beta_logpoint(0.0)
            else:
                spec = self.curvature_spectrum(x, v)
                beta = beta_logpoint(float(np.max(spec.eigenvalues)))
            lip_fwd, _ = self.local_lipschitz(x)
            total += beta * lip_fwd
        return lip_inv * total / len(data)

    # -- symmetry diagnostic ------------------------------------------------------

    def reflect(self, x0, y) -> np.ndarray:
        """Pulled-back geodesic reflection of y about x0."""
        return self.exp(x0, -self.log(x0, y))

    def geodesic_reflection_residual(self, x0, pairs) -> float:
        """Max distance distortion of the reflection over the given pairs.

        A symmetric space keeps this at rounding level; large values flag a
        broken pullback structure.
        """
        worst = 0.0
        for y, z in pairs:
            d0 = self.distance(y, z)
            d1 = self.distance(self.reflect(x0, y), self.reflect(x0, z))
            worst = max(worst, abs(d1 - d0))
        return worst
