"""Riemannian autoencoder on a pullback space.

The encoder takes coefficients of the log map at a base point against r
orthonormal tangent directions; the decoder is the exponential of the coded
tangent vector:

    E(x)_l = (log_z(x), w^l)_z,        D(zeta) = exp_z(sum_l zeta_l w^l).

The plain variant (RAE) takes the directions from a truncated SVD of the
log-coefficient matrix; the curvature-corrected variant (CC-RAE) re-solves
for the directions under per-point curvature weights beta_E(kappa)^2 before
re-orthonormalising, which compensates the exp map's distortion away from
flat geometry.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .beta import beta_exp
from .errors import DependentInput, RankDeficient, SingularNormalEquations
from .pullback import PullbackSpace


def gram_schmidt_pb(space: PullbackSpace, z, vectors):
    """Orthonormalise tangent vectors at z in the pullback inner product."""
    out = []
    for v in vectors:
        r = np.asarray(v, dtype=np.float64).copy()
        for b in out:
            r -= space.inner(z, b, r) * b
        n = space.norm(z, r)
        if n < 1e-10:
            raise DependentInput("vectors are linearly dependent at the base point")
        out.append(r / n)
    return out


def orthonormal_frame(space: PullbackSpace, z):
    """Pullback-orthonormal frame at z obtained from the standard basis."""
    return gram_schmidt_pb(space, z, list(np.eye(space.dim)))


def build_coefficient_matrix(space: PullbackSpace, z, frame, data) -> np.ndarray:
    """A[i, k] = (log_z(x^i), Phi^k)_z for every data point and frame vector."""
    rows = []
    for x in data:
        lg = space.log(z, x)
        rows.append([space.inner(z, lg, phi_k) for phi_k in frame])
    return np.asarray(rows, dtype=np.float64)


def tangent_svd(A: np.ndarray, r: int):
    """Thin SVD of the coefficient matrix truncated to rank r.

    Returns (U, sigma, W) with U: N x r, sigma: r, W: d x r; the sign of each
    right singular vector is fixed so its largest-magnitude entry is
    non-negative, making the decomposition deterministic.
    """
    A = np.asarray(A, dtype=np.float64)
    if not 1 <= r <= min(A.shape):
        raise ValueError(f"rank {r} out of range for a {A.shape} matrix")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[r - 1] < 1e-12 * max(s[0], 1e-300):
        raise RankDeficient(f"requested rank {r} exceeds the numerical rank of A")
    U, s, W = U[:, :r], s[:r], Vt[:r].T
    for j in range(r):
        i_max = np.argmax(np.abs(W[:, j]))
        if W[i_max, j] < 0:
            W[:, j] = -W[:, j]
            U[:, j] = -U[:, j]
    return U, s, W


def curvature_corrected_directions(space: PullbackSpace, z, U, frame, data):
    """Solve the weighted least squares for the corrected directions w-hat.

    Minimises over V in R^{r x d}

        sum_{i,j} beta_E(kappa^i_j)^2 ((sum_{l,m} U_il V_lm Phi^m
                                        - log_z(x^i), Psi^{i,j})_z)^2

    where (kappa^i_j, Psi^{i,j}) is the pullback curvature spectrum at z
    along log_z(x^i); the normal equations are solved exactly (with a tiny
    ridge if conditioning degrades) and w-hat^l = sum_m V_lm Phi^m.
    """
    U = np.asarray(U, dtype=np.float64)
    n, r = U.shape
    d = space.dim
    logs = [space.log(z, x) for x in data]

    rows = []
    rhs = []
    for i, lg in enumerate(logs):
        if space.norm(z, lg) < 1e-12:
            # base point itself: zero log, flat weights, any pb-orthonormal frame
            kappas = np.zeros(d)
            psis = np.stack(orthonormal_frame(space, z))
        else:
            spec = space.curvature_spectrum(z, lg)
            kappas, psis = spec.eigenvalues, spec.frame
        c = np.array([[space.inner(z, phi_m, psi) for phi_m in frame] for psi in psis])  # (d_j, d_m)
        b = np.array([space.inner(z, lg, psi) for psi in psis])
        for j in range(len(kappas)):
            w = beta_exp(float(kappas[j]))
            # row over unknowns V[l, m]: coefficient U[i, l] * c[j, m]
            rows.append(w * np.outer(U[i], c[j]).ravel())
            rhs.append(w * b[j])
    M = np.asarray(rows)
    y = np.asarray(rhs)

    H = M.T @ M
    g = M.T @ y
    lam = np.linalg.eigvalsh(H)
    if lam[0] <= 0 or lam[-1] / max(lam[0], 1e-300) > 1e12:
        H = H + (1e-10 * np.trace(H) / H.shape[0]) * np.eye(H.shape[0])
        lam = np.linalg.eigvalsh(H)
        if lam[0] <= 0:
            raise SingularNormalEquations("curvature-corrected normal equations are singular")
    V = cho_solve(cho_factor(H), g).reshape(r, d)
    frame_arr = np.stack(frame)
    return [V[l] @ frame_arr for l in range(r)]


def cc_objective(space: PullbackSpace, z, U, frame, data, V) -> float:
    """Value of the curvature-corrected objective at a candidate V."""
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    frame_arr = np.stack(frame)
    total = 0.0
    for i, x in enumerate(data):
        lg = space.log(z, x)
        approx = (U[i] @ V) @ frame_arr
        resid = approx - lg
        if space.norm(z, lg) < 1e-12:
            kappas = np.zeros(space.dim)
            psis = np.stack(orthonormal_frame(space, z))
        else:
            spec = space.curvature_spectrum(z, lg)
            kappas, psis = spec.eigenvalues, spec.frame
        for j in range(len(kappas)):
            total += (beta_exp(float(kappas[j])) * space.inner(z, resid, psis[j])) ** 2
    return total


class RiemannianAutoencoder(BaseEstimator, TransformerMixin):
    """Rank-r autoencoder whose latent axes are pullback tangent directions.

    Parameters
    ----------
    space : PullbackSpace
        Geometry to encode against.
    base_point : array-like or None
        Tangent-space origin z; defaults to the first training sample.
    rank : int
        Number of latent directions r.
    curvature_corrected : bool
        Re-solve the directions under beta_E curvature weights (CC-RAE).
    """

    def __init__(self, space=None, base_point=None, rank=1, curvature_corrected=False):
        self.space = space
        self.base_point = base_point
        self.rank = rank
        self.curvature_corrected = curvature_corrected

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.space is None:
            raise ValueError("space must be provided")
        z = np.asarray(self.base_point, dtype=np.float64) if self.base_point is not None else X[0].copy()
        frame = orthonormal_frame(self.space, z)
        A = build_coefficient_matrix(self.space, z, frame, X)
        U, s, W = tangent_svd(A, self.rank)
        frame_arr = np.stack(frame)
        if self.curvature_corrected:
            corrected = curvature_corrected_directions(self.space, z, U, frame, X)
            self.directions_ = gram_schmidt_pb(self.space, z, corrected)
            overlap = np.array(
                [[self.space.inner(z, ch, w) for w in self.directions_] for ch in corrected]
            )
            self.codes_ = U @ overlap
        else:
            # uncorrected directions sigma_l w^l are already pb-orthonormal
            # after dropping the scale: w^l = sum_m W[m, l] Phi^m
            self.directions_ = [W[:, l] @ frame_arr for l in range(self.rank)]
            self.codes_ = U * s
        self.base_ = z
        self.frame_ = frame
        self.singular_values_ = s
        return self

    def transform(self, X):
        """Encode: r pullback inner products of each log against the directions."""
        X = check_array(X, dtype=np.float64)
        out = np.empty((X.shape[0], self.rank))
        for i, x in enumerate(X):
            lg = self.space.log(self.base_, x)
            out[i] = [self.space.inner(self.base_, lg, w) for w in self.directions_]
        return out

    def inverse_transform(self, Z):
        """Decode: pullback exponential of the coded tangent vector."""
        Z = check_array(Z, dtype=np.float64)
        out = np.empty((Z.shape[0], self.space.dim))
        for i, code in enumerate(Z):
            v = sum(c * w for c, w in zip(code, self.directions_))
            out[i] = self.space.exp(self.base_, v)
        return out

    def encode(self, x):
        return self.transform(np.asarray(x)[None, :])[0]

    def decode(self, code):
        return self.inverse_transform(np.asarray(code)[None, :])[0]

    def reconstruct(self, X):
        return self.inverse_transform(self.transform(X))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "base": [float(v).hex() for v in self.base_],
            "rank": self.rank,
            "mode": "ccrae" if self.curvature_corrected else "rae",
            "directions": [[float(v).hex() for v in w] for w in self.directions_],
            "codes": [[float(v).hex() for v in row] for row in np.asarray(self.codes_)],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str, space: PullbackSpace) -> "RiemannianAutoencoder":
        doc = json.loads(text)
        model = cls(
            space=space,
            base_point=[float.fromhex(s) for s in doc["base"]],
            rank=doc["rank"],
            curvature_corrected=doc["mode"] == "ccrae",
        )
        model.base_ = np.array([float.fromhex(s) for s in doc["base"]])
        model.directions_ = [np.array([float.fromhex(s) for s in w]) for w in doc["directions"]]
        model.codes_ = np.array([[float.fromhex(s) for s in row] for row in doc["codes"]])
        return model
