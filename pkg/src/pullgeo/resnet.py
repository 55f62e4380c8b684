"""Invertible residual network with spectral-norm-constrained blocks.

Each block is x + f(x) where f is a 2-hidden-layer ELU MLP whose weight
matrices are kept at spectral norm <= c < 1, so Lip(f) <= c^3 < 1 and the
block inverts by fixed-point iteration.  Forward, directional derivative
and inverse are plain vectorised numpy on float64 row batches; gradients
live in the training module, which records the forward pass and walks it
backwards.
"""

from __future__ import annotations

import numpy as np

from .errors import FixedPointDivergence


def elu(z):
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def elu_prime(z):
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


def elu_second(z):
    # kink at 0 is measure zero; the subgradient convention picks 0 there
    return np.where(z >= 0, 0.0, np.exp(np.minimum(z, 0.0)))


class ResidualBlock:
    """x + f(x) with f = ELU MLP; weights stored for row products x @ W."""

    def __init__(self, dim, width, rng, init_scale=1e-2):
        # fan-in scaled Gaussians; the last matrix starts tiny so the whole
        # network begins close to the identity
        self.W1 = rng.standard_normal((dim, width)) / np.sqrt(dim)
        self.W2 = rng.standard_normal((width, width)) / np.sqrt(width)
        self.W3 = rng.standard_normal((width, dim)) / np.sqrt(width) * init_scale
        self.b1 = np.zeros(width)
        self.b2 = np.zeros(width)
        self.b3 = np.zeros(dim)
        # persistent power-iteration vectors, one per weight matrix
        self.u1 = rng.standard_normal(dim)
        self.u2 = rng.standard_normal(width)
        self.u3 = rng.standard_normal(width)

    def params(self):
        return [("W1", self.W1), ("W2", self.W2), ("W3", self.W3),
                ("b1", self.b1), ("b2", self.b2), ("b3", self.b3)]

    def branch(self, x):
        h = elu(x @ self.W1 + self.b1)
        h = elu(h @ self.W2 + self.b2)
        return h @ self.W3 + self.b3

    def forward(self, x):
        return x + self.branch(x)

    def jvp(self, x, v):
        """Block value and exact directional derivative.

        ``v`` may carry extra direction axes between the batch axis and the
        feature axis; activation derivatives broadcast across them.
        """
        z1 = x @ self.W1 + self.b1
        t1 = (v @ self.W1) * _expand(elu_prime(z1), v.ndim)
        z2 = elu(z1) @ self.W2 + self.b2
        t2 = (t1 @ self.W2) * _expand(elu_prime(z2), v.ndim)
        return x + elu(z2) @ self.W3 + self.b3, v + t2 @ self.W3


def _expand(s, ndim):
    # align an activation-derivative array (B, h) with tangents (B, ..., h)
    while s.ndim < ndim:
        s = s[..., None, :]
    return s


class InvertibleResNet:
    """Stack of contractive residual blocks; invertible by construction."""

    def __init__(self, dim, width=10, n_blocks=100, lipschitz_scale=0.8, power_iters=10,
                 init_scale=1e-2, seed=0):
        if not 0.0 < lipschitz_scale < 1.0:
            raise ValueError("lipschitz_scale must lie in (0, 1)")
        self.dim = dim
        self.width = width
        self.lipschitz_scale = float(lipschitz_scale)
        self.power_iters = int(power_iters)
        rng = np.random.default_rng(seed)
        self.blocks = [ResidualBlock(dim, width, rng, init_scale) for _ in range(n_blocks)]
        self.spectral_normalize()

    # -- evaluation ---------------------------------------------------------

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        for block in self.blocks:
            x = block.forward(x)
        return x

    __call__ = forward

    def jvp(self, x, v):
        """Directional derivative of the full network; returns (value, tangent)."""
        x = np.asarray(x, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        for block in self.blocks:
            x, v = block.jvp(x, v)
        return x, v

    def inverse(self, y, tol=1e-10, max_iter=200):
        """Fixed-point inversion, blocks in reverse order.

        Each block solves x = y - f(x) by iteration from x0 = y; convergence
        is geometric at rate <= c^3 while the Lipschitz constraint holds.
        """
        x = np.asarray(y, dtype=np.float64)
        for block in reversed(self.blocks):
            target = x
            x = target.copy()
            for _ in range(max_iter):
                x_next = target - block.branch(x)
                shift = np.max(np.linalg.norm(np.atleast_2d(x_next - x), axis=-1))
                x = x_next
                if shift < tol:
                    break
            else:
                raise FixedPointDivergence(
                    "block inversion did not converge; spectral normalization is broken"
                )
        return x

    def jacobian(self, x):
        """Full d x d Jacobian at a single point, columns from basis jvps."""
        x = np.asarray(x, dtype=np.float64)
        _, t = self.jvp(np.tile(x, (self.dim, 1)), np.eye(self.dim))
        return t.T

    # -- the Lipschitz constraint ---------------------------------------------

    def spectral_normalize(self):
        """Cap every weight matrix at spectral norm c (biases untouched).

        sigma is estimated with warm-started power iterations; matrices
        already below the cap are left alone so a near-identity
        initialisation survives normalization.
        """
        c = self.lipschitz_scale
        for block in self.blocks:
            for w, u in [(block.W1, block.u1), (block.W2, block.u2), (block.W3, block.u3)]:
                sigma = _power_iteration(w, u, self.power_iters)
                if sigma > c:
                    w *= c / sigma

    def spectral_norms(self):
        """Current power-iteration estimates, one per weight matrix."""
        return [
            _power_iteration(w, u, self.power_iters)
            for block in self.blocks
            for w, u in [(block.W1, block.u1), (block.W2, block.u2), (block.W3, block.u3)]
        ]

    def parameters(self):
        """Flat list of parameter arrays, block by block (shared, not copied)."""
        return [arr for block in self.blocks for _, arr in block.params()]


def _power_iteration(w, u, iters):
    """Largest singular value of w, refining the persistent vector u in place."""
    if np.max(np.abs(w)) < 1e-30:
        return 0.0
    v = None
    for _ in range(iters):
        v = w.T @ u
        v /= max(np.linalg.norm(v), 1e-30)
        u_new = w @ v
        u_new /= max(np.linalg.norm(u_new), 1e-30)
        u[:] = u_new
    return float(u @ w @ v)


def estimate_spectral_norm(matrix, iters=10, seed=0):
    """Stand-alone power-iteration estimate for an arbitrary matrix."""
    w = np.asarray(matrix, dtype=np.float64)
    u = np.random.default_rng(seed).standard_normal(w.shape[0])
    return _power_iteration(w, u, iters)


class FrozenResNetMap:
    """Network protocol adapter used inside a composite diffeomorphism."""

    def __init__(self, net: InvertibleResNet, inverse_tol=1e-10, inverse_max_iter=200):
        self.net = net
        self.inverse_tol = inverse_tol
        self.inverse_max_iter = inverse_max_iter

    def forward(self, x):
        return self.net.forward(x)

    def inverse(self, y):
        return self.net.inverse(y, self.inverse_tol, self.inverse_max_iter)

    def jvp(self, x, v):
        _, t = self.net.jvp(np.asarray(x, dtype=np.float64), np.asarray(v, dtype=np.float64))
        return t

    def inverse_jvp(self, y, w):
        x = self.inverse(y)
        return np.linalg.solve(self.net.jacobian(x), np.asarray(w, dtype=np.float64))

    # -- serialization --------------------------------------------------------

    def state_dict_hex(self):
        doc = {
            "dim": self.net.dim,
            "width": self.net.width,
            "n_blocks": len(self.net.blocks),
            "lipschitz_scale": self.net.lipschitz_scale,
            "power_iters": self.net.power_iters,
            "blocks": [],
        }
        for block in self.net.blocks:
            entry = {}
            for name, arr in block.params():
                entry[name] = {"shape": list(arr.shape), "data": [float(x).hex() for x in arr.ravel()]}
            doc["blocks"].append(entry)
        return doc

    @classmethod
    def from_state_dict_hex(cls, doc):
        net = InvertibleResNet(
            doc["dim"],
            width=doc["width"],
            n_blocks=doc["n_blocks"],
            lipschitz_scale=doc["lipschitz_scale"],
            power_iters=doc["power_iters"],
        )
        for block, entry in zip(net.blocks, doc["blocks"]):
            for name, _ in block.params():
                spec = entry[name]
                arr = np.array([float.fromhex(s) for s in spec["data"]]).reshape(spec["shape"])
                getattr(block, name)[...] = arr
        return cls(net)
