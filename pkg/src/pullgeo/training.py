"""Learning the diffeomorphism from data.

The network inside a composite map is trained to match graph-geodesic target
distances while pushing the data into the first chart factor (subspace term)
and staying a local isometry (Gram term):

    mean_{i != i'} (d^phi(x^i, x^i') - D_{i,i'})^2
      + alpha_sub * mean_i |pi_2(phi(x^i))|_1
      + alpha_iso * mean_i |Gram_phi(x^i) - I|_F^2

Gradients are reverse-mode over an explicit record of the forward pass; the
Gram entries come from forward-mode directional derivatives (the jvp chain)
whose intermediate products are part of the record, so the reverse sweep
differentiates through them as well.  The whole engine is vectorised numpy;
its correctness contract is the standing finite-difference test.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .diffeo import CompositeDiffeo, make_chart
from .errors import DisconnectedGraph, EmptyNeighborhood
from .resnet import FrozenResNetMap, InvertibleResNet, elu, elu_prime, elu_second

# ---------------------------------------------------------------------------
# Configuration and loss containers


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 64
    lr: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    adam_eps: float = 1e-8
    alpha_sub: float = 10.0
    alpha_iso: float = 0.01
    seed: int = 0
    knn_k: int = 2
    # network shape; defaults reproduce the reference architecture
    n_blocks: int = 100
    width: int = 10
    lipschitz_scale: float = 0.8
    power_iters: int = 10
    init_scale: float = 1e-2

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.lr <= 0:
            raise ValueError("epochs, batch_size and lr must be positive")
        if self.alpha_sub < 0 or self.alpha_iso < 0:
            raise ValueError("regularisation weights must be >= 0")


@dataclass(frozen=True)
class LossBreakdown:
    distance_term: float
    subspace_term: float
    isometry_term: float
    total: float


def _breakdown(d, s, i, alpha_sub, alpha_iso):
    return LossBreakdown(d, s, i, d + alpha_sub * s + alpha_iso * i)


# ---------------------------------------------------------------------------
# Geodesic target distances and the local PCA frame


def isomap_distances(data, k: int) -> np.ndarray:
    """All-pairs shortest-path completion of the symmetric kNN graph.

    Edge weights are Euclidean; the directed kNN edge sets are unioned
    before the shortest-path pass.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    dense = cdist(data, data)
    np.fill_diagonal(dense, np.inf)
    idx = np.argsort(dense, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    adj = coo_matrix((dense[rows, idx.ravel()], (rows, idx.ravel())), shape=(n, n)).tocsr()
    adj = adj.maximum(adj.T)  # union of directed edges
    n_comp, _ = connected_components(adj, directed=False)
    if n_comp > 1:
        raise DisconnectedGraph(f"kNN graph has {n_comp} components; raise k", n_components=n_comp)
    return shortest_path(adj, method="D", directed=False)


def isomap_distances_auto(data, k: int):
    """Raise k until the graph connects; returns (distances, k_used)."""
    while True:
        try:
            return isomap_distances(data, k), k
        except DisconnectedGraph:
            k += 1


def local_pca_frame(data, center, radius: float):
    """Principal frame of the neighbourhood ball: O = U^T.

    Returns ``(O, eigenvalues)`` with eigenvalues in descending order; the
    rows of O are the principal directions, signs fixed deterministically.
    """
    data = np.asarray(data, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    diffs = data - center
    dists = np.linalg.norm(diffs, axis=1)
    inside = dists <= radius
    if not np.any(inside & (dists > 0)):
        raise EmptyNeighborhood(f"no neighbour within radius {radius}")
    pts = diffs[inside]
    cov = pts.T @ pts
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    for j in range(evecs.shape[1]):
        col = evecs[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            evecs[:, j] = -col
    return evecs.T, evals


# ---------------------------------------------------------------------------
# Composite evaluation used during training


class LearnedComposite:
    """Network + frame + chart bundle the optimiser works on.

    Mirrors the composite diffeomorphism's forward map phi = chart_inv o psi
    o O o T_c on row batches, with vectorised ambient/metric helpers per
    chart kind.
    """

    def __init__(self, net: InvertibleResNet, center, orthogonal, chart_kind: str, split_dim: int):
        self.net = net
        self.center = np.asarray(center, dtype=np.float64)
        self.orthogonal = np.asarray(orthogonal, dtype=np.float64)
        self.chart_kind = chart_kind
        self.split_dim = int(split_dim)
        self.dim = self.center.shape[0]

    def pre_chart(self, x):
        return self.net.forward((np.asarray(x, dtype=np.float64) - self.center) @ self.orthogonal.T)

    def ambient(self, y):
        dp = self.split_dim
        head, tail = y[:, :dp], y[:, dp:]
        if self.chart_kind == "identity":
            return y
        if self.chart_kind == "hyperboloid":
            last = np.sqrt((head**2).sum(-1, keepdims=True) + 1.0)
            return np.concatenate([head, last, tail], axis=-1)
        if self.chart_kind == "stereographic":
            s = (head**2).sum(-1, keepdims=True)
            return np.concatenate([2.0 * head / (1.0 + s), (s - 1.0) / (1.0 + s), tail], axis=-1)
        raise ValueError(f"unknown chart kind {self.chart_kind!r}")

    def pair_distances(self, y):
        """Product-manifold distance matrix between the rows of y."""
        dp = self.split_dim
        tail = y[:, dp:]
        dt2 = ((tail[:, None, :] - tail[None, :, :]) ** 2).sum(-1)
        if self.chart_kind == "identity":
            head = y[:, :dp]
            dm2 = ((head[:, None, :] - head[None, :, :]) ** 2).sum(-1)
            return np.sqrt(dm2 + dt2)
        amb = self.ambient(y)[:, : dp + 1]
        delta = amb[:, None, :] - amb[None, :, :]
        if self.chart_kind == "hyperboloid":
            chord2 = (delta[..., :-1] ** 2).sum(-1) - delta[..., -1] ** 2
            dm = 2.0 * np.arcsinh(np.sqrt(np.maximum(chord2, 0.0)) / 2.0)
        else:
            inner = amb @ amb.T
            chord = np.sqrt(np.maximum((delta**2).sum(-1), 0.0))
            anti = amb[:, None, :] + amb[None, :, :]
            anti_chord = np.sqrt(np.maximum((anti**2).sum(-1), 0.0))
            near = 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0))
            far = np.pi - 2.0 * np.arcsin(np.minimum(anti_chord / 2.0, 1.0))
            dm = np.where(inner >= 0, near, far)
        return np.sqrt(dm**2 + dt2)

    def gram(self, x):
        """Pullback Gram matrices of the standard basis, one per row of x."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        b = x.shape[0]
        u = (x - self.center) @ self.orthogonal.T
        dirs = np.broadcast_to(self.orthogonal.T, (b, self.dim, self.dim))
        y, t = self.net.jvp(u, dirs)  # t[b, j] = D(psi o O o T_c)[e_j]
        dp = self.split_dim
        head = y[:, :dp]
        th, tt = t[:, :, :dp], t[:, :, dp:]
        if self.chart_kind == "identity":
            g_head = np.einsum("bid,bjd->bij", th, th) if dp else 0.0
        elif self.chart_kind == "hyperboloid":
            s = (head**2).sum(-1) + 1.0
            xa = np.einsum("bd,bid->bi", head, th)
            g_head = np.einsum("bid,bjd->bij", th, th) - np.einsum("bi,bj->bij", xa, xa) / s[:, None, None]
        elif self.chart_kind == "stereographic":
            f = 2.0 / (1.0 + (head**2).sum(-1))
            g_head = np.einsum("bid,bjd->bij", th, th) * (f**2)[:, None, None]
        else:
            raise ValueError(f"unknown chart kind {self.chart_kind!r}")
        return g_head + np.einsum("bid,bjd->bij", tt, tt)

    def to_diffeo(self) -> CompositeDiffeo:
        chart = make_chart(self.chart_kind, self.split_dim)
        return CompositeDiffeo(self.center, self.orthogonal, chart, FrozenResNetMap(self.net))


def loss(composite: LearnedComposite, data, targets, alpha_sub: float, alpha_iso: float) -> LossBreakdown:
    """Full three-term loss on a data set (any chart kind, no gradients)."""
    x = np.asarray(data, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = x.shape[0]
    y = composite.pre_chart(x)
    if n >= 2:
        pred = composite.pair_distances(y)
        off = ~np.eye(n, dtype=bool)
        dist = float((((pred - targets)[off]) ** 2).sum() / (n * (n - 1)))
    else:
        dist = 0.0
    tail = y[:, composite.split_dim :]
    sub = float(np.abs(tail).sum(-1).mean()) if tail.shape[1] else 0.0
    g = composite.gram(x)
    iso = float(((g - np.eye(composite.dim)) ** 2).sum(axis=(-2, -1)).mean())
    return _breakdown(dist, sub, iso, alpha_sub, alpha_iso)


# ---------------------------------------------------------------------------
# The gradient engine: record the forward pass, walk it backwards


def _forward_record(net, x, T):
    """Run the jvp chain keeping every intermediate needed by the reverse sweep."""
    record = []
    for block in net.blocks:
        z1 = x @ block.W1 + block.b1
        a1 = elu(z1)
        z2 = a1 @ block.W2 + block.b2
        a2 = elu(z2)
        if T is not None:
            TW1 = T @ block.W1
            T1 = TW1 * elu_prime(z1)[:, None, :]
            TW2 = T1 @ block.W2
            T2 = TW2 * elu_prime(z2)[:, None, :]
            Ty = T + T2 @ block.W3
        else:
            TW1 = TW2 = Ty = None
        record.append((x, T, z1, a1, TW1, z2, a2, TW2))
        x = x + a2 @ block.W3 + block.b3
        T = Ty
    return x, T, record


def _backward_record(net, record, gy, gT):
    """Adjoint sweep over the recorded pass; returns grads per parameter.

    Differentiating through the tangent chain needs the second derivative of
    the activation (the elu_second factors below).
    """
    grads = []
    for block, (x, T, z1, a1, TW1, z2, a2, TW2) in zip(reversed(net.blocks), reversed(record)):
        s1, s2 = elu_prime(z1), elu_prime(z2)
        gW3 = a2.T @ gy
        gb3 = gy.sum(0)
        ga2 = gy @ block.W3.T
        if gT is not None:
            T2 = TW2 * s2[:, None, :]
            gW3 += np.einsum("bkh,bkd->hd", T2, gT)
            gT2 = gT @ block.W3.T
            gz2 = ga2 * s2 + (gT2 * TW2).sum(axis=1) * elu_second(z2)
            gTW2 = gT2 * s2[:, None, :]
            T1 = TW1 * s1[:, None, :]
            gW2 = a1.T @ gz2 + np.einsum("bkh,bkg->hg", T1, gTW2)
            gT1 = gTW2 @ block.W2.T
        else:
            gz2 = ga2 * s2
            gW2 = a1.T @ gz2
        gb2 = gz2.sum(0)
        ga1 = gz2 @ block.W2.T
        if gT is not None:
            gz1 = ga1 * s1 + (gT1 * TW1).sum(axis=1) * elu_second(z1)
            gTW1 = gT1 * s1[:, None, :]
            gW1 = x.T @ gz1 + np.einsum("bkd,bkh->dh", T, gTW1)
            gT = gT + gTW1 @ block.W1.T
        else:
            gz1 = ga1 * s1
            gW1 = x.T @ gz1
        gb1 = gz1.sum(0)
        gy = gy + gz1 @ block.W1.T
        grads.append([gW1, gW2, gW3, gb1, gb2, gb3])
    flat = []
    for g in reversed(grads):
        flat.extend(g)
    return flat


def _distance_head(y, targets, pair_mask):
    """Distance term and its adjoint on the flat (identity-chart) codomain."""
    b = y.shape[0]
    delta = y[:, None, :] - y[None, :, :]
    d = np.sqrt((delta**2).sum(-1))
    np.fill_diagonal(d, 1.0)  # masked out below; keeps the division finite
    err = np.where(pair_mask, d - targets, 0.0)
    m = int(pair_mask.sum())
    if m == 0:
        return 0.0, np.zeros_like(y)
    value = float((err**2).sum() / m)
    w = 2.0 * err / m
    gy = np.einsum("ij,ijd->id", (w + w.T) / d, delta)
    return value, gy


def grad_loss(composite: LearnedComposite, data, targets, alpha_sub: float, alpha_iso: float,
              pair_mask=None):
    """Batch loss with gradients for every network parameter.

    Only identity-chart composites are trainable (the reference experiments
    never train through a curved chart); the general loss remains available
    through :func:`loss`.
    """
    if composite.chart_kind != "identity":
        raise NotImplementedError("gradients are implemented for the identity chart only")
    x = np.asarray(data, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    b = x.shape[0]
    dp = composite.split_dim
    u = (x - composite.center) @ composite.orthogonal.T
    T0 = np.broadcast_to(composite.orthogonal.T, (b, composite.dim, composite.dim)) if alpha_iso > 0 else None
    y, Ty, record = _forward_record(composite.net, u, T0)

    if pair_mask is None:
        pair_mask = ~np.eye(b, dtype=bool)
    if b >= 2:
        dist, gy = _distance_head(y, targets, pair_mask)
    else:
        dist, gy = 0.0, np.zeros_like(y)

    tail = y[:, dp:]
    if tail.shape[1]:
        sub = float(np.abs(tail).sum(-1).mean())
        gy[:, dp:] += alpha_sub * np.sign(tail) / b
    else:
        sub = 0.0

    if alpha_iso > 0:
        g = np.einsum("bkd,bld->bkl", Ty, Ty)
        resid = g - np.eye(composite.dim)
        iso = float((resid**2).sum(axis=(-2, -1)).mean())
        gTy = alpha_iso * (4.0 / b) * np.einsum("bkl,bld->bkd", resid, Ty)
    else:
        iso = float(((composite.gram(x) - np.eye(composite.dim)) ** 2).sum(axis=(-2, -1)).mean())
        gTy = None

    grads = _backward_record(composite.net, record, gy, gTy)
    return _breakdown(dist, sub, iso, alpha_sub, alpha_iso), grads


class Adam:
    """Plain ADAM with bias correction, acting in place on parameter arrays."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.99, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class EpochRecord:
    """Per-epoch bookkeeping: mean batch loss plus a full-data breakdown."""

    mean_batch_total: float
    full: LossBreakdown


def train(data, config: TrainConfig, chart_kind: str, center, orthogonal, split_dim=None,
          targets=None, epoch_eval_size=512):
    """Mini-batch ADAM over the three-term objective; deterministic per seed.

    Isomap targets are computed once on the full data set (pass ``targets``
    to reuse a precomputed matrix); spectral normalization runs after every
    parameter update.  Returns the frozen composite diffeomorphism and the
    per-epoch loss history; to keep bookkeeping off the training budget the
    quadratic terms of the epoch record are evaluated on an evenly spaced
    subsample of up to ``epoch_eval_size`` points (the subspace term is
    always exact over the full data set).
    """
    data = np.asarray(data, dtype=np.float64)
    n, d = data.shape
    split_dim = d if split_dim is None else int(split_dim)
    if targets is None:
        targets = isomap_distances(data, config.knn_k)

    net = InvertibleResNet(
        d,
        width=config.width,
        n_blocks=config.n_blocks,
        lipschitz_scale=config.lipschitz_scale,
        power_iters=config.power_iters,
        init_scale=config.init_scale,
        seed=config.seed,
    )
    composite = LearnedComposite(net, center, orthogonal, chart_kind, split_dim)
    opt = Adam(net.parameters(), config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps)
    shuffler = np.random.default_rng(config.seed)
    eval_idx = np.linspace(0, n - 1, min(n, epoch_eval_size)).round().astype(int)

    history = []
    for _ in range(config.epochs):
        order = shuffler.permutation(n)
        batch_totals = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            bd, grads = grad_loss(
                composite, data[idx], targets[np.ix_(idx, idx)], config.alpha_sub, config.alpha_iso
            )
            opt.step(grads)
            net.spectral_normalize()
            batch_totals.append(bd.total)
        full = loss(
            composite, data[eval_idx], targets[np.ix_(eval_idx, eval_idx)],
            config.alpha_sub, config.alpha_iso,
        )
        tail = composite.pre_chart(data)[:, split_dim:]
        sub_exact = float(np.abs(tail).sum(-1).mean()) if tail.shape[1] else 0.0
        full = _breakdown(full.distance_term, sub_exact, full.isometry_term,
                          config.alpha_sub, config.alpha_iso)
        history.append(EpochRecord(float(np.mean(batch_totals)), full))

    return composite.to_diffeo(), history


# ---------------------------------------------------------------------------
# Estimator wrapper


class PullbackMetricLearner(BaseEstimator):
    """Learns a pullback metric on R^d from a point cloud.

    ``fit`` centres the data at ``center`` (default: the first sample),
    orients it with a local PCA frame, trains the invertible network and
    exposes the resulting geometry as ``space_``.
    """

    def __init__(self, chart_kind="identity", split_dim=1, alpha_sub=10.0, alpha_iso=0.01,
                 epochs=20, batch_size=64, lr=1e-3, seed=0, knn_k=2, pca_radius=0.5,
                 n_blocks=100, width=10, lipschitz_scale=0.8, power_iters=10, center=None):
        self.chart_kind = chart_kind
        self.split_dim = split_dim
        self.alpha_sub = alpha_sub
        self.alpha_iso = alpha_iso
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.seed = seed
        self.knn_k = knn_k
        self.pca_radius = pca_radius
        self.n_blocks = n_blocks
        self.width = width
        self.lipschitz_scale = lipschitz_scale
        self.power_iters = power_iters
        self.center = center

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        center = np.asarray(self.center, dtype=np.float64) if self.center is not None else X[0]
        orthogonal, self.pca_eigenvalues_ = local_pca_frame(X, center, self.pca_radius)
        targets, self.knn_k_ = isomap_distances_auto(X, self.knn_k)
        config = TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            alpha_sub=self.alpha_sub,
            alpha_iso=self.alpha_iso,
            seed=self.seed,
            knn_k=self.knn_k_,
            n_blocks=self.n_blocks,
            width=self.width,
            lipschitz_scale=self.lipschitz_scale,
            power_iters=self.power_iters,
        )
        self.diffeo_, self.history_ = train(
            X, config, self.chart_kind, center, orthogonal, self.split_dim, targets=targets
        )
        from .pullback import PullbackSpace

        self.space_ = PullbackSpace.of(self.diffeo_)
        return self

    def transform(self, X):
        """Images of the samples under the learned diffeomorphism."""
        X = check_array(X, dtype=np.float64)
        return np.stack([self.diffeo_.forward(x) for x in X])


# ---------------------------------------------------------------------------
# Checkpoint format


def save_checkpoint(path, phi: CompositeDiffeo, config: TrainConfig, history):
    """JSON checkpoint: hex-float weights, config echo, epoch losses."""
    doc = {
        "diffeo": json.loads(phi.to_json()),
        "config": dataclasses.asdict(config),
        "epochs": [
            {
                "mean_batch_total": rec.mean_batch_total,
                "distance_term": rec.full.distance_term,
                "subspace_term": rec.full.subspace_term,
                "isometry_term": rec.full.isometry_term,
                "total": rec.full.total,
            }
            for rec in history
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)


def load_checkpoint(path):
    with open(path) as fh:
        doc = json.load(fh)
    phi = CompositeDiffeo.from_json(json.dumps(doc["diffeo"]))
    config = TrainConfig(**doc["config"])
    history = [
        EpochRecord(
            e["mean_batch_total"],
            LossBreakdown(e["distance_term"], e["subspace_term"], e["isometry_term"], e["total"]),
        )
        for e in doc["epochs"]
    ]
    return phi, config, history
