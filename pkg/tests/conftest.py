import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def fd_pushforward(phi, x, v, h=1e-5):
    """Central-difference directional derivative of phi.forward."""
    return (phi.forward(x + h * v) - phi.forward(x - h * v)) / (2.0 * h)


def random_sphere_point(rng, n):
    p = rng.standard_normal(n + 1)
    return p / np.linalg.norm(p)


def random_sphere_tangent(rng, p, scale=1.0):
    v = rng.standard_normal(p.shape[0])
    v = v - np.dot(v, p) * p
    return scale * v


def random_hyperboloid_point(rng, n, spread=1.0):
    x = spread * rng.standard_normal(n)
    return np.concatenate([x, [np.sqrt(np.dot(x, x) + 1.0)]])


def random_hyperboloid_tangent(rng, p, scale=1.0):
    v = rng.standard_normal(p.shape[0])
    mink = np.dot(v[:-1], p[:-1]) - v[-1] * p[-1]
    v = v + mink * p
    return scale * v
