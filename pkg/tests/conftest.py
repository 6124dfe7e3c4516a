"""Shared helpers: random model factories and independent numerical oracles.

The oracles deliberately avoid the library's own code paths (direct
density summation, finite differences) so tests compare two routes to
the same quantity.
"""

import numpy as np
import pytest

from gmmpursuit.gmm import GaussianMixture


def random_covariance(rng, d, scale=1.0):
    A = rng.normal(size=(d, d))
    return scale * (A @ A.T + (0.5 + rng.random()) * np.eye(d))


def random_mixture(rng, G, d, spread=3.0, scale=1.0) -> GaussianMixture:
    w = rng.random(G) + 0.2
    w = w / w.sum()
    means = rng.normal(scale=spread, size=(G, d))
    covs = np.array([random_covariance(rng, d, scale) for _ in range(G)])
    return GaussianMixture(w, means, covs)


def direct_log_density(model: GaussianMixture, x) -> float:
    """Plain-sum mixture density via determinants and inverses, then one log."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for w, m, c in zip(model.weights, model.means, model.covariances):
        d = m.shape[0]
        diff = x - m
        inv = np.linalg.inv(c)
        det = np.linalg.det(c)
        q = float(diff @ inv @ diff)
        total += w * np.exp(-0.5 * q) / np.sqrt((2.0 * np.pi) ** d * det)
    return float(np.log(total))


def fd_gradient(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def fd_hessian(f, x, h=1e-4):
    """Central second differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        H[i, i] = (f(x + ei) - 2.0 * f(x) + f(x - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h**2)
    return H


@pytest.fixture
def rng():
    return np.random.default_rng(20260817)
