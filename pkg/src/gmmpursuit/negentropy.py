"""Entropy and negentropy of Gaussian mixtures.

Negentropy of a random vector z with density f is

    J(z) = h(gauss with cov(z)) - h(z),

nonnegative and zero exactly for a Gaussian. The mixture entropy h(z)
has no closed form, so four estimators are provided:

mc    plain Monte Carlo average of -log f over draws from f
ut    deterministic sigma-point average of -log f (2*d points per component)
var   pairwise-KL upper bound on the entropy
sote  second order Taylor expansion of log f around the component means
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DataError, NumericalError
from .gmm import (
    LOG_2PI,
    GaussianMixture,
    _component_log_density,
    _log_weights,
    _logsumexp_rows,
    _prec_set,
    _sample_arrays,
    log_density,
    mixture_moments,
)

ESTIMATOR_KINDS = ("mc", "ut", "var", "sote")

# below this log density a Taylor expansion point is useless
_LOG_DENSITY_FLOOR = float(np.log(np.finfo(float).tiny))


@dataclass(frozen=True)
class EstimatorKind:
    """Which entropy estimator to use; MC carries its sample budget and seed."""

    kind: str
    mc_samples: int = 100_000
    mc_seed: int = 0

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise DataError(f"unknown estimator {self.kind!r}, expected one of {ESTIMATOR_KINDS}")
        if self.mc_samples < 2:
            raise DataError("mc_samples must be at least 2")

    @classmethod
    def mc(cls, samples: int = 100_000, seed: int = 0) -> "EstimatorKind":
        return cls("mc", mc_samples=samples, mc_seed=seed)

    @classmethod
    def ut(cls) -> "EstimatorKind":
        return cls("ut")

    @classmethod
    def var(cls) -> "EstimatorKind":
        return cls("var")

    @classmethod
    def sote(cls) -> "EstimatorKind":
        return cls("sote")


@dataclass(frozen=True)
class NegentropyEstimate:
    """Entropy estimate plus the Gaussian reference entropy and their difference."""

    kind: EstimatorKind
    entropy: float
    gaussian_entropy: float
    negentropy: float
    mc_std_error: float | None = None


def gaussian_entropy(cov) -> float:
    """Closed form 0.5 * log((2 pi e)^d det Sigma) for a PD covariance."""
    C = np.atleast_2d(np.asarray(cov, dtype=float))
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DataError(f"covariance must be square, got shape {C.shape}")
    scale = max(1.0, float(np.max(np.abs(C))))
    if float(np.max(np.abs(C - C.T))) > 1e-8 * scale:
        raise DataError("covariance must be symmetric")
    d = C.shape[0]
    try:
        L = np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise NumericalError("covariance is not positive definite") from None
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return 0.5 * (d * (LOG_2PI + 1.0) + logdet)


def entropy_mc(model: GaussianMixture, n_samples: int = 100_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo entropy: mean of -log f over draws from f, with its standard error."""
    if n_samples < 2:
        raise DataError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    X, _ = _sample_arrays(model, n_samples, rng)
    neg_logf = -log_density(model, X)
    h = float(np.mean(neg_logf))
    se = float(np.std(neg_logf, ddof=1) / np.sqrt(n_samples))
    return h, se


def sigma_points(mean, cov) -> np.ndarray:
    """2d deterministic points mean +- sqrt(d lambda_k) u_k from the eigenpairs of cov.

    The points match the Gaussian's mean and covariance exactly (with
    divisor 2d), which is what makes the quadrature below exact for a
    single Gaussian in the zero-negentropy sense.
    """
    mean = np.asarray(mean, dtype=float).reshape(-1)
    C = np.atleast_2d(np.asarray(cov, dtype=float))
    d = mean.shape[0]
    if C.shape != (d, d):
        raise DataError(f"cov shape {C.shape} does not match mean length {d}")
    vals, vecs = np.linalg.eigh(C)
    if vals[0] <= 0:
        raise NumericalError("covariance is not positive definite")
    axes = (vecs * np.sqrt(d * vals)).T
    return np.vstack([mean + axes, mean - axes])


def entropy_ut(model: GaussianMixture) -> float:
    """Sigma-point quadrature: h = -(1/2d) sum_g w_g sum_k log f(point_gk)."""
    d = model.p
    pts = np.vstack(
        [sigma_points(model.means[g], model.covariances[g]) for g in range(model.G)]
    )
    lf = np.asarray(log_density(model, pts)).reshape(model.G, 2 * d)
    return float(-(model.weights @ lf.sum(axis=1)) / (2 * d))


def kl_gaussian(mean0, cov0, mean1, cov1) -> float:
    """KL divergence between two Gaussians, closed form, identical inputs give 0."""
    m0 = np.asarray(mean0, dtype=float).reshape(-1)
    m1 = np.asarray(mean1, dtype=float).reshape(-1)
    C0 = np.atleast_2d(np.asarray(cov0, dtype=float))
    C1 = np.atleast_2d(np.asarray(cov1, dtype=float))
    d = m0.shape[0]
    if m1.shape != (d,) or C0.shape != (d, d) or C1.shape != (d, d):
        raise DataError("mean/covariance dimensions do not match")
    try:
        L0 = np.linalg.cholesky(C0)
        L1 = np.linalg.cholesky(C1)
    except np.linalg.LinAlgError:
        raise NumericalError("covariances must be positive definite") from None
    A = solve_triangular(L1, L0, lower=True, check_finite=False)
    tr = float(np.sum(A * A))
    u = solve_triangular(L1, m1 - m0, lower=True, check_finite=False)
    maha = float(u @ u)
    logdet0 = 2.0 * float(np.sum(np.log(np.diag(L0))))
    logdet1 = 2.0 * float(np.sum(np.log(np.diag(L1))))
    return 0.5 * (tr + maha - d + logdet1 - logdet0)


def entropy_var(model: GaussianMixture) -> float:
    """Pairwise-KL entropy bound.

    h = sum_g w_g h(comp_g) - sum_g w_g log sum_l w_l exp(-KL(g, l)).
    Each self term KL(g, g) is exactly zero by construction, so a one
    component mixture returns its component entropy bitwise. The bound
    never undershoots the true entropy.
    """
    G = model.G
    h_comp = np.array([gaussian_entropy(c) for c in model.covariances])
    D = np.zeros((G, G))
    for g in range(G):
        for l in range(G):
            if l == g:
                continue
            D[g, l] = kl_gaussian(
                model.means[g], model.covariances[g], model.means[l], model.covariances[l]
            )
    inner = _logsumexp_rows(_log_weights(model.weights)[None, :] - D)
    return float(model.weights @ h_comp - model.weights @ inner)


def hessian_logf(model: GaussianMixture, x) -> np.ndarray:
    """Hessian of log f at a point, via the responsibility-weighted identity

        H = sum_g r_g [y_g y_g^T - inv(Sigma_g)] - s s^T,
        y_g = inv(Sigma_g)(mu_g - x),   s = sum_g r_g y_g,

    where r_g are the posterior component probabilities at x. Raises
    NumericalError when f(x) underflows (no usable expansion point).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (model.p,):
        raise DataError(f"point must have {model.p} coordinates")
    Linv, logdets = _prec_set(model.covariances)
    lp = _component_log_density(x[None], model.means, Linv, logdets)[0] + _log_weights(
        model.weights
    )
    logf = float(_logsumexp_rows(lp[None])[0])
    if logf < _LOG_DENSITY_FLOOR:
        raise NumericalError(f"mixture density underflows at the expansion point (log f = {logf:.1f})")
    r = np.exp(lp - logf)
    d = model.p
    M = np.zeros((d, d))
    s = np.zeros(d)
    for g in range(model.G):
        if r[g] == 0.0:
            continue
        y = Linv[g].T @ (Linv[g] @ (model.means[g] - x))
        P = Linv[g].T @ Linv[g]
        M += r[g] * (np.outer(y, y) - 0.5 * (P + P.T))
        s += r[g] * y
    return M - np.outer(s, s)


def entropy_sote(model: GaussianMixture) -> float:
    """Second order Taylor estimate around the component means.

    h0 = -sum_g w_g log f(mu_g) is corrected by the curvature of log f:
    h = h0 - sum_g (w_g / 2) sum_ij H(mu_g)_ij Sigma_g_ij.
    """
    h0 = 0.0
    corr = 0.0
    for g in range(model.G):
        wg = float(model.weights[g])
        if wg == 0.0:
            continue
        mu = model.means[g]
        h0 -= wg * log_density(model, mu)
        H = hessian_logf(model, mu)
        corr += 0.5 * wg * float(np.sum(H * model.covariances[g]))
    return h0 - corr


def negentropy(model: GaussianMixture, kind: EstimatorKind) -> NegentropyEstimate:
    """Negentropy J = h_gauss - h_est with the requested entropy estimator."""
    if not isinstance(kind, EstimatorKind):
        kind = EstimatorKind(str(kind))
    _, cov_z = mixture_moments(model)
    h_gauss = gaussian_entropy(cov_z)
    se = None
    if kind.kind == "mc":
        h, se = entropy_mc(model, kind.mc_samples, kind.mc_seed)
    elif kind.kind == "ut":
        h = entropy_ut(model)
    elif kind.kind == "var":
        h = entropy_var(model)
    else:
        h = entropy_sote(model)
    return NegentropyEstimate(
        kind=kind,
        entropy=h,
        gaussian_entropy=h_gauss,
        negentropy=h_gauss - h,
        mc_std_error=se,
    )
