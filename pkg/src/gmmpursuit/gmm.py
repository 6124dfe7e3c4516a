"""Gaussian mixture densities: evaluation, EM fitting under parsimonious
covariance structures, BIC model selection, and sampling.

The six covariance codes follow the volume/shape/orientation convention:

====  ==========================================
EII   spherical, shared volume (lambda I)
VII   spherical, per-component volume
EEI   diagonal, shared across components
VVI   diagonal, per-component
EEE   full covariance, shared across components
VVV   full covariance, per-component
====  ==========================================
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset, Preprocessor
from .errors import DataError, FitError, NumericalError

LOG_2PI = float(np.log(2.0 * np.pi))

# relative eigenvalue floor for fitted covariances, times mean data variance
_COV_FLOOR = 1e-8
# a component whose responsibility mass drops below 0.1 (weight < 1/(10n)) is collapsed
_MIN_MASS = 0.1


class CovarianceModel(str, Enum):
    EII = "EII"
    VII = "VII"
    EEI = "EEI"
    VVI = "VVI"
    EEE = "EEE"
    VVV = "VVV"


ALL_MODELS: tuple[CovarianceModel, ...] = tuple(CovarianceModel)

_MODEL_ORDER = {m: i for i, m in enumerate(CovarianceModel)}


class InitStrategy(str, Enum):
    FARTHEST_POINT = "farthest_point"
    RANDOM = "random"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianMixture:
    """Finite Gaussian mixture with weights (G,), means (G, p), covariances (G, p, p).

    Construction validates shapes and finiteness, requires weights to be
    nonnegative and sum to 1 within 1e-12, symmetrizes covariances after
    checking asymmetry below 1e-12 (relative), and rejects matrices that
    are not positive definite.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    parameterization: CovarianceModel | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        means = np.asarray(self.means, dtype=float)
        if means.ndim == 1:
            means = means[None, :]
        covs = np.asarray(self.covariances, dtype=float)
        if covs.ndim == 2:
            covs = covs[None, :, :]
        if means.ndim != 2 or covs.ndim != 3:
            raise DataError("means must be (G, p) and covariances (G, p, p)")
        G, p = means.shape
        if w.shape != (G,) or covs.shape != (G, p, p):
            raise DataError(
                f"inconsistent shapes: weights {w.shape}, means {means.shape}, "
                f"covariances {covs.shape}"
            )
        for name, arr in (("weights", w), ("means", means), ("covariances", covs)):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name} contain non-finite values")
        if np.any(w < 0):
            raise DataError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise DataError(f"weights sum to {w.sum()!r}, expected 1 within 1e-12")
        scale = max(1.0, float(np.max(np.abs(covs))))
        asym = float(np.max(np.abs(covs - np.swapaxes(covs, 1, 2))))
        if asym > 1e-12 * scale:
            raise DataError(f"covariances are asymmetric (max deviation {asym:g})")
        covs = 0.5 * (covs + np.swapaxes(covs, 1, 2))
        try:
            np.linalg.cholesky(covs)
        except np.linalg.LinAlgError:
            raise NumericalError("covariances must be positive definite") from None
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "covariances", _frozen(covs))

    @property
    def G(self) -> int:
        return self.weights.shape[0]

    @property
    def p(self) -> int:
        return self.means.shape[1]


def _chol_set(covs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factors (G, p, p) and log determinants (G,) of stacked covariances."""
    try:
        L = np.linalg.cholesky(covs)
    except np.linalg.LinAlgError:
        raise NumericalError("covariance matrix is not positive definite") from None
    logdets = 2.0 * np.sum(np.log(np.diagonal(L, axis1=-2, axis2=-1)), axis=-1)
    return L, logdets


def _prec_set(covs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse Cholesky factors (G, p, p) and log determinants of stacked covariances."""
    L, logdets = _chol_set(covs)
    return np.linalg.inv(L), logdets


def _log_weights(w: np.ndarray) -> np.ndarray:
    out = np.full(w.shape, -np.inf)
    pos = w > 0
    out[pos] = np.log(w[pos])
    return out


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    """Row-wise log(sum(exp)), tolerating -inf entries and all -inf rows."""
    m = np.max(a, axis=1)
    out = np.full(a.shape[0], -np.inf)
    ok = np.isfinite(m)
    if np.any(ok):
        shifted = np.exp(a[ok] - m[ok, None])
        out[ok] = m[ok] + np.log(np.sum(shifted, axis=1))
    return out


def _component_log_density(
    X: np.ndarray, means: np.ndarray, prec_chols: np.ndarray, logdets: np.ndarray
) -> np.ndarray:
    """Per-component Gaussian log densities, shape (n, G).

    `prec_chols` holds inv(L_g) for the Cholesky factors L_g, so the
    Mahalanobis part is a batched matrix product. Large batches are
    processed in chunks to bound the (G, n, p) temporaries.
    """
    n, p = X.shape
    G = means.shape[0]
    chunk = max(1, 4_000_000 // max(1, G * p))
    if n > chunk:
        out = np.empty((n, G))
        for start in range(0, n, chunk):
            stop = min(n, start + chunk)
            out[start:stop] = _component_log_density(X[start:stop], means, prec_chols, logdets)
        return out
    diffs = X[None, :, :] - means[:, None, :]
    sol = diffs @ np.swapaxes(prec_chols, 1, 2)
    maha = np.einsum("gnp,gnp->gn", sol, sol)
    return (-0.5 * (p * LOG_2PI + logdets[:, None] + maha)).T


def _rows(p: int, x) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != p:
        raise DataError(f"points must have {p} coordinates, got shape {np.shape(x)}")
    if not np.all(np.isfinite(X)):
        raise DataError("points contain non-finite values")
    return X, single


def log_density(model: GaussianMixture, x):
    """log f(x) for one point (p,) or a batch (n, p); stable log-sum-exp over components."""
    X, single = _rows(model.p, x)
    Linv, logdets = _prec_set(model.covariances)
    lp = _component_log_density(X, model.means, Linv, logdets) + _log_weights(model.weights)
    out = _logsumexp_rows(lp)
    return float(out[0]) if single else out


def responsibilities(model: GaussianMixture, x) -> np.ndarray:
    """Posterior component probabilities, shape (n, G); rows sum to 1."""
    X, single = _rows(model.p, x)
    Linv, logdets = _prec_set(model.covariances)
    lp = _component_log_density(X, model.means, Linv, logdets) + _log_weights(model.weights)
    r = np.exp(lp - _logsumexp_rows(lp)[:, None])
    return r[0] if single else r


def gradient_density(model: GaussianMixture, x) -> np.ndarray:
    """Gradient of the mixture density f (not log f) at a single point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (model.p,):
        raise DataError(f"point must have {model.p} coordinates")
    Linv, logdets = _prec_set(model.covariances)
    lp = _component_log_density(x[None], model.means, Linv, logdets)[0]
    grad = np.zeros(model.p)
    for g in range(model.G):
        wg = model.weights[g]
        if wg == 0.0:
            continue
        diff = model.means[g] - x
        y = Linv[g].T @ (Linv[g] @ diff)
        grad += wg * np.exp(lp[g]) * y
    return grad


def mixture_moments(model: GaussianMixture) -> tuple[np.ndarray, np.ndarray]:
    """Overall mean and covariance of the mixture.

    cov = sum_g w_g Sigma_g + sum_g w_g (mu_g - mu)(mu_g - mu)^T, then
    symmetrized; for a single component this returns that component's
    parameters bit for bit.
    """
    w = model.weights
    mean = w @ model.means
    diffs = model.means - mean
    cov = np.einsum("g,gpq->pq", w, model.covariances) + np.einsum(
        "g,gp,gq->pq", w, diffs, diffs
    )
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def sample(model: GaussianMixture, n: int, seed: int) -> Dataset:
    """Ancestral sampling: component index from the weights, then the Gaussian draw."""
    if n < 1:
        raise DataError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    X, comp = _sample_arrays(model, n, rng)
    names = tuple(f"x{j + 1}" for j in range(model.p))
    labels = tuple(str(c + 1) for c in comp)
    return Dataset(X, names, labels)


def _sample_arrays(
    model: GaussianMixture, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    comp = rng.choice(model.G, size=n, p=model.weights)
    Z = rng.standard_normal((n, model.p))
    L, _ = _chol_set(model.covariances)
    X = np.empty((n, model.p))
    for g in range(model.G):
        mask = comp == g
        if np.any(mask):
            X[mask] = model.means[g] + Z[mask] @ L[g].T
    return X, comp


def n_params(model: CovarianceModel, G: int, p: int) -> int:
    """Free parameters: G-1 weights, G*p means, plus the covariance count."""
    model = CovarianceModel(model)
    if G < 1 or p < 1:
        raise DataError("G and p must be positive")
    cov = {
        CovarianceModel.EII: 1,
        CovarianceModel.VII: G,
        CovarianceModel.EEI: p,
        CovarianceModel.VVI: G * p,
        CovarianceModel.EEE: p * (p + 1) // 2,
        CovarianceModel.VVV: G * p * (p + 1) // 2,
    }[model]
    return (G - 1) + G * p + cov


def bic_value(loglik: float, k: int, n: int) -> float:
    """BIC on the maximize-me convention: 2 loglik - k log n."""
    return 2.0 * loglik - k * float(np.log(n))


@dataclass(frozen=True)
class FitReport:
    """One EM fit: the model plus likelihood, BIC, and convergence info."""

    model: GaussianMixture
    loglik: float
    n_params: int
    bic: float
    iterations: int
    converged: bool
    loglik_trace: tuple[float, ...]


def _init_centers(
    X: np.ndarray, G: int, rng: np.random.Generator, strategy: InitStrategy
) -> np.ndarray:
    n = X.shape[0]
    if strategy == InitStrategy.RANDOM:
        return rng.choice(n, size=G, replace=False)
    first = int(rng.integers(n))
    idx = [first]
    d2 = np.sum((X - X[first]) ** 2, axis=1)
    while len(idx) < G:
        nxt = int(np.argmax(d2))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return np.array(idx)


def _floor_full(cov: np.ndarray, floor: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] >= floor:
        return cov
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T


_DIAGONAL_MODELS = (
    CovarianceModel.EII,
    CovarianceModel.VII,
    CovarianceModel.EEI,
    CovarianceModel.VVI,
)


def _weighted_stats(X: np.ndarray, R: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Component masses, weights, means; raises when a component starves."""
    n = X.shape[0]
    N = R.sum(axis=0)
    if np.any(N < _MIN_MASS):
        g = int(np.argmin(N))
        raise FitError(f"component {g + 1} collapsed (mass {N[g]:.3g} of {n} points)")
    return N, N / n, (R.T @ X) / N[:, None]


def _m_step_diag(
    X: np.ndarray, Xsq: np.ndarray, R: np.ndarray, model: CovarianceModel, floor: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Update for the spherical/diagonal families; covariances kept as (G, p) diagonals.

    X must be centered by the caller, which keeps the E[x^2] - m^2
    scatter form well conditioned; Xsq = X*X is precomputed once.
    """
    n, p = X.shape
    G = R.shape[1]
    N, w, means = _weighted_stats(X, R)
    # per-component diagonal scatter: sum_i r_ig x_ij^2 - N_g m_gj^2
    dsq = np.maximum(R.T @ Xsq - N[:, None] * means * means, 0.0)
    if model == CovarianceModel.EII:
        lam = max(float(dsq.sum()) / (n * p), floor)
        dvar = np.full((G, p), lam)
    elif model == CovarianceModel.VII:
        lam = np.maximum(dsq.sum(axis=1) / (N * p), floor)
        dvar = np.broadcast_to(lam[:, None], (G, p)).copy()
    elif model == CovarianceModel.EEI:
        v = np.maximum(dsq.sum(axis=0) / n, floor)
        dvar = np.broadcast_to(v, (G, p)).copy()
    else:
        dvar = np.maximum(dsq / N[:, None], floor)
    return w, means, dvar


def _m_step_full(
    X: np.ndarray, XtX: np.ndarray, R: np.ndarray, model: CovarianceModel, floor: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Update for the full-covariance families (shared or per-component)."""
    n, p = X.shape
    G = R.shape[1]
    N, w, means = _weighted_stats(X, R)
    if model == CovarianceModel.EEE:
        W = (XtX - np.einsum("g,gp,gq->pq", N, means, means)) / n
        W = _floor_full(0.5 * (W + W.T), floor)
        covs = np.broadcast_to(W, (G, p, p)).copy()
    else:
        covs = np.empty((G, p, p))
        for g in range(G):
            Wg = (X * R[:, g : g + 1]).T @ X - N[g] * np.outer(means[g], means[g])
            covs[g] = _floor_full(0.5 * (Wg + Wg.T) / N[g], floor)
    return w, means, covs


def _diag_log_density(
    X: np.ndarray, Xsq: np.ndarray, means: np.ndarray, dvar: np.ndarray
) -> np.ndarray:
    """Per-component log densities for diagonal covariances, (n, G).

    Expands the quadratic form so the whole E-step is two matrix
    products; no factorizations needed.
    """
    p = X.shape[1]
    iv = 1.0 / dvar
    miv = means * iv
    maha = Xsq @ iv.T - 2.0 * (X @ miv.T) + np.sum(means * miv, axis=1)[None, :]
    logdets = np.sum(np.log(dvar), axis=1)
    return -0.5 * (p * LOG_2PI + logdets[None, :] + maha)


def _em_once(
    X: np.ndarray,
    G: int,
    model: CovarianceModel,
    rng: np.random.Generator,
    init: InitStrategy,
    max_iter: int,
    tol: float,
    floor: float,
) -> FitReport:
    n, p = X.shape
    diagonal = model in _DIAGONAL_MODELS
    # EM is shift invariant; centering keeps the scatter updates stable
    shift = X.mean(axis=0)
    X = X - shift
    Xsq = X * X
    XtX = None if diagonal else X.T @ X
    centers = X[_init_centers(X, G, rng, init)]
    d2 = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    assign = np.argmin(d2, axis=1)
    R = np.zeros((n, G))
    R[np.arange(n), assign] = 1.0
    if diagonal:
        w, means, dvar = _m_step_diag(X, Xsq, R, model, floor)
    else:
        w, means, covs = _m_step_full(X, XtX, R, model, floor)
    trace: list[float] = []
    converged = False
    for _ in range(max_iter):
        if diagonal:
            lp = _diag_log_density(X, Xsq, means, dvar) + _log_weights(w)
        else:
            Linv, logdets = _prec_set(covs)
            lp = _component_log_density(X, means, Linv, logdets) + _log_weights(w)
        lse = _logsumexp_rows(lp)
        trace.append(float(lse.sum()))
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) <= tol * max(1.0, abs(trace[-1])):
            converged = True
            break
        R = np.exp(lp - lse[:, None])
        if diagonal:
            w, means, dvar = _m_step_diag(X, Xsq, R, model, floor)
        else:
            w, means, covs = _m_step_full(X, XtX, R, model, floor)
    if diagonal:
        covs = np.zeros((G, p, p))
        covs[:, np.arange(p), np.arange(p)] = dvar
    mix = GaussianMixture(w, means + shift, covs, parameterization=model)
    k = n_params(model, G, p)
    return FitReport(
        model=mix,
        loglik=trace[-1],
        n_params=k,
        bic=bic_value(trace[-1], k, n),
        iterations=len(trace),
        converged=converged,
        loglik_trace=tuple(trace),
    )


def em_fit(
    data,
    G: int,
    model: CovarianceModel,
    init: InitStrategy = InitStrategy.FARTHEST_POINT,
    seed: int = 0,
    max_iter: int = 1000,
    tol: float = 1e-8,
    n_restarts: int = 5,
) -> FitReport:
    """Fit a G-component mixture by EM, keeping the best of several restarts.

    Initialization picks centers (farthest-point walk by default), hard
    assigns, and starts from the resulting M-step. Convergence is
    declared when the relative log likelihood change drops below `tol`.
    Restarts that collapse a component are discarded; if all fail the
    aggregate error is raised as FitError.
    """
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise DataError("data must be a 2-D matrix or Dataset")
    n, p = X.shape
    model = CovarianceModel(model)
    init = InitStrategy(init)
    if G < 1:
        raise DataError(f"G must be positive, got {G}")
    if n <= G:
        raise DataError(f"need more observations ({n}) than components ({G})")
    if max_iter < 1 or tol <= 0 or n_restarts < 1:
        raise DataError("max_iter, tol and n_restarts must be positive")
    floor = _COV_FLOOR * float(np.mean(np.var(X, axis=0)))
    best: FitReport | None = None
    failures: list[str] = []
    for r in range(n_restarts):
        rng = np.random.default_rng([seed, r])
        try:
            rep = _em_once(X, G, model, rng, init, max_iter, tol, floor)
        except (FitError, NumericalError) as exc:
            failures.append(f"restart {r}: {exc}")
            continue
        if best is None or rep.loglik > best.loglik:
            best = rep
    if best is None:
        raise FitError(
            f"all {n_restarts} restarts failed for G={G} {model.value}: "
            + "; ".join(failures)
        )
    return best


@dataclass(frozen=True)
class GridEntry:
    """One cell of the (G, covariance model) search grid."""

    G: int
    model: CovarianceModel
    report: FitReport | None
    error: str | None


def _derived_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])


def fit_grid(
    data,
    G_range: Iterable[int] = range(1, 10),
    models: Sequence[CovarianceModel] = ALL_MODELS,
    seed: int = 0,
    threads: int = 1,
    **em_kwargs,
) -> list[GridEntry]:
    """Fit every (G, model) combination; failures are recorded, not raised.

    Each cell gets a seed derived from (seed, G, model index), so cells
    are independent and the grid is reproducible regardless of order or
    thread count.
    """
    models = [CovarianceModel(m) for m in models]
    combos = [(int(G), m) for G in G_range for m in models]
    if not combos:
        raise DataError("empty model grid")

    def run(combo: tuple[int, CovarianceModel]) -> GridEntry:
        G, m = combo
        cell_seed = _derived_seed(seed, G, _MODEL_ORDER[m])
        try:
            rep = em_fit(data, G, m, seed=cell_seed, **em_kwargs)
            return GridEntry(G, m, rep, None)
        except (DataError, FitError, NumericalError) as exc:
            return GridEntry(G, m, None, str(exc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, combos))
    return [run(c) for c in combos]


def _better(a: FitReport, b: FitReport) -> bool:
    if a.bic != b.bic:
        return a.bic > b.bic
    if a.n_params != b.n_params:
        return a.n_params < b.n_params
    if a.model.G != b.model.G:
        return a.model.G < b.model.G
    return _MODEL_ORDER[a.model.parameterization] < _MODEL_ORDER[b.model.parameterization]


def select_model(
    data,
    G_range: Iterable[int] = range(1, 10),
    models: Sequence[CovarianceModel] = ALL_MODELS,
    seed: int = 0,
    threads: int = 1,
    **em_kwargs,
) -> FitReport:
    """Highest-BIC fit over the grid; ties prefer fewer parameters, then smaller G."""
    entries = fit_grid(data, G_range, models, seed, threads, **em_kwargs)
    best: FitReport | None = None
    for e in entries:
        if e.report is None:
            continue
        if best is None or _better(e.report, best):
            best = e.report
    if best is None:
        msgs = "; ".join(f"G={e.G} {e.model.value}: {e.error}" for e in entries)
        raise FitError(f"every grid cell failed: {msgs}")
    return best


def model_to_json(
    model: GaussianMixture,
    preprocessor: Preprocessor | None = None,
    feature_names: Sequence[str] | None = None,
) -> dict:
    """JSON-ready dict; float values survive a round trip bit for bit."""
    doc = {
        "schema_version": 1,
        "type": "gaussian_mixture",
        "G": model.G,
        "p": model.p,
        "parameterization": model.parameterization.value if model.parameterization else None,
        "weights": [float(v) for v in model.weights],
        "means": [[float(v) for v in row] for row in model.means],
        "covariances": [[float(v) for v in c.reshape(-1)] for c in model.covariances],
        "preprocessing": None,
        "feature_names": list(feature_names) if feature_names is not None else None,
    }
    if preprocessor is not None:
        doc["preprocessing"] = {
            "mode": preprocessor.mode,
            "mu": [float(v) for v in preprocessor.mu],
            "s": [float(v) for v in preprocessor.s],
        }
    return doc


def model_from_json(doc: dict) -> tuple[GaussianMixture, Preprocessor | None, list[str] | None]:
    """Inverse of model_to_json. Raises DataError on malformed documents."""
    try:
        if doc.get("type") != "gaussian_mixture":
            raise DataError(f"not a mixture document (type={doc.get('type')!r})")
        G = int(doc["G"])
        p = int(doc["p"])
        weights = np.asarray(doc["weights"], dtype=float)
        means = np.asarray(doc["means"], dtype=float)
        covs = np.asarray(
            [np.asarray(c, dtype=float).reshape(p, p) for c in doc["covariances"]]
        )
        param = doc.get("parameterization")
        model = GaussianMixture(
            weights,
            means,
            covs,
            parameterization=CovarianceModel(param) if param else None,
        )
        if model.G != G or model.p != p:
            raise DataError("declared G/p do not match the arrays")
        pre = None
        if doc.get("preprocessing"):
            block = doc["preprocessing"]
            pre = Preprocessor(mode=block["mode"], mu=block["mu"], s=block["s"])
        names = doc.get("feature_names")
        return model, pre, list(names) if names is not None else None
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model document: {exc}") from None
