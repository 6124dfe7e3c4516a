"""Diagnostics: Monte Carlo ground truth, subspace geometry, feature screening,
and side-by-side comparison of the negentropy estimators."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import DataError, NumericalError
from .ga import GAConfig, run_pursuit
from .gmm import GaussianMixture, _derived_seed
from .negentropy import EstimatorKind, negentropy
from .projection import Basis, pca_basis, project_mixture

# seed offsets keep the three searches independent but reproducible
_ESTIMATOR_OFFSET = {"ut": 1, "var": 2, "sote": 3}


def mc_negentropy_of_basis(
    model: GaussianMixture,
    basis: Basis,
    n_samples: int = 100_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo negentropy of the projected mixture and the MC standard error."""
    est = negentropy(project_mixture(model, basis), EstimatorKind.mc(n_samples, seed))
    return est.negentropy, float(est.mc_std_error)


def relative_accuracy(j_estimated: float, j_mc: float) -> float:
    """Ratio J_est / J_mc; 1 means the cheap estimator matched the MC truth."""
    if j_mc == 0.0:
        raise DataError("relative accuracy is undefined when the MC negentropy is zero")
    return j_estimated / j_mc


def subspace_distance(basis1: Basis, basis2: Basis) -> tuple[float, float]:
    """Largest principal angle between two spans.

    Returns (delta, degrees) where delta is the spectral norm of the
    difference of orthogonal projectors, equal to the sine of the largest
    principal angle. Identical spans give 0, orthogonal spans 90 degrees,
    and the value only depends on the spans, not the chosen columns.
    """
    if basis1.p != basis2.p or basis1.d != basis2.d:
        raise DataError(
            f"bases must share p and d, got ({basis1.p},{basis1.d}) and ({basis2.p},{basis2.d})"
        )

    def projector(b: Basis) -> np.ndarray:
        M = b.matrix
        if b.origin in ("orthonormalized", "pca"):
            return M @ M.T
        gram = M.T @ M
        try:
            sol = np.linalg.solve(gram, M.T)
        except np.linalg.LinAlgError:
            raise NumericalError("basis is rank deficient") from None
        return M @ sol

    diff = projector(basis1) - projector(basis2)
    delta = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.T)))))
    delta = min(max(delta, 0.0), 1.0)
    return delta, float(np.degrees(np.arcsin(delta)))


def screen_features(model: GaussianMixture) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature separation of a 2-component diagonal mixture.

    Returns (signal, snr) with signal_j = mu_1j - mu_2j and
    snr_j = |signal_j| / (sd_1j + sd_2j), a volcano-style screen for
    wide data where only marginal evidence is trustworthy.
    """
    if model.G != 2:
        raise DataError(f"feature screening needs exactly 2 components, got {model.G}")
    covs = model.covariances
    off = covs - np.stack([np.diag(np.diag(c)) for c in covs])
    scale = max(1.0, float(np.max(np.abs(covs))))
    if float(np.max(np.abs(off))) > 1e-8 * scale:
        raise DataError("feature screening needs diagonal covariances")
    signal = model.means[0] - model.means[1]
    sd = np.sqrt(np.stack([np.diag(c) for c in covs]))
    snr = np.abs(signal) / (sd[0] + sd[1])
    return signal, snr


@dataclass(frozen=True)
class ComparisonReport:
    """Negentropy estimators run side by side on one model.

    For each estimator: the search's own objective value, the MC
    negentropy of its chosen basis (the common yardstick), and their
    ratio (None when undefined). `angles_degrees` holds the pairwise
    largest principal angles between the chosen subspaces, PCA included
    when data was supplied.
    """

    estimators: tuple[str, ...]
    negentropy: dict
    mc_negentropy: dict
    mc_std_error: dict
    relative_accuracy: dict
    angle_labels: tuple[str, ...]
    angles_degrees: np.ndarray
    bases: dict
    failures: dict

    def to_json_dict(self) -> dict:
        return {
            "estimators": list(self.estimators),
            "negentropy": dict(self.negentropy),
            "mc_negentropy": dict(self.mc_negentropy),
            "mc_std_error": dict(self.mc_std_error),
            "relative_accuracy": dict(self.relative_accuracy),
            "angle_labels": list(self.angle_labels),
            "angles_degrees": [[float(v) for v in row] for row in self.angles_degrees],
            "failures": dict(self.failures),
        }


def compare_estimators(
    model: GaussianMixture,
    d: int,
    config: GAConfig = GAConfig(),
    seed: int = 0,
    mc_samples: int = 100_000,
    data: Dataset | None = None,
    estimators: tuple[str, ...] = ("ut", "var", "sote"),
    threads: int = 1,
) -> ComparisonReport:
    """Run one genetic search per estimator and judge each by MC negentropy.

    Searches get seeds seed+1, seed+2, seed+3 (ut, var, sote); the MC
    yardstick shares one derived seed so bases are compared on the same
    draw. A PCA basis joins the comparison when `data` is given. An
    estimator that fails is recorded under `failures` and skipped.
    """
    for e in estimators:
        if e not in _ESTIMATOR_OFFSET:
            raise DataError(f"unknown estimator {e!r} (choose from ut, var, sote)")
    mc_seed = _derived_seed(seed, 0)
    J: dict = {}
    Jmc: dict = {}
    Jse: dict = {}
    rel: dict = {}
    bases: dict = {}
    failures: dict = {}
    for e in estimators:
        cfg = replace(config, seed=seed + _ESTIMATOR_OFFSET[e])
        try:
            res = run_pursuit(model, d, EstimatorKind(e), cfg, threads=threads)
        except Exception as exc:  # a failed search must not sink the others
            failures[e] = str(exc)
            continue
        bases[e] = res.best_basis
        J[e] = res.best_fitness
        jmc, se = mc_negentropy_of_basis(model, bases[e], mc_samples, mc_seed)
        Jmc[e] = jmc
        Jse[e] = se
        rel[e] = None if (model.G == 1 or jmc == 0.0) else relative_accuracy(J[e], jmc)
    if data is not None:
        bases["pca"] = pca_basis(data, d)
        jmc, se = mc_negentropy_of_basis(model, bases["pca"], mc_samples, mc_seed)
        Jmc["pca"] = jmc
        Jse["pca"] = se
    labels = tuple(k for k in (*estimators, "pca") if k in bases)
    m = len(labels)
    angles = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            _, deg = subspace_distance(bases[labels[i]], bases[labels[j]])
            angles[i, j] = angles[j, i] = deg
    return ComparisonReport(
        estimators=tuple(e for e in estimators if e in bases),
        negentropy=J,
        mc_negentropy=Jmc,
        mc_std_error=Jse,
        relative_accuracy=rel,
        angle_labels=labels,
        angles_degrees=angles,
        bases=bases,
        failures=failures,
    )
