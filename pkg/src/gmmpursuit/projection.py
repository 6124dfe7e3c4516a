"""Projection bases and their angle encoding.

A p x d basis is optimized through d blocks of p-1 angles. Each block
holds one azimuth phi in [0, 2*pi] and p-2 polar angles theta in [0, pi];
decoding maps a block to a unit vector in R^p (spherical coordinates),
so the search space is a box and every decoded column has unit norm.
Columns are made mutually orthogonal afterwards with a QR step.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError, NumericalError
from .gmm import GaussianMixture

TWO_PI = 2.0 * np.pi

BASIS_ORIGINS = ("decoded", "orthonormalized", "pca", "external")


def genome_bounds(p: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Box bounds for the angle vector: per column [0,2pi] then (p-2) x [0,pi]."""
    if d < 1 or d >= p:
        raise DataError(f"need 1 <= d < p, got d={d}, p={p}")
    block_hi = np.concatenate([[TWO_PI], np.full(p - 2, np.pi)])
    hi = np.tile(block_hi, d)
    return np.zeros(d * (p - 1)), hi


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AngleGenome:
    """Angle vector of length d*(p-1) encoding a p x d frame column by column."""

    angles: np.ndarray
    p: int
    d: int

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float).reshape(-1)
        lo, hi = genome_bounds(self.p, self.d)
        if angles.shape != lo.shape:
            raise DataError(
                f"genome length {angles.shape[0]}, expected {lo.shape[0]} for p={self.p}, d={self.d}"
            )
        if not np.all(np.isfinite(angles)):
            raise DataError("genome angles must be finite")
        if np.any(angles < lo) or np.any(angles > hi):
            raise DataError("genome angles outside the box bounds")
        object.__setattr__(self, "angles", _frozen(angles))


def random_genome(p: int, d: int, rng: np.random.Generator) -> AngleGenome:
    lo, hi = genome_bounds(p, d)
    return AngleGenome(rng.uniform(lo, hi), p, d)


@dataclass(frozen=True)
class Basis:
    """A p x d projection frame; `origin` records how it was produced."""

    matrix: np.ndarray
    origin: str = "external"

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2:
            raise DataError("basis matrix must be 2-D")
        p, d = M.shape
        if not 1 <= d < p:
            raise DataError(f"need 1 <= d < p, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise DataError("basis matrix contains non-finite values")
        if self.origin not in BASIS_ORIGINS:
            raise DataError(f"unknown basis origin {self.origin!r}")
        if self.origin == "decoded":
            norms = np.linalg.norm(M, axis=0)
            if np.max(np.abs(norms - 1.0)) > 1e-12:
                raise DataError("decoded basis columns must have unit norm")
        if self.origin in ("orthonormalized", "pca"):
            gram_err = np.max(np.abs(M.T @ M - np.eye(d)))
            if gram_err > 1e-10:
                raise DataError(f"{self.origin} basis is not orthonormal (error {gram_err:g})")
        object.__setattr__(self, "matrix", _frozen(M))

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]


def _decode_matrix(angles: np.ndarray, p: int, d: int) -> np.ndarray:
    B = np.empty((p, d))
    for j in range(d):
        block = angles[j * (p - 1) : (j + 1) * (p - 1)]
        phi = block[0]
        thetas = block[1:]
        # running sine products: S[m] = sin(theta_1) * ... * sin(theta_m)
        S = np.concatenate([[1.0], np.cumprod(np.sin(thetas))])
        col = np.empty(p)
        col[0] = S[p - 2] * np.sin(phi)
        col[1] = S[p - 2] * np.cos(phi)
        if p > 2:
            col[2:] = (S[: p - 2] * np.cos(thetas))[::-1]
        B[:, j] = col
    return B


def decode(genome: AngleGenome) -> Basis:
    """Spherical-coordinate decoding; every column has unit norm by identity."""
    return Basis(_decode_matrix(genome.angles, genome.p, genome.d), origin="decoded")


def encode_basis(matrix) -> AngleGenome:
    """Angles that decode to the given unit-norm columns (inverse of decode).

    Columns must have unit norm within 1e-8. When a trailing sine product
    vanishes the remaining angles are unidentified and set to pi/2.
    """
    M = matrix.matrix if isinstance(matrix, Basis) else np.asarray(matrix, dtype=float)
    if M.ndim != 2:
        raise DataError("expected a 2-D matrix")
    p, d = M.shape
    if not 1 <= d < p:
        raise DataError(f"need 1 <= d < p, got shape {M.shape}")
    norms = np.linalg.norm(M, axis=0)
    if np.max(np.abs(norms - 1.0)) > 1e-8:
        raise DataError("columns must have unit norm to be encoded")
    blocks = []
    for j in range(d):
        v = M[:, j]
        thetas = np.empty(p - 2)
        t = 1.0
        for i in range(1, p - 1):
            if t < 1e-300:
                thetas[i - 1] = 0.5 * np.pi
            else:
                thetas[i - 1] = np.arccos(np.clip(v[p - i] / t, -1.0, 1.0))
            t *= np.sin(thetas[i - 1])
        phi = float(np.arctan2(v[0], v[1])) % TWO_PI
        blocks.append(np.concatenate([[phi], thetas]))
    return AngleGenome(np.concatenate(blocks), p, d)


def orthonormalize(basis: Basis | np.ndarray) -> Basis:
    """Orthonormalize columns by thin QR with a sign convention.

    The sign of each column is fixed so the R diagonal is positive, which
    makes an already-orthonormal input a fixed point. Rank-deficient
    input raises NumericalError.
    """
    M = basis.matrix if isinstance(basis, Basis) else np.asarray(basis, dtype=float)
    Q, R = np.linalg.qr(M)
    diag = np.diagonal(R)
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.min(np.abs(diag)) <= 1e-10 * scale:
        raise NumericalError("basis columns are linearly dependent")
    signs = np.where(diag < 0, -1.0, 1.0)
    return Basis(Q * signs, origin="orthonormalized")


def project_mixture(model: GaussianMixture, basis: Basis) -> GaussianMixture:
    """Push a mixture through z = B^T x: same weights, means B^T mu, covs B^T Sigma B."""
    B = basis.matrix
    if B.shape[0] != model.p:
        raise DataError(f"basis has p={B.shape[0]}, model has p={model.p}")
    gram_err = float(np.max(np.abs(B.T @ B - np.eye(basis.d))))
    if gram_err > 1e-8:
        raise DataError(f"projection basis must be orthonormal (error {gram_err:g})")
    means = model.means @ B
    covs = np.einsum("pi,gpq,qj->gij", B, model.covariances, B)
    covs = 0.5 * (covs + np.swapaxes(covs, 1, 2))
    return GaussianMixture(model.weights, means, covs, parameterization=None)


def project_data(data: Dataset, basis: Basis) -> Dataset:
    if data.p != basis.p:
        raise DataError(f"basis has p={basis.p}, data has p={data.p}")
    names = tuple(f"z{j + 1}" for j in range(basis.d))
    return Dataset(data.values @ basis.matrix, names, data.labels)


def pca_basis(data: Dataset, d: int) -> Basis:
    """Leading d principal axes of the sample covariance (eigenvalue order).

    Signs are fixed so the largest-magnitude entry of each axis is
    positive. A near-tie between the d-th and (d+1)-th eigenvalues makes
    the subspace unstable and triggers a warning.
    """
    if not 1 <= d < data.p:
        raise DataError(f"need 1 <= d < p, got d={d}, p={data.p}")
    if data.n < 2:
        raise DataError("need at least 2 rows for a covariance")
    X = data.values - data.values.mean(axis=0)
    cov = (X.T @ X) / (data.n - 1)
    vals, vecs = np.linalg.eigh(cov)
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    gap = vals[d - 1] - vals[d]
    scale = max(abs(vals[0]), 1e-300)
    if gap <= 1e-8 * scale:
        warnings.warn(
            f"eigenvalue tie at the cut (gap {gap:.3g}); leading {d}-subspace is unstable",
            RuntimeWarning,
            stacklevel=2,
        )
    B = vecs[:, :d]
    for j in range(d):
        k = int(np.argmax(np.abs(B[:, j])))
        if B[k, j] < 0:
            B[:, j] = -B[:, j]
    return Basis(B, origin="pca")


def save_basis_csv(basis: Basis, path) -> None:
    """Write the matrix one data row per basis row, 17 significant digit floats."""
    lines = [",".join(f"b{j + 1}" for j in range(basis.d))]
    for row in basis.matrix:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_basis_csv(path, origin: str = "external") -> Basis:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln != ""]
    if len(lines) < 2:
        raise DataError(f"{path}: expected a header and at least one row")
    try:
        M = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return Basis(M, origin=origin)


def save_genome_csv(genome: AngleGenome, path) -> None:
    """Flat angle vector, one value per line, under a '# p=<p> d=<d>' header."""
    lines = [f"# p={genome.p} d={genome.d}"]
    for v in genome.angles:
        lines.append(f"{v:.17g}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_genome_csv(path) -> AngleGenome:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln != ""]
    m = re.match(r"^# p=(\d+) d=(\d+)$", lines[0]) if lines else None
    if m is None:
        raise DataError(f"{path}: not a genome file (missing '# p=<p> d=<d>' header)")
    try:
        angles = np.array([float(ln) for ln in lines[1:]])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return AngleGenome(angles, int(m.group(1)), int(m.group(2)))
