"""Datasets, CSV round trips, preprocessing, and simulated generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

N_WAVEFORM_FEATURES = 21

_TRIANGLE_MEANS = np.array([[-1.0, -1.0], [0.0, 1.0], [1.0, -1.0]])
_TRIANGLE_VARIANCE = 0.1


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Numeric matrix (n rows, p features) with feature names and optional row labels."""

    values: np.ndarray
    feature_names: tuple[str, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError(f"dataset values must be 2-D, got ndim={values.ndim}")
        n, p = values.shape
        if n < 1 or p < 1:
            raise DataError(f"dataset must be non-empty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value at row {bad[0] + 1}, column {bad[1] + 1}")
        names = tuple(str(c) for c in self.feature_names)
        if len(names) != p:
            raise DataError(f"{len(names)} feature names for {p} columns")
        labels = self.labels
        if labels is not None:
            labels = tuple(str(v) for v in labels)
            if len(labels) != n:
                raise DataError(f"{len(labels)} labels for {n} rows")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Preprocessor:
    """Column-wise affine map x -> (x - mu) / s fitted on training data."""

    mode: str
    mu: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        if self.mode not in ("center", "center_scale"):
            raise DataError(f"unknown preprocessing mode {self.mode!r}")
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        s = np.asarray(self.s, dtype=float).reshape(-1)
        if mu.shape != s.shape:
            raise DataError("mu and s must have the same length")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(s))):
            raise DataError("preprocessor parameters must be finite")
        if np.any(s <= 0):
            raise DataError("scale factors must be strictly positive")
        object.__setattr__(self, "mu", _frozen(mu))
        object.__setattr__(self, "s", _frozen(s))

    @property
    def p(self) -> int:
        return self.mu.shape[0]


def fit_preprocessor(data: Dataset, mode: str = "center") -> Preprocessor:
    """Fit per-column location (and for center_scale, sample sd) on `data`.

    Scaling uses the n-1 denominator. A constant column cannot be scaled
    and raises DataError naming the offending column.
    """
    if mode not in ("center", "center_scale"):
        raise DataError(f"unknown preprocessing mode {mode!r}")
    X = data.values
    if data.n < 2:
        raise DataError("need at least 2 rows to fit a preprocessor")
    mu = X.mean(axis=0)
    if mode == "center_scale":
        s = X.std(axis=0, ddof=1)
        if np.any(s == 0):
            j = int(np.argmin(s))
            raise DataError(
                f"column {j + 1} ({data.feature_names[j]}) is constant and cannot be scaled"
            )
    else:
        s = np.ones_like(mu)
    return Preprocessor(mode=mode, mu=mu, s=s)


def apply_preprocessor(pre: Preprocessor, data: Dataset) -> Dataset:
    if data.p != pre.p:
        raise DataError(f"preprocessor fitted on p={pre.p}, data has p={data.p}")
    return Dataset((data.values - pre.mu) / pre.s, data.feature_names, data.labels)


def invert_preprocessor(pre: Preprocessor, data: Dataset) -> Dataset:
    if data.p != pre.p:
        raise DataError(f"preprocessor fitted on p={pre.p}, data has p={data.p}")
    return Dataset(data.values * pre.s + pre.mu, data.feature_names, data.labels)


def load_csv(
    path,
    has_header: bool = True,
    label_column: str | None = None,
    min_features: int = 2,
) -> Dataset:
    """Read a numeric CSV, optionally splitting off one string label column.

    Cells must parse as finite floats; failures report 1-based row and
    column. Rows must all have the same width and at least `min_features`
    feature columns must remain (2 by default; projected files may relax
    this to 1).
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if not lines:
        raise DataError(f"{path}: empty file")
    rows = [line.split(",") for line in lines]
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {i + 1} has {len(row)} cells, expected {width}")
    if has_header:
        header = [c.strip() for c in rows[0]]
        body = rows[1:]
        first_row = 2
    else:
        header = [f"x{j + 1}" for j in range(width)]
        body = rows
        first_row = 1
    if not body:
        raise DataError(f"{path}: no data rows")
    label_idx = None
    if label_column is not None:
        if not has_header:
            raise DataError("label column requires a header row")
        if label_column not in header:
            raise DataError(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column)
    keep = [j for j in range(width) if j != label_idx]
    if len(keep) < min_features:
        raise DataError(
            f"{path}: need at least {min_features} feature columns, got {len(keep)}"
        )
    values = np.empty((len(body), len(keep)))
    labels = [] if label_idx is not None else None
    for i, row in enumerate(body):
        for k, j in enumerate(keep):
            cell = row[j].strip()
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {first_row + i}, column {j + 1}: cannot parse {cell!r}"
                ) from None
            if not np.isfinite(v):
                raise DataError(
                    f"{path}: row {first_row + i}, column {j + 1}: non-finite value {cell!r}"
                )
            values[i, k] = v
        if labels is not None:
            labels.append(row[label_idx].strip())
    names = tuple(header[j] for j in keep)
    return Dataset(values, names, tuple(labels) if labels is not None else None)


def save_csv(data: Dataset, path, label_name: str = "class") -> None:
    """Write a Dataset as CSV with a header; floats use shortest round-trip form."""
    cols = list(data.feature_names)
    if data.labels is not None:
        cols.append(label_name)
    out = [",".join(cols)]
    for i in range(data.n):
        cells = [repr(float(v)) for v in data.values[i]]
        if data.labels is not None:
            cells.append(data.labels[i])
        out.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(out) + "\n")


def simulate_triangle(n: int, p: int, seed: int) -> Dataset:
    """Three spherical clusters at triangle vertices in coordinates 1-2.

    Components are equally likely with means (-1,-1), (0,1), (1,-1) and
    covariance 0.1 I in the first two coordinates; the remaining p-2
    coordinates are standard normal noise. Labels give the component.
    """
    if n < 1:
        raise DataError(f"n must be positive, got {n}")
    if p < 2:
        raise DataError(f"triangle data needs p >= 2, got {p}")
    rng = np.random.default_rng(seed)
    comp = rng.integers(0, 3, size=n)
    X = np.empty((n, p))
    X[:, :2] = _TRIANGLE_MEANS[comp] + np.sqrt(_TRIANGLE_VARIANCE) * rng.standard_normal((n, 2))
    if p > 2:
        X[:, 2:] = rng.standard_normal((n, p - 2))
    names = tuple(f"x{j + 1}" for j in range(p))
    labels = tuple(str(c + 1) for c in comp)
    return Dataset(X, names, labels)


def waveform_templates() -> np.ndarray:
    """The three shifted triangular wave shapes sampled at positions 1..21."""
    j = np.arange(1, N_WAVEFORM_FEATURES + 1, dtype=float)
    w1 = np.maximum(6.0 - np.abs(j - 11.0), 0.0)
    w2 = np.maximum(6.0 - np.abs(j - 15.0), 0.0)
    w3 = np.maximum(6.0 - np.abs(j - 7.0), 0.0)
    return np.vstack([w1, w2, w3])


# class -> pair of template indices mixed by the uniform draw
_WAVEFORM_PAIRS = ((0, 1), (1, 2), (2, 0))


def simulate_waveform(
    n: int,
    seed: int,
    *,
    u_override: float | None = None,
    noise_scale: float = 1.0,
) -> Dataset:
    """Random convex combinations of two wave templates plus unit noise.

    Each row picks one of three classes uniformly, draws u ~ U[0,1], and
    sets x_j = u * wa(j) + (1-u) * wb(j) + noise, with independent
    standard normal noise per feature. `u_override` and `noise_scale`
    exist for controlled checks of the class templates.
    """
    if n < 1:
        raise DataError(f"n must be positive, got {n}")
    if noise_scale < 0:
        raise DataError("noise_scale must be nonnegative")
    rng = np.random.default_rng(seed)
    waves = waveform_templates()
    cls = rng.integers(0, 3, size=n)
    u = rng.random(n)
    if u_override is not None:
        if not 0.0 <= u_override <= 1.0:
            raise DataError("u_override must lie in [0, 1]")
        u = np.full(n, float(u_override))
    eps = rng.standard_normal((n, N_WAVEFORM_FEATURES))
    pairs = np.array(_WAVEFORM_PAIRS)
    wa = waves[pairs[cls, 0]]
    wb = waves[pairs[cls, 1]]
    X = u[:, None] * wa + (1.0 - u[:, None]) * wb + noise_scale * eps
    names = tuple(f"x{j + 1}" for j in range(N_WAVEFORM_FEATURES))
    labels = tuple(str(c + 1) for c in cls)
    return Dataset(X, names, labels)
