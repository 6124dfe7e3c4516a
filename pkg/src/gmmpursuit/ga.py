"""Hybrid real-coded genetic search over angle-encoded projection bases.

The objective is the approximated negentropy of the projected mixture.
Selection is fitness proportional after a linear scaling, crossover is
local arithmetic (per-gene convex combinations), mutation redraws genes
uniformly inside the box, the best individuals survive unchanged, and
an occasional bounded quasi-Newton refinement polishes the incumbent.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DataError, FitError, NumericalError
from .gmm import GaussianMixture
from .negentropy import EstimatorKind, negentropy
from .projection import AngleGenome, Basis, decode, genome_bounds, orthonormalize, project_mixture

# an improvement must exceed this to reset the stall counter
_STALL_EPS = 1e-10
# stands in for failed evaluations inside the quasi-Newton refinement;
# finite so difference quotients stay well defined
_ASCEND_PENALTY = 1e12


@dataclass(frozen=True)
class GAConfig:
    """Knobs of the genetic search; defaults are the recommended operating point."""

    pop_size: int = 100
    p_crossover: float = 0.8
    p_mutation: float = 0.1
    p_local_search: float = 0.05
    elitism: int = 1
    max_iter: int = 1000
    run_stall: int = 100
    scaling_factor: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2:
            raise DataError("pop_size must be at least 2")
        for name in ("p_crossover", "p_mutation", "p_local_search"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DataError(f"{name} must lie in [0, 1], got {v}")
        if not 0 <= self.elitism < self.pop_size:
            raise DataError("elitism must be in [0, pop_size)")
        if self.max_iter < 1 or self.run_stall < 1:
            raise DataError("max_iter and run_stall must be positive")
        if self.scaling_factor <= 1.0:
            raise DataError("scaling_factor must exceed 1")


@dataclass(frozen=True)
class PursuitResult:
    """Outcome of one genetic run."""

    best_genome: AngleGenome
    best_basis: Basis
    best_fitness: float
    fitness_trace: tuple[float, ...]
    mean_trace: tuple[float, ...]
    generations_run: int
    estimator: EstimatorKind
    warnings: tuple[str, ...] = ()


def fitness(genome: AngleGenome, model: GaussianMixture, kind: EstimatorKind) -> float:
    """Negentropy of the mixture projected onto the orthonormalized decoded basis."""
    basis = orthonormalize(decode(genome))
    return float(negentropy(project_mixture(model, basis), kind).negentropy)


def _scaled_probs(fitnesses: np.ndarray, scaling_factor: float | None) -> np.ndarray:
    """Selection probabilities under linear fitness scaling.

    With scaling c, values map to a*f + b with a = (c-1)*mean/(max-mean)
    and b = mean*(1-a), so the best individual expects c times the mean
    share. Negative scaled values clamp to zero; degenerate cases fall
    back to a uniform draw. scaling_factor=None skips the scaling (raw
    proportional selection).
    """
    f = np.asarray(fitnesses, dtype=float)
    n = f.shape[0]
    finite = np.isfinite(f)
    if not np.any(finite):
        raise FitError("no finite fitness values to select from")
    if scaling_factor is None:
        scaled = np.where(finite, f, 0.0)
    else:
        fmean = float(np.mean(f[finite]))
        fmax = float(np.max(f[finite]))
        if fmax - fmean <= 0.0:
            return np.full(n, 1.0 / n)
        a = (scaling_factor - 1.0) * fmean / (fmax - fmean)
        b = fmean * (1.0 - a)
        scaled = np.where(finite, a * f + b, 0.0)
    scaled = np.clip(scaled, 0.0, None)
    total = float(scaled.sum())
    if not np.isfinite(total) or total <= 0.0:
        return np.full(n, 1.0 / n)
    return scaled / total


def select_parents(
    fitnesses,
    n_pairs: int,
    rng: np.random.Generator,
    scaling_factor: float | None = 2.0,
) -> np.ndarray:
    """Draw parent index pairs (n_pairs, 2), proportional to scaled fitness."""
    if n_pairs < 1:
        raise DataError("n_pairs must be positive")
    probs = _scaled_probs(np.asarray(fitnesses, dtype=float), scaling_factor)
    idx = rng.choice(probs.shape[0], size=2 * n_pairs, replace=True, p=probs)
    return idx.reshape(n_pairs, 2)


def _crossover_arrays(
    p1: np.ndarray, p2: np.ndarray, alphas: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    # p2 + a*(p1 - p2) rather than a*p1 + (1-a)*p2: identical parents then
    # reproduce bitwise (the difference is exactly zero)
    c1 = p2 + alphas * (p1 - p2)
    c2 = (p1 + p2) - c1
    return c1, c2


def crossover_local_arithmetic(
    parent1: AngleGenome,
    parent2: AngleGenome,
    rng: np.random.Generator,
    alphas=None,
) -> tuple[AngleGenome, AngleGenome]:
    """Per-gene convex blend: child1 = a*p1 + (1-a)*p2, child2 the complement.

    Coefficients a are drawn uniformly per gene unless `alphas` pins them
    (test hook). Children stay inside the box and gene sums are conserved.
    """
    if (parent1.p, parent1.d) != (parent2.p, parent2.d):
        raise DataError("parents must share p and d")
    n = parent1.angles.shape[0]
    if alphas is None:
        alphas = rng.random(n)
    else:
        alphas = np.asarray(alphas, dtype=float)
        if alphas.shape != (n,) or np.any(alphas < 0) or np.any(alphas > 1):
            raise DataError("alphas must be n genes in [0, 1]")
    c1, c2 = _crossover_arrays(parent1.angles, parent2.angles, alphas)
    p, d = parent1.p, parent1.d
    # rounding can overshoot the box by an ulp at the boundary
    lo, hi = genome_bounds(p, d)
    c1 = np.clip(c1, lo, hi)
    c2 = np.clip(c2, lo, hi)
    return AngleGenome(c1, p, d), AngleGenome(c2, p, d)


def _mutate_array(
    arr: np.ndarray,
    p_mutation: float,
    lo: np.ndarray,
    hi: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    mask = rng.random(arr.shape[0]) < p_mutation
    draws = rng.uniform(lo, hi)
    return np.where(mask, draws, arr)


def mutate_uniform(
    genome: AngleGenome, p_mutation: float, rng: np.random.Generator
) -> AngleGenome:
    """Redraw each gene uniformly inside its bounds with probability p_mutation."""
    if not 0.0 <= p_mutation <= 1.0:
        raise DataError("p_mutation must lie in [0, 1]")
    lo, hi = genome_bounds(genome.p, genome.d)
    return AngleGenome(_mutate_array(genome.angles, p_mutation, lo, hi, rng), genome.p, genome.d)


def _ascend(objective, x0: np.ndarray, lo: np.ndarray, hi: np.ndarray, max_iter: int):
    """Bounded quasi-Newton ascent; returns (x, value) no worse than the start."""
    f0 = objective(x0)

    def neg(a: np.ndarray) -> float:
        v = objective(a)
        return -v if np.isfinite(v) else _ASCEND_PENALTY

    try:
        res = minimize(
            neg,
            x0,
            method="L-BFGS-B",
            bounds=list(zip(lo, hi)),
            options={"maxiter": max_iter},
        )
    except (NumericalError, FitError, FloatingPointError) as exc:
        warnings.warn(f"local refinement failed: {exc}", RuntimeWarning, stacklevel=2)
        return x0, f0
    x = np.clip(res.x, lo, hi)
    try:
        val = objective(x)
    except (NumericalError, FitError) as exc:
        warnings.warn(f"local refinement failed: {exc}", RuntimeWarning, stacklevel=2)
        return x0, f0
    if val > f0:
        return x, val
    return x0, f0


def local_search(
    genome: AngleGenome,
    model: GaussianMixture,
    kind: EstimatorKind,
    max_iter: int = 50,
) -> AngleGenome:
    """Refine a genome with bounded quasi-Newton steps; never returns a worse one."""
    lo, hi = genome_bounds(genome.p, genome.d)

    def objective(a: np.ndarray) -> float:
        return fitness(AngleGenome(np.clip(a, lo, hi), genome.p, genome.d), model, kind)

    x, _ = _ascend(objective, genome.angles, lo, hi, max_iter)
    return AngleGenome(x, genome.p, genome.d)


def run_pursuit(
    model: GaussianMixture,
    d: int,
    kind: EstimatorKind,
    config: GAConfig = GAConfig(),
    threads: int = 1,
    initial_genomes: tuple[AngleGenome, ...] = (),
) -> PursuitResult:
    """Maximize projected negentropy over p x d bases with the genetic search.

    Runs until `max_iter` generations or `run_stall` generations without
    a best-fitness improvement above 1e-10. `initial_genomes` may inject
    starting individuals (for example a PCA warm start); the rest of the
    initial population is uniform over the box. With threads > 1 only
    fitness evaluation is parallel, the random stream is untouched, so
    results are identical to the single-threaded run.
    """
    p = model.p
    if not 1 <= d < p:
        raise DataError(f"need 1 <= d < p, got d={d}, p={p}")
    if threads < 1:
        raise DataError("threads must be positive")
    lo, hi = genome_bounds(p, d)
    rng = np.random.default_rng(config.seed)
    pop = rng.uniform(lo, hi, size=(config.pop_size, lo.shape[0]))
    for i, g in enumerate(initial_genomes):
        if i >= config.pop_size:
            break
        if (g.p, g.d) != (p, d):
            raise DataError("initial genome has wrong p or d")
        pop[i] = g.angles

    notes: list[str] = []

    def eval_one(row: np.ndarray) -> float:
        try:
            return fitness(AngleGenome(row, p, d), model, kind)
        except (NumericalError, FitError):
            return -np.inf

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        def evaluate(rows: np.ndarray) -> np.ndarray:
            if pool is not None:
                return np.fromiter(pool.map(eval_one, rows), dtype=float, count=len(rows))
            return np.fromiter((eval_one(r) for r in rows), dtype=float, count=len(rows))

        def ls_objective(a: np.ndarray) -> float:
            return eval_one(np.clip(a, lo, hi))

        fit = evaluate(pop)
        if not np.any(np.isfinite(fit)):
            raise FitError("every individual of the initial population failed to evaluate")
        if np.any(~np.isfinite(fit)):
            notes.append("some individuals failed to evaluate and were assigned -inf fitness")

        best_trace: list[float] = []
        mean_trace: list[float] = []
        best_val = -np.inf
        best_x = pop[0].copy()
        stall = 0
        while True:
            if rng.random() < config.p_local_search:
                j = int(np.argmax(fit))
                xr, vr = _ascend(ls_objective, pop[j].copy(), lo, hi, 50)
                worst = int(np.argmin(fit))
                if vr > fit[worst]:
                    pop[worst] = xr
                    fit[worst] = vr
            gen_best = int(np.argmax(fit))
            finite = np.isfinite(fit)
            best_trace.append(float(fit[gen_best]))
            mean_trace.append(float(np.mean(fit[finite])))
            if fit[gen_best] > best_val + _STALL_EPS:
                best_val = float(fit[gen_best])
                best_x = pop[gen_best].copy()
                stall = 0
            else:
                stall += 1
                if fit[gen_best] > best_val:
                    best_val = float(fit[gen_best])
                    best_x = pop[gen_best].copy()
            if len(best_trace) >= config.max_iter or stall >= config.run_stall:
                break
            elite_idx = np.argsort(-fit, kind="stable")[: config.elitism]
            n_children = config.pop_size - config.elitism
            pairs = select_parents(fit, (n_children + 1) // 2, rng, config.scaling_factor)
            children = np.empty((2 * pairs.shape[0], lo.shape[0]))
            for k, (i1, i2) in enumerate(pairs):
                if rng.random() < config.p_crossover:
                    alphas = rng.random(lo.shape[0])
                    c1, c2 = _crossover_arrays(pop[i1], pop[i2], alphas)
                else:
                    c1, c2 = pop[i1].copy(), pop[i2].copy()
                children[2 * k] = c1
                children[2 * k + 1] = c2
            children = children[:n_children]
            for k in range(children.shape[0]):
                children[k] = _mutate_array(children[k], config.p_mutation, lo, hi, rng)
            child_fit = evaluate(children)
            pop = np.vstack([pop[elite_idx], children])
            fit = np.concatenate([fit[elite_idx], child_fit])
            if not np.any(np.isfinite(fit)):
                raise FitError("every individual of a generation failed to evaluate")
    finally:
        if pool is not None:
            pool.shutdown()

    genome = AngleGenome(best_x, p, d)
    return PursuitResult(
        best_genome=genome,
        best_basis=orthonormalize(decode(genome)),
        best_fitness=best_val,
        fitness_trace=tuple(best_trace),
        mean_trace=tuple(mean_trace),
        generations_run=len(best_trace),
        estimator=kind,
        warnings=tuple(notes),
    )
