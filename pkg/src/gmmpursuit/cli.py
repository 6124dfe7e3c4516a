"""Command line front end: simulate, fit, pursue, compare, project, plot.

Settings resolve in three layers: built-in defaults, then a TOML config
file, then explicit flags. Seeds never default to the clock; a run
without a seed (flag or config) is a usage error. Every JSON report
embeds the seed and a sha256 of the resolved settings so outputs are
traceable, and reruns with the same settings are byte identical.

Exit codes: 0 success, 1 usage, 2 data or file problem, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import data as dat
from . import gmm
from .errors import DataError, FitError, NumericalError
from .ga import GAConfig, run_pursuit
from .metrics import compare_estimators
from .negentropy import EstimatorKind, negentropy
from .projection import (
    Basis,
    encode_basis,
    load_basis_csv,
    pca_basis,
    project_data,
    project_mixture,
    save_basis_csv,
)
from .svgplot import histogram_svg, scatter_svg

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise DataError(f"bad config file {path}: {exc}") from None


def _resolve(args, defaults: dict, config: dict) -> dict:
    for key in config:
        if key not in defaults:
            print(f"warning: ignoring unknown config key {key!r}", file=sys.stderr)
    out = {}
    for key, default in defaults.items():
        v = getattr(args, key, None)
        if v is None:
            v = config.get(key, default)
        out[key] = v
    if out.get("seed") is None:
        raise UsageError("a seed is required (pass --seed or set seed in the config file)")
    return out


def _config_hash(settings: dict) -> str:
    # hash what was computed, not where results were written or how many
    # threads ran: reruns of one configuration must agree byte for byte
    hashed = {
        k: v for k, v in settings.items()
        if k != "threads" and k != "out" and not k.endswith("_out")
    }
    blob = json.dumps(hashed, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _write_json(path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load_labeled_csv(path, label_column, min_features=2):
    """Label column: explicit name must exist; None means use 'class' if present."""
    if label_column is not None:
        return dat.load_csv(path, has_header=True, label_column=label_column, min_features=min_features)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if "class" in header:
        return dat.load_csv(path, has_header=True, label_column="class", min_features=min_features)
    return dat.load_csv(path, has_header=True, min_features=min_features)


def _read_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"bad model file {path}: {exc}") from None
    return gmm.model_from_json(doc)


def cmd_simulate(args) -> int:
    defaults = {"kind": None, "n": None, "p": 10, "seed": None, "out": "data.csv"}
    s = _resolve(args, defaults, _load_config(args.config))
    if s["n"] is None:
        raise UsageError("--n is required")
    if s["kind"] == "triangle":
        ds = dat.simulate_triangle(int(s["n"]), int(s["p"]), int(s["seed"]))
    else:
        if args.p is not None:
            raise UsageError("waveform data has a fixed 21 features; drop --p")
        ds = dat.simulate_waveform(int(s["n"]), int(s["seed"]))
    dat.save_csv(ds, s["out"])
    print(f"wrote {s['out']} ({ds.n} rows, {ds.p} features + class)")
    return EXIT_OK


_FIT_DEFAULTS = {
    "input": None,
    "label_column": None,
    "preprocess": "center",
    "g_min": 1,
    "g_max": 9,
    "models": "EII,VII,EEI,VVI,EEE,VVV",
    "seed": None,
    "threads": 1,
    "em_max_iter": 1000,
    "em_tol": 1e-8,
    "em_restarts": 5,
    "model_out": "model.json",
    "report_out": "fit_report.json",
}


def cmd_fit(args) -> int:
    s = _resolve(args, _FIT_DEFAULTS, _load_config(args.config))
    if s["input"] is None:
        raise UsageError("--input is required")
    if s["preprocess"] not in ("center", "center_scale", "none"):
        raise UsageError(f"unknown --preprocess {s['preprocess']!r}")
    ds = _load_labeled_csv(s["input"], s["label_column"])
    pre = None
    work = ds
    if s["preprocess"] != "none":
        pre = dat.fit_preprocessor(ds, s["preprocess"])
        work = dat.apply_preprocessor(pre, ds)
    try:
        models = [gmm.CovarianceModel(m.strip()) for m in str(s["models"]).split(",") if m.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not models:
        raise UsageError("--models must name at least one covariance model")
    g_range = range(int(s["g_min"]), int(s["g_max"]) + 1)
    if len(g_range) < 1:
        raise UsageError("--g-min must not exceed --g-max")
    entries = gmm.fit_grid(
        work,
        g_range,
        models,
        seed=int(s["seed"]),
        threads=int(s["threads"]),
        max_iter=int(s["em_max_iter"]),
        tol=float(s["em_tol"]),
        n_restarts=int(s["em_restarts"]),
    )
    reports = [e.report for e in entries if e.report is not None]
    if not reports:
        raise FitError("every (G, model) fit failed; see the report for details")
    best = None
    for e in entries:
        if e.report is not None and (best is None or gmm._better(e.report, best)):
            best = e.report
    table = []
    for e in entries:
        row = {"G": e.G, "model": e.model.value, "failed": e.report is None}
        if e.report is None:
            row["error"] = e.error
        else:
            row.update(
                bic=e.report.bic,
                loglik=e.report.loglik,
                n_params=e.report.n_params,
                iterations=e.report.iterations,
                converged=e.report.converged,
            )
        table.append(row)
    chash = _config_hash(s)
    model_doc = gmm.model_to_json(best.model, pre, feature_names=ds.feature_names)
    _write_json(s["model_out"], model_doc)
    report = {
        "schema_version": 1,
        "seed": int(s["seed"]),
        "config_sha256": chash,
        "n": work.n,
        "p": work.p,
        "preprocessing": model_doc["preprocessing"],
        "selected": {
            "G": best.model.G,
            "model": best.model.parameterization.value,
            "bic": best.bic,
            "loglik": best.loglik,
            "n_params": best.n_params,
            "iterations": best.iterations,
            "converged": best.converged,
        },
        "bic_table": table,
    }
    _write_json(s["report_out"], report)
    print(
        f"selected G={best.model.G} {best.model.parameterization.value} "
        f"(BIC {best.bic:.3f}); wrote {s['model_out']}, {s['report_out']}"
    )
    return EXIT_OK


_GA_KEYS = {
    "pop_size": 100,
    "p_crossover": 0.8,
    "p_mutation": 0.1,
    "p_local_search": 0.05,
    "elitism": 1,
    "max_iter": 1000,
    "run_stall": 100,
    "scaling_factor": 2.0,
}

_PURSUE_DEFAULTS = {
    "model": None,
    "input": None,
    "label_column": None,
    "d": None,
    "estimator": "ut",
    "mc_samples": 100_000,
    "seed": None,
    "threads": 1,
    "seed_from_pca": False,
    "basis_out": "basis.csv",
    "projected_out": "projected.csv",
    "report_out": "pursuit.json",
    "trace_out": "trace.csv",
    **_GA_KEYS,
}


def _ga_config(s: dict, seed: int) -> GAConfig:
    return GAConfig(
        pop_size=int(s["pop_size"]),
        p_crossover=float(s["p_crossover"]),
        p_mutation=float(s["p_mutation"]),
        p_local_search=float(s["p_local_search"]),
        elitism=int(s["elitism"]),
        max_iter=int(s["max_iter"]),
        run_stall=int(s["run_stall"]),
        scaling_factor=float(s["scaling_factor"]),
        seed=seed,
    )


def cmd_pursue(args) -> int:
    s = _resolve(args, _PURSUE_DEFAULTS, _load_config(args.config))
    for key in ("model", "input", "d"):
        if s[key] is None:
            raise UsageError(f"--{key} is required")
    model, pre, _ = _read_model(s["model"])
    ds = _load_labeled_csv(s["input"], s["label_column"])
    if pre is not None:
        ds = dat.apply_preprocessor(pre, ds)
    if ds.p != model.p:
        raise DataError(f"model has p={model.p} but data has p={ds.p}")
    d = int(s["d"])
    seed = int(s["seed"])
    kind_name = str(s["estimator"])
    if kind_name == "mc":
        kind = EstimatorKind.mc(int(s["mc_samples"]), gmm._derived_seed(seed, 4))
    else:
        kind = EstimatorKind(kind_name)
    notes = []
    if model.G == 1:
        notes.append(
            "the fitted model has a single component; negentropy is flat and "
            "the search direction is arbitrary"
        )
        print("warning: " + notes[0], file=sys.stderr)
    warm = ()
    if s["seed_from_pca"]:
        warm = (encode_basis(pca_basis(ds, d)),)
    res = run_pursuit(model, d, kind, _ga_config(s, seed), threads=int(s["threads"]), initial_genomes=warm)
    save_basis_csv(res.best_basis, s["basis_out"])
    dat.save_csv(project_data(ds, res.best_basis), s["projected_out"])
    with open(s["trace_out"], "w", encoding="utf-8", newline="") as fh:
        fh.write("generation,best,mean\n")
        for i, (b, m) in enumerate(zip(res.fitness_trace, res.mean_trace)):
            fh.write(f"{i},{b!r},{m!r}\n")
    est = negentropy(project_mixture(model, res.best_basis), kind)
    doc = {
        "schema_version": 1,
        "seed": seed,
        "config_sha256": _config_hash(s),
        "estimator": kind.kind,
        "mc_samples": kind.mc_samples if kind.kind == "mc" else None,
        "p": model.p,
        "d": d,
        "best_fitness": res.best_fitness,
        "generations_run": res.generations_run,
        "fitness_trace": list(res.fitness_trace),
        "mean_trace": list(res.mean_trace),
        "negentropy": {
            "entropy": est.entropy,
            "gaussian_entropy": est.gaussian_entropy,
            "negentropy": est.negentropy,
            "mc_std_error": est.mc_std_error,
        },
        "warnings": notes + list(res.warnings),
    }
    _write_json(s["report_out"], doc)
    print(
        f"best {kind.kind} negentropy {res.best_fitness:.6f} after "
        f"{res.generations_run} generations; wrote {s['basis_out']}, "
        f"{s['projected_out']}, {s['report_out']}, {s['trace_out']}"
    )
    return EXIT_OK


_COMPARE_DEFAULTS = {
    "model": None,
    "input": None,
    "label_column": None,
    "d": None,
    "estimators": "ut,var,sote",
    "mc_samples": 100_000,
    "seed": None,
    "threads": 1,
    "out": "comparison.json",
    **_GA_KEYS,
}


def cmd_compare(args) -> int:
    s = _resolve(args, _COMPARE_DEFAULTS, _load_config(args.config))
    for key in ("model", "d"):
        if s[key] is None:
            raise UsageError(f"--{key} is required")
    model, pre, _ = _read_model(s["model"])
    ds = None
    if s["input"] is not None:
        ds = _load_labeled_csv(s["input"], s["label_column"])
        if pre is not None:
            ds = dat.apply_preprocessor(pre, ds)
    estimators = tuple(e.strip() for e in str(s["estimators"]).split(",") if e.strip())
    seed = int(s["seed"])
    report = compare_estimators(
        model,
        int(s["d"]),
        _ga_config(s, seed),
        seed=seed,
        mc_samples=int(s["mc_samples"]),
        data=ds,
        estimators=estimators,
        threads=int(s["threads"]),
    )
    doc = {
        "schema_version": 1,
        "seed": seed,
        "config_sha256": _config_hash(s),
        "d": int(s["d"]),
        "mc_samples": int(s["mc_samples"]),
        **report.to_json_dict(),
    }
    _write_json(s["out"], doc)
    shown = ", ".join(f"{e}={report.mc_negentropy[e]:.4f}" for e in report.angle_labels)
    print(f"MC negentropy by basis: {shown}; wrote {s['out']}")
    return EXIT_OK


def cmd_project(args) -> int:
    defaults = {
        "model": None,
        "input": None,
        "basis": None,
        "label_column": None,
        "seed": 0,
        "out": "projected.csv",
    }
    s = _resolve(args, defaults, _load_config(args.config))
    for key in ("input", "basis"):
        if s[key] is None:
            raise UsageError(f"--{key} is required")
    ds = _load_labeled_csv(s["input"], s["label_column"])
    if s["model"] is not None:
        _, pre, _ = _read_model(s["model"])
        if pre is not None:
            ds = dat.apply_preprocessor(pre, ds)
    basis = load_basis_csv(s["basis"], origin="external")
    dat.save_csv(project_data(ds, basis), s["out"])
    print(f"wrote {s['out']} ({ds.n} rows, {basis.d} coordinates)")
    return EXIT_OK


def cmd_plot(args) -> int:
    defaults = {
        "input": None,
        "basis": None,
        "label_column": None,
        "title": None,
        "bins": 30,
        "seed": 0,
        "out": "plot.svg",
    }
    s = _resolve(args, defaults, _load_config(args.config))
    if s["input"] is None:
        raise UsageError("--input is required")
    ds = _load_labeled_csv(s["input"], s["label_column"], min_features=1)
    d = ds.p
    values = ds.values
    if d > 2:
        raise DataError(
            f"plotting needs a 1-D or 2-D projection, got {d} columns; "
            "project onto pairs of coordinates and plot those instead"
        )
    if d == 2:
        arrows = None
        arrow_labels = None
        if s["basis"] is not None:
            b = load_basis_csv(s["basis"], origin="external")
            if b.d != 2:
                raise DataError(f"biplot arrows need a p x 2 basis, got d={b.d}")
            arrows = b.matrix
            arrow_labels = [f"x{j + 1}" for j in range(b.p)]
        svg = scatter_svg(
            values,
            labels=ds.labels,
            arrows=arrows,
            arrow_labels=arrow_labels,
            x_label=ds.feature_names[0],
            y_label=ds.feature_names[1],
            title=s["title"],
        )
    else:
        svg = histogram_svg(
            values[:, 0],
            labels=ds.labels,
            bins=int(s["bins"]),
            x_label=ds.feature_names[0],
            title=s["title"],
        )
    with open(s["out"], "w", encoding="utf-8", newline="") as fh:
        fh.write(svg)
    print(f"wrote {s['out']}")
    return EXIT_OK


def _add_common(sp, *, threads=False):
    sp.add_argument("--config", help="TOML config file; flags override its values")
    sp.add_argument("--seed", type=int, help="random seed (required here or in the config)")
    if threads:
        sp.add_argument("--threads", type=int, help="worker threads (does not change results)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmmpursuit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write a synthetic labeled dataset as CSV")
    p_sim.add_argument("kind", choices=["triangle", "waveform"])
    p_sim.add_argument("--n", type=int, help="number of rows")
    p_sim.add_argument("--p", type=int, help="total features (triangle only)")
    p_sim.add_argument("--out", help="output CSV path")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="preprocess and fit a mixture, selecting G and model by BIC")
    p_fit.add_argument("--input", help="input CSV")
    p_fit.add_argument("--label-column", dest="label_column")
    p_fit.add_argument("--preprocess", choices=["center", "center_scale", "none"])
    p_fit.add_argument("--g-min", dest="g_min", type=int)
    p_fit.add_argument("--g-max", dest="g_max", type=int)
    p_fit.add_argument("--models", help="comma list of covariance codes")
    p_fit.add_argument("--model-out", dest="model_out")
    p_fit.add_argument("--report-out", dest="report_out")
    _add_common(p_fit, threads=True)
    p_fit.set_defaults(func=cmd_fit)

    p_pur = sub.add_parser("pursue", help="search for the most non-Gaussian projection")
    p_pur.add_argument("--model", help="model JSON from fit")
    p_pur.add_argument("--input", help="raw data CSV")
    p_pur.add_argument("--label-column", dest="label_column")
    p_pur.add_argument("--d", type=int, help="projection dimension")
    p_pur.add_argument("--estimator", choices=["mc", "ut", "var", "sote"])
    p_pur.add_argument("--mc-samples", dest="mc_samples", type=int)
    p_pur.add_argument("--seed-from-pca", dest="seed_from_pca", action="store_const", const=True)
    p_pur.add_argument("--pop-size", dest="pop_size", type=int)
    p_pur.add_argument("--p-crossover", dest="p_crossover", type=float)
    p_pur.add_argument("--p-mutation", dest="p_mutation", type=float)
    p_pur.add_argument("--p-local-search", dest="p_local_search", type=float)
    p_pur.add_argument("--elitism", type=int)
    p_pur.add_argument("--max-iter", dest="max_iter", type=int)
    p_pur.add_argument("--run-stall", dest="run_stall", type=int)
    p_pur.add_argument("--scaling-factor", dest="scaling_factor", type=float)
    p_pur.add_argument("--basis-out", dest="basis_out")
    p_pur.add_argument("--projected-out", dest="projected_out")
    p_pur.add_argument("--report-out", dest="report_out")
    p_pur.add_argument("--trace-out", dest="trace_out")
    _add_common(p_pur, threads=True)
    p_pur.set_defaults(func=cmd_pursue)

    p_cmp = sub.add_parser("compare", help="run every estimator and score bases by MC negentropy")
    p_cmp.add_argument("--model")
    p_cmp.add_argument("--input", help="data CSV (enables the PCA baseline)")
    p_cmp.add_argument("--label-column", dest="label_column")
    p_cmp.add_argument("--d", type=int)
    p_cmp.add_argument("--estimators", help="comma list from ut,var,sote")
    p_cmp.add_argument("--mc-samples", dest="mc_samples", type=int)
    p_cmp.add_argument("--pop-size", dest="pop_size", type=int)
    p_cmp.add_argument("--max-iter", dest="max_iter", type=int)
    p_cmp.add_argument("--run-stall", dest="run_stall", type=int)
    p_cmp.add_argument("--out")
    _add_common(p_cmp, threads=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_prj = sub.add_parser("project", help="project a CSV onto a saved basis")
    p_prj.add_argument("--model", help="model JSON carrying the preprocessing")
    p_prj.add_argument("--input")
    p_prj.add_argument("--basis")
    p_prj.add_argument("--label-column", dest="label_column")
    p_prj.add_argument("--out")
    _add_common(p_prj)
    p_prj.set_defaults(func=cmd_project)

    p_plt = sub.add_parser("plot", help="render a projected CSV as a static SVG")
    p_plt.add_argument("--input", help="projected CSV (1 or 2 coordinates)")
    p_plt.add_argument("--basis", help="optional basis CSV for biplot arrows")
    p_plt.add_argument("--label-column", dest="label_column")
    p_plt.add_argument("--title")
    p_plt.add_argument("--bins", type=int)
    p_plt.add_argument("--out")
    _add_common(p_plt)
    p_plt.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gmmpursuit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"gmmpursuit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, NumericalError, np.linalg.LinAlgError) as exc:
        print(f"gmmpursuit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
