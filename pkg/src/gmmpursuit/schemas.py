"""JSON Schemas for the documents the command line tools read and write."""

from __future__ import annotations

import jsonschema

from .errors import DataError

_NUMBER_ROW = {"type": "array", "items": {"type": "number"}}

_PREPROCESSING = {
    "oneOf": [
        {"type": "null"},
        {
            "type": "object",
            "required": ["mode", "mu", "s"],
            "properties": {
                "mode": {"enum": ["center", "center_scale"]},
                "mu": _NUMBER_ROW,
                "s": _NUMBER_ROW,
            },
        },
    ]
}

_PROVENANCE_PROPS = {
    "schema_version": {"const": 1},
    "seed": {"type": "integer"},
    "config_sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
}

MODEL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "type", "G", "p", "weights", "means", "covariances"],
    "properties": {
        "schema_version": {"const": 1},
        "type": {"const": "gaussian_mixture"},
        "G": {"type": "integer", "minimum": 1},
        "p": {"type": "integer", "minimum": 1},
        "parameterization": {
            "oneOf": [{"type": "null"}, {"enum": ["EII", "VII", "EEI", "VVI", "EEE", "VVV"]}]
        },
        "weights": _NUMBER_ROW,
        "means": {"type": "array", "items": _NUMBER_ROW},
        "covariances": {"type": "array", "items": _NUMBER_ROW},
        "preprocessing": _PREPROCESSING,
        "feature_names": {
            "oneOf": [{"type": "null"}, {"type": "array", "items": {"type": "string"}}]
        },
    },
}

FIT_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "seed", "config_sha256", "n", "p", "selected", "bic_table"],
    "properties": {
        **_PROVENANCE_PROPS,
        "n": {"type": "integer", "minimum": 1},
        "p": {"type": "integer", "minimum": 1},
        "preprocessing": _PREPROCESSING,
        "selected": {
            "type": "object",
            "required": ["G", "model", "bic", "loglik", "n_params", "converged"],
        },
        "bic_table": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["G", "model", "failed"],
                "properties": {
                    "G": {"type": "integer"},
                    "model": {"type": "string"},
                    "failed": {"type": "boolean"},
                },
            },
        },
    },
}

PURSUIT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "schema_version",
        "seed",
        "config_sha256",
        "estimator",
        "p",
        "d",
        "best_fitness",
        "generations_run",
        "fitness_trace",
        "mean_trace",
        "negentropy",
    ],
    "properties": {
        **_PROVENANCE_PROPS,
        "estimator": {"enum": ["mc", "ut", "var", "sote"]},
        "p": {"type": "integer", "minimum": 2},
        "d": {"type": "integer", "minimum": 1},
        "best_fitness": {"type": "number"},
        "generations_run": {"type": "integer", "minimum": 1},
        "fitness_trace": _NUMBER_ROW,
        "mean_trace": _NUMBER_ROW,
        "negentropy": {
            "type": "object",
            "required": ["entropy", "gaussian_entropy", "negentropy"],
        },
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
}

COMPARISON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "schema_version",
        "seed",
        "config_sha256",
        "d",
        "mc_samples",
        "estimators",
        "negentropy",
        "mc_negentropy",
        "relative_accuracy",
        "angle_labels",
        "angles_degrees",
    ],
    "properties": {
        **_PROVENANCE_PROPS,
        "d": {"type": "integer", "minimum": 1},
        "mc_samples": {"type": "integer", "minimum": 2},
        "estimators": {"type": "array", "items": {"type": "string"}},
        "angles_degrees": {"type": "array", "items": _NUMBER_ROW},
        "failures": {"type": "object"},
    },
}

_SCHEMAS = {
    "model": MODEL_SCHEMA,
    "fit_report": FIT_REPORT_SCHEMA,
    "pursuit": PURSUIT_SCHEMA,
    "comparison": COMPARISON_SCHEMA,
}


def validate_document(doc: dict, kind: str) -> None:
    """Validate a JSON document against one of the package schemas."""
    if kind not in _SCHEMAS:
        raise DataError(f"unknown document kind {kind!r}, expected one of {sorted(_SCHEMAS)}")
    try:
        jsonschema.validate(doc, _SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        raise DataError(f"invalid {kind} document: {exc.message}") from None
