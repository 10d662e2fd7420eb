"""JSON schemas for run configurations and command outputs."""
from __future__ import annotations

SCHEMA_VERSION = "1.0"

_U64 = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}
_POS = {"type": "number", "exclusiveMinimum": 0}
_OPT_POS = {"type": ["number", "null"], "exclusiveMinimum": 0}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_COUNT = {"type": "integer", "minimum": 1}
_SOLVER_NAME = {"enum": ["adaptive", "split_bregman", "fista"]}


def _section(properties: dict) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": properties}


CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "sparsemv run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "spec_version": {"const": SCHEMA_VERSION},
        "input": {"type": ["string", "null"]},
        "input_kind": {"enum": ["prices", "returns"]},
        "out": {"type": "string"},
        "seed": _U64,
        "solver": _section({
            "method": _SOLVER_NAME,
            "tol": _POS,
            "lam": _OPT_POS,
            "batch_size": {"type": ["integer", "null"], "minimum": 1},
            "max_inner": _COUNT,
            "max_outer": {"type": ["integer", "null"], "minimum": 1},
        }),
        "estimation": _section({
            "mean_method": {"enum": ["james_stein", "sample"]},
            "cov_method": {"enum": ["ledoit_wolf", "sample"]},
            "eigen_floor": _OPT_POS,
            "eta_floor": {"type": "number"},
        }),
        "calibration": _section({
            "K": _COUNT,
            "p1": _PROB,
            "p2": _PROB,
            "alpha_floor": _OPT_POS,
            "criterion": {"enum": ["unpenalized", "weighted_elastic_net",
                                   "uniform_elastic_net", "weighted_lasso"]},
        }),
        "backtest": _section({
            "train_len": {"type": "integer", "minimum": 2},
            "hold_len": _COUNT,
        }),
        "bench": _section({
            "dimensions": {"type": "array", "items": _COUNT, "minItems": 1},
            "planted": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            "seeds": {"type": "array", "items": _U64, "minItems": 1},
            "solvers": {"type": "array", "items": _SOLVER_NAME, "minItems": 1},
        }),
    },
}

_NUM = {"type": "number"}
_OPT_NUM = {"type": ["number", "null"]}

CERTIFICATE_SCHEMA = {
    "type": "object",
    "required": ["spec_version", "objective", "certified_gap", "support_size", "iterations", "wall_time"],
    "properties": {
        "spec_version": {"const": SCHEMA_VERSION},
        "objective": _NUM,
        "certified_gap": _OPT_NUM,
        "support_size": {"type": "integer", "minimum": 0},
        "iterations": {"type": "integer", "minimum": 0},
        "wall_time": {"type": "number", "minimum": 0},
        "solver": {"type": "string"},
        "seed": _U64,
    },
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["spec_version", "sharpe", "n_periods", "rebalances"],
    "properties": {
        "spec_version": {"const": SCHEMA_VERSION},
        "sharpe": _NUM,
        "n_periods": {"type": "integer", "minimum": 2},
        "criterion": {"type": "string"},
        "seed": _U64,
        "rebalances": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["date", "support_size", "turnover", "weights"],
                "properties": {
                    "date": {"type": ["string", "integer"]},
                    "support_size": {"type": "integer", "minimum": 0},
                    "turnover": {"type": "number", "minimum": 0},
                    "weights": {"type": "object", "additionalProperties": _NUM},
                },
            },
        },
    },
}

ESTIMATES_SCHEMA = {
    "type": "object",
    "required": ["spec_version", "asset_ids", "mu", "gamma", "mean_method", "cov_method", "intensities"],
    "properties": {
        "spec_version": {"const": SCHEMA_VERSION},
        "asset_ids": {"type": "array", "items": {"type": "string"}},
        "mu": {"type": "array", "items": _NUM},
        "gamma": {"type": "array", "items": {"type": "array", "items": _NUM}},
        "mean_method": {"type": "string"},
        "cov_method": {"type": "string"},
        "intensities": {"type": "object", "additionalProperties": _NUM},
    },
}
