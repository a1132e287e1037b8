"""Experiment configuration: JSON schema, loading and validation."""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .active_set import DEFAULT_TERM_BUDGET
from .anova import check_grid
from .cost import CostFunction, CostMode
from .errors import NSSApproxError
from .weights import ProblemModel

ENV_PREFIX = "NSSAPPROX_"

_rate = {"oneOf": [{"type": "number"}, {"type": "string", "enum": ["inf"]}]}

_sequence = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["power", "power_log", "geometric", "table", "remark_block",
                          "powered"]},
        "name": {"type": "string"},
        "params": {"type": "object"},
        "claimed_decay_low": _rate,
        "claimed_decay_up": _rate,
    },
    "additionalProperties": False,
}

_positive_list = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                  "minItems": 1}

CONFIG_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "nssapprox experiment config",
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "required": ["gamma", "lambda"],
            "properties": {
                "gamma": _sequence,
                "lambda": _sequence,
                "lambda_is_block_spectrum": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "cost": {
            "oneOf": [
                {"type": "object", "required": ["kind", "s"],
                 "properties": {"kind": {"const": "poly"},
                                "s": {"type": "number", "minimum": 0}},
                 "additionalProperties": False},
                {"type": "object", "required": ["kind", "values"],
                 "properties": {"kind": {"const": "table"},
                                "values": {"type": "array", "minItems": 1,
                                           "items": {"type": "number", "minimum": 1}}},
                 "additionalProperties": False},
            ],
        },
        "mode": {"enum": ["nss", "unrestricted"]},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "eps_sq": {"type": "number", "exclusiveMinimum": 0},
        "eps_grid": {
            "oneOf": [
                {"type": "array", "items": {"type": "number"}, "minItems": 1},
                {"type": "object", "required": ["start", "stop", "factor"],
                 "properties": {"start": {"type": "number"}, "stop": {"type": "number"},
                                "factor": {"type": "number", "exclusiveMinimum": 0,
                                           "exclusiveMaximum": 1}},
                 "additionalProperties": False},
            ],
        },
        "term_budget": {"type": "integer", "minimum": 1},
        "rates": {
            "type": "object",
            "properties": {"d_lambda_low": {"type": "number"},
                           "d_gamma_low": {"type": "number"},
                           "d_gamma_up": _rate,
                           "s": {"type": "number"}},
            "additionalProperties": False,
        },
        "non_anova": {
            "type": "object",
            "properties": {"c": {"type": "number"},
                           "rel_tol": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "witness": {
            "type": "object",
            "required": ["h_norm_sq", "c1", "budget_grid"],
            "properties": {"h_norm_sq": {"type": "number"}, "c1": {"type": "number"},
                           "budget_grid": _positive_list},
            "additionalProperties": False,
        },
        "compare": {
            "type": "object",
            "required": ["d_gamma", "d_lambda", "s"],
            "properties": {"d_gamma": _positive_list, "d_lambda": _positive_list,
                           "s": _positive_list},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class ConfigError(Exception):
    """Config does not match the schema or violates a semantic precondition."""


def expand_grid(spec) -> list[float]:
    if isinstance(spec, list):
        return [float(x) for x in spec]
    start, stop, factor = float(spec["start"]), float(spec["stop"]), float(spec["factor"])
    if not (0 < stop <= start):
        raise ConfigError("eps_grid needs 0 < stop <= start")
    out = []
    k = 0
    while True:
        e = start * factor ** k
        if e < stop * (1.0 - 1e-12):
            break
        out.append(e)
        k += 1
    return out


@dataclass
class ExperimentConfig:
    raw: dict
    model: ProblemModel | None = None
    cost: CostFunction = field(default_factory=lambda: CostFunction(s=1.0))
    mode: CostMode = CostMode.NSS
    eps_grid: list | None = None
    term_budget: int = DEFAULT_TERM_BUDGET

    @property
    def sha256(self) -> str:
        return config_hash(self.raw)

    def require(self, *keys: str):
        missing = [k for k in keys if k not in self.raw]
        if missing:
            raise ConfigError(f"config needs {', '.join(missing)} for this subcommand")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(raw: dict) -> str:
    return hashlib.sha256(canonical_json(raw).encode()).hexdigest()


def parse_config(raw: Any) -> ExperimentConfig:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None
    if "eps" in raw and "eps_sq" in raw:
        raise ConfigError("give at most one of eps and eps_sq")
    cfg = ExperimentConfig(raw=raw)
    try:
        if "model" in raw:
            cfg.model = ProblemModel.from_descriptor(raw["model"])
        if "cost" in raw:
            cfg.cost = CostFunction.from_descriptor(raw["cost"])
        cfg.mode = CostMode.parse(raw.get("mode", "nss"))
        if "eps_grid" in raw:
            cfg.eps_grid = check_grid(expand_grid(raw["eps_grid"]))
    except NSSApproxError as exc:
        raise ConfigError(f"{exc.code}: {exc}") from None
    cfg.term_budget = int(raw.get("term_budget", DEFAULT_TERM_BUDGET))
    env_budget = os.environ.get(ENV_PREFIX + "TERM_BUDGET")
    if env_budget:
        try:
            cfg.term_budget = int(env_budget)
        except ValueError:
            raise ConfigError(f"bad {ENV_PREFIX}TERM_BUDGET {env_budget!r}") from None
    return cfg


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(raw)


def to_jsonable(obj: Any) -> Any:
    """Replace non-finite floats by strings so output stays strict JSON."""
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj
