"""Experiment configuration files (JSON) and their schema."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

__all__ = ["ConfigError", "ExperimentConfig", "SCHEMA", "load_config", "config_from_dict"]

_BOX = {
    "type": "array",
    "items": {"type": "integer", "minimum": 0},
    "minItems": 4,
    "maxItems": 4,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hbgauge experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["degree", "base_elements"],
    "properties": {
        "name": {"type": "string"},
        "degree": {"type": "integer", "minimum": 1},
        "base_elements": {
            "type": "array",
            "items": {"type": "integer", "minimum": 2},
            "minItems": 2,
            "maxItems": 2,
        },
        "domain_scale": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0},
            "minItems": 2,
            "maxItems": 2,
        },
        "refinement": {
            "description": "refinement[l] lists half-open boxes [i0, i1, j0, j1] of level-(l+1) cells",
            "type": "array",
            "items": {"type": "array", "items": _BOX},
        },
        "materials": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nu": {"type": "number", "exclusiveMinimum": 0},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "zero_tolerance": {"type": "number", "exclusiveMinimum": 0},
        "spectral_tolerance": {"type": "number", "exclusiveMinimum": 0},
        "assume_assumption2": {"type": "boolean"},
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "csv": {"type": "string"},
                "summary": {"type": "string"},
                "trees_csv": {"type": "string"},
                "svg_prefix": {"type": "string"},
            },
        },
    },
}


class ConfigError(ValueError):
    """Configuration file is unreadable or violates the schema."""


@dataclass(frozen=True)
class ExperimentConfig:
    degree: int
    base_elements: tuple
    name: str = "experiment"
    domain_scale: tuple = (math.pi, math.pi)
    refinement: tuple = ()
    nu: float = 1.0
    epsilon: float = 1.0
    zero_tolerance: float = 1e-10
    spectral_tolerance: float = 1e-8
    assume_assumption2: bool = False
    outputs: dict = field(default_factory=dict)

    @property
    def L(self) -> int:
        return len(self.refinement)

    def output(self, key: str) -> str:
        defaults = {
            "csv": "eigenvalues.csv",
            "summary": "summary.json",
            "trees_csv": "trees.csv",
            "svg_prefix": self.name,
        }
        return self.outputs.get(key, defaults[key])


def config_from_dict(data: dict) -> ExperimentConfig:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    m1, m2 = data["base_elements"]
    for l, boxes in enumerate(data.get("refinement", [])):
        f = 2 ** (l + 1)
        for box in boxes:
            i0, i1, j0, j1 = box
            if not (i0 < i1 <= m1 * f and j0 < j1 <= m2 * f):
                raise ConfigError(
                    f"refinement/{l}: box {box} is empty or outside the {m1 * f}x{m2 * f} level-{l + 1} grid"
                )
    mats = data.get("materials", {})
    return ExperimentConfig(
        degree=data["degree"],
        base_elements=(m1, m2),
        name=data.get("name", "experiment"),
        domain_scale=tuple(data.get("domain_scale", (math.pi, math.pi))),
        refinement=tuple(tuple(tuple(b) for b in boxes) for boxes in data.get("refinement", [])),
        nu=mats.get("nu", 1.0),
        epsilon=mats.get("epsilon", 1.0),
        zero_tolerance=data.get("zero_tolerance", 1e-10),
        spectral_tolerance=data.get("spectral_tolerance", 1e-8),
        assume_assumption2=data.get("assume_assumption2", False),
        outputs=dict(data.get("outputs", {})),
    )


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return config_from_dict(data)
