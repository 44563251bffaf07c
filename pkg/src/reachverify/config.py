"""Run configuration: one YAML document with nested sections.

Every section is optional; missing keys take the defaults below, which
reproduce the single-vehicle scenario envelope and vehicle constants.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field

import yaml

from .dynamics import VehicleConstants
from .errors import ConfigInvalid
from .scenario import DEG, ScenarioSpec
from .surrogate import OperatorConfig

ORACLES = ("linearized", "interval", "sampled")

DEFAULT_SECTIONS = {
    "generate": {"n_experiments": 30000, "dataset": "dataset.csv"},
    "train": {"dataset": None},
    "verify": {
        # one entry per vehicle, ego first; background entries take the full control bounds
        "vehicles": [{
            "role": "ego",
            "state": {"centers": [5.0, 0.0, 0.0, 6.0, 0.0, 0.0],
                      "radii": [0.5, 0.25, 0.25 * DEG, 0.25, 0.05, 0.01]},
            "control": {"centers": [0.0, 0.0], "radii": [0.1, 0.05 * DEG]},
        }],
    },
    "simulate": {
        "duration": 10.0,
        "budget": 1.0,
        "n_lanes": 3,
        "perception_radii": [0.5, 0.25, 0.25 * DEG, 0.25, 0.05, 0.01],
        "control_radii": [0.1, 0.05 * DEG],
        "min_speed": 1.0,
        "ego": {"x": 0.0, "lane": 1, "v": 8.0},
        "background": [{"x": 15.0, "lane": 1, "v": 5.0}],
    },
    "evaluate": {"n_experiments": 100, "timing_repeats": 5},
    "safety": {"y_bounds": None, "check_s2": True},
}


def _merge(base: dict, override: dict, where: str) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in base:
            raise ConfigInvalid(f"unknown key '{where}{k}'")
        if isinstance(base[k], dict) and isinstance(v, dict) and base[k]:
            out[k] = _merge(base[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "runs/default"
    oracle: str = "linearized"
    sampled_n: int = 1000
    model: str = "models/operator.rvop"
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    constants: VehicleConstants = field(default_factory=VehicleConstants)
    operator: OperatorConfig = field(default_factory=OperatorConfig)
    sections: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_SECTIONS))

    def validate(self) -> RunConfig:
        if self.oracle not in ORACLES:
            raise ConfigInvalid(f"oracle must be one of {ORACLES}, got {self.oracle!r}")
        self.scenario.validate()
        self.operator.validate()
        return self

    def section(self, name: str) -> dict:
        return self.sections[name]

    def to_dict(self) -> dict:
        d = {"seed": self.seed, "out": self.out, "oracle": self.oracle, "sampled_n": self.sampled_n,
             "model": self.model, "scenario": self.scenario.to_dict(), "constants": asdict(self.constants),
             "operator": asdict(self.operator)}
        d.update(copy.deepcopy(self.sections))
        return d

    @classmethod
    def from_dict(cls, d: dict | None) -> RunConfig:
        d = dict(d or {})
        top = {k: d.pop(k) for k in ("seed", "out", "oracle", "sampled_n", "model") if k in d}
        try:
            scenario = ScenarioSpec.from_dict(d.pop("scenario", {}) or {})
            constants = VehicleConstants(**(d.pop("constants", {}) or {}))
            operator = OperatorConfig.from_dict(d.pop("operator", {}) or {})
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(str(exc)) from exc
        sections = _merge(DEFAULT_SECTIONS, d, "")
        return cls(scenario=scenario, constants=constants, operator=operator, sections=sections, **top)


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{path}: top level must be a mapping")
    return RunConfig.from_dict(raw).validate()


def config_hash(cfg: RunConfig) -> str:
    """sha256 of the canonical JSON form.

    File locations (``out``, ``model`` and the dataset paths) are excluded so
    reruns elsewhere match; reports record content hashes instead.
    """
    d = cfg.to_dict()
    for k in ("out", "model"):
        d.pop(k)
    d["generate"].pop("dataset")
    d["train"].pop("dataset")
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()
