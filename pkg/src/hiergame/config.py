"""Run configuration: a single TOML or JSON file driving the CLI pipeline.

Every default is explicit in the resolved configuration that commands embed
in their reports, so a report fully describes the run that produced it.
"""

from __future__ import annotations

import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from .concepts import MODEL_REGISTRY
from .errors import SchemaViolation
from .estimation import DEFAULT_FIT_COLUMNS, FEATURE_NAMES
from .lattice import KinematicLimits, Task
from .scenario import SyntheticSpec
from .utility import UtilityParams, default_d_star_table

__all__ = ["RunConfig", "load_config"]


@dataclass
class RunConfig:
    input: str | None = None
    out_dir: str = "."
    models: tuple[str, ...] = tuple(sorted(MODEL_REGISTRY))
    seed: int = 0
    split: float = 0.75
    runs: int = 30
    threads: int = 1
    feature_columns: tuple[str, ...] = DEFAULT_FIT_COLUMNS
    synthetic: SyntheticSpec | None = None
    utility: UtilityParams = field(default_factory=UtilityParams)
    kinematics: KinematicLimits = field(default_factory=KinematicLimits)
    rule_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        for c in self.feature_columns:
            if c not in FEATURE_NAMES:
                raise SchemaViolation(f"unknown feature column {c!r}",
                                      field_path="feature_columns")
        if not (0.0 < self.split < 1.0):
            raise SchemaViolation("split must lie in (0, 1)", field_path="split")
        if self.runs < 1 or self.threads < 1:
            raise SchemaViolation("runs and threads must be >= 1",
                                  field_path="runs")

    def resolved(self) -> dict:
        """Fully explicit configuration for embedding in reports."""
        util = self.utility
        kin = self.kinematics
        return {
            "input": self.input,
            "out_dir": self.out_dir,
            "models": list(self.models),
            "seed": self.seed,
            "split": self.split,
            "runs": self.runs,
            "threads": self.threads,
            "feature_columns": list(self.feature_columns),
            "synthetic": None if self.synthetic is None else {
                "n_games": self.synthetic.n_games,
                "model_key": self.synthetic.model_key,
                "beta_true": list(self.synthetic.beta_true),
                "alpha_true": self.synthetic.alpha_true,
                "seed": self.synthetic.seed,
                "template": self.synthetic.template,
                "feature_columns": list(self.synthetic.feature_columns),
                "speed_range": list(self.synthetic.speed_range),
                "dist_range": list(self.synthetic.dist_range),
                "n_actions": self.synthetic.n_actions,
                "n_patterns": self.synthetic.n_patterns,
                "u_hi": self.synthetic.u_hi,
            },
            "utility": {
                "W": list(util.W),
                "d_g": util.d_g,
                "sigma": util.sigma,
                "stop_threshold": util.stop_threshold,
                "ped_vicinity": util.ped_vicinity,
                "d_star": {f"{a.value},{b.value}": v
                           for (a, b), v in sorted(
                               util.d_star_table.items(),
                               key=lambda kv: (kv[0][0].value, kv[0][1].value))},
            },
            "kinematics": {
                "a_min": kin.a_min, "a_max": kin.a_max, "j_max": kin.j_max,
                "dt_traj": kin.dt_traj, "horizon": kin.horizon,
            },
            "rule_overrides": self.rule_overrides,
        }


def _build(d: dict, path: str) -> RunConfig:
    kwargs: dict = {}
    for key in ("input", "out_dir", "seed", "split", "runs", "threads"):
        if key in d:
            kwargs[key] = d[key]
    if "models" in d:
        kwargs["models"] = tuple(d["models"])
    if "feature_columns" in d:
        kwargs["feature_columns"] = tuple(d["feature_columns"])
    if "rule_overrides" in d:
        kwargs["rule_overrides"] = dict(d["rule_overrides"])
    if "synthetic" in d:
        s = dict(d["synthetic"])
        for tup in ("beta_true", "feature_columns", "speed_range", "dist_range"):
            if tup in s:
                s[tup] = tuple(s[tup])
        try:
            kwargs["synthetic"] = SyntheticSpec(**s)
        except (TypeError, KeyError, ValueError) as exc:
            raise SchemaViolation(f"invalid synthetic spec in {path}: {exc}",
                                  field_path="synthetic") from exc
    if "utility" in d:
        u = dict(d["utility"])
        if "W" in u:
            u["W"] = tuple(u["W"])
        if "d_star" in u:
            table = default_d_star_table()
            for key, v in u.pop("d_star").items():
                a, b = key.split(",")
                table[(Task(a), Task(b))] = float(v)
            u["d_star_table"] = table
        try:
            kwargs["utility"] = UtilityParams(**u)
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"invalid utility params in {path}: {exc}",
                                  field_path="utility") from exc
    if "kinematics" in d:
        try:
            kwargs["kinematics"] = KinematicLimits(**d["kinematics"])
        except TypeError as exc:
            raise SchemaViolation(f"invalid kinematics in {path}: {exc}",
                                  field_path="kinematics") from exc
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    """Load a TOML (.toml) or JSON (.json) run configuration."""
    p = Path(path)
    if p.suffix == ".toml":
        with open(p, "rb") as fh:
            d = tomllib.load(fh)
    elif p.suffix == ".json":
        with open(p, "r", encoding="utf-8") as fh:
            d = json.load(fh)
    else:
        raise SchemaViolation(f"unsupported config extension {p.suffix!r}",
                              field_path=str(p))
    if not isinstance(d, dict):
        raise SchemaViolation("config root must be a table/object",
                              field_path=str(p))
    return _build(d, str(p))
