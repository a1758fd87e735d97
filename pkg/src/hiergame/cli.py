"""Command-line pipeline: generate, solve, estimate, evaluate, sample-traj.

Exit codes: 0 success (possibly with warnings), 1 I/O error, 2 config or
spec error, 3 internal assertion. Verbosity via the QR_LOG environment
variable (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import estimation as est
from .concepts import MODEL_REGISTRY, Metamodel
from .config import RunConfig, load_config
from .errors import (HiergameError, ParseError, SchemaViolation,
                     TemplateUnsatisfiable)
from .estimation import FEATURE_NAMES, ModelReport
from .lattice import SamplingScheme, generate_trajectory, sample_endpoints
from .scenario import (ManeuverRuleTable, decisions_for_model,
                       generate_synthetic, parse_scenarios, write_scenarios)

log = logging.getLogger("hiergame")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


def _setup_logging() -> None:
    level = os.environ.get("QR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.models:
        cfg.models = tuple(k.strip() for k in args.models.split(",") if k.strip())
    if args.seed is not None:
        cfg.seed = args.seed
        if cfg.synthetic is not None:
            cfg.synthetic.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.out:
        cfg.out_dir = args.out
    if getattr(args, "input", None):
        cfg.input = args.input
    return cfg


def _dataset(cfg: RunConfig):
    if not cfg.input:
        raise SchemaViolation("no input dataset configured", field_path="input")
    return parse_scenarios(cfg.input, strict=True)


def _fnum(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_generate(cfg: RunConfig) -> int:
    if cfg.synthetic is None:
        raise SchemaViolation("generate requires a synthetic spec",
                              field_path="synthetic")
    records, stats = generate_synthetic(cfg.synthetic, return_stats=True)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = out / "dataset.jsonl"
    write_scenarios(records, dataset)
    manifest = {
        "dataset": dataset.name,
        "n_games": stats["n_games"],
        "regenerated": stats["regenerated"],
        "config": cfg.resolved(),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %d games to %s", stats["n_games"], dataset)
    return EXIT_OK


def _model_report(decisions, model, cfg: RunConfig) -> ModelReport:
    rep = ModelReport(model_key=model.key)
    fit = est.fit_model(decisions, model, cfg.feature_columns)
    rep.discarded = fit.discarded
    rep.alpha = fit.alpha
    rep.n_records = fit.glm.n_obs
    col_idx = [FEATURE_NAMES.index(c) for c in cfg.feature_columns]
    lams = []
    for d in decisions:
        lam, _, clamped = est.predict_lambda(fit.glm, d.features[col_idx])
        if not clamped:
            lams.append(lam)
    if lams:
        lams = np.asarray(lams)
        rep.lambda_mean = float(lams.mean())
        rep.lambda_se = float(lams.std(ddof=1) / np.sqrt(len(lams))) \
            if len(lams) > 1 else 0.0
    rep.aic = est.model_aic(fit.glm, model)
    mean, std, _ = est.evaluate_predictive(
        decisions, model, split=cfg.split, runs=cfg.runs, seed=cfg.seed,
        feature_columns=cfg.feature_columns)
    rep.test_loglik_mean = mean
    rep.test_loglik_std = std
    return rep


_REPORT_COLUMNS = ("model_key", "lambda_mean", "lambda_se", "aic", "alpha",
                   "test_loglik_mean", "test_loglik_std", "discarded",
                   "n_records", "status")


def _write_reports(reports: list[ModelReport], cfg: RunConfig,
                   stem: str) -> None:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{stem}.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_REPORT_COLUMNS)
        for r in reports:
            w.writerow([r.model_key, _fnum(r.lambda_mean), _fnum(r.lambda_se),
                        _fnum(r.aic), _fnum(r.alpha),
                        _fnum(r.test_loglik_mean), _fnum(r.test_loglik_std),
                        r.discarded, r.n_records, r.status])
    payload = {
        "reports": [
            {c: getattr(r, c) for c in _REPORT_COLUMNS} for r in reports
        ],
        "config": cfg.resolved(),
    }
    with open(out / f"{stem}.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _run_models(cfg: RunConfig, with_predictive: bool) -> list[ModelReport]:
    records = _dataset(cfg)
    reports = []
    for key in cfg.models:
        if key not in MODEL_REGISTRY:
            log.warning("unknown model key %r", key)
            reports.append(ModelReport(model_key=key, status="UNKNOWN_MODEL"))
            continue
        model = MODEL_REGISTRY[key]
        try:
            decisions = decisions_for_model(
                records, model, rules=ManeuverRuleTable(cfg.rule_overrides),
                params=cfg.utility, limits=cfg.kinematics, seed=cfg.seed)
            if with_predictive:
                rep = _model_report(decisions, model, cfg)
            else:
                rep = ModelReport(model_key=key)
                fit = est.fit_model(decisions, model, cfg.feature_columns)
                rep.discarded = fit.discarded
                rep.alpha = fit.alpha
                rep.n_records = fit.glm.n_obs
                rep.aic = est.model_aic(fit.glm, model)
        except Exception as exc:
            log.warning("model %s failed: %s", key, exc)
            rep = ModelReport(model_key=key, status=f"FAILED: {exc}")
        reports.append(rep)
    reports.sort(key=lambda r: (math.isnan(r.aic), r.aic, r.model_key))
    return reports


def cmd_estimate(cfg: RunConfig) -> int:
    _write_reports(_run_models(cfg, with_predictive=False), cfg, "estimate")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    records = _dataset(cfg)
    if len(records) < 40:
        raise SchemaViolation("evaluate requires >= 40 games",
                              field_path="input")
    _write_reports(_run_models(cfg, with_predictive=True), cfg, "evaluate")
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    """Debug view: each model's pure solutions and the observed regret."""
    records = _dataset(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "solve.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["game_id", "model_key", "agent", "observed_action",
                    "solution_actions", "epsilon"])
        for key in cfg.models:
            model = MODEL_REGISTRY.get(key)
            if model is None:
                log.warning("unknown model key %r", key)
                continue
            decisions = decisions_for_model(
                records, model, rules=ManeuverRuleTable(cfg.rule_overrides),
                params=cfg.utility, limits=cfg.kinematics, seed=cfg.seed)
            recs, _ = est.compute_regrets(decisions, model)
            for r in recs:
                if r.level != 1:
                    continue
                w.writerow([r.game_id, key, r.agent_id, r.observed_action,
                            " ".join(str(a) for a in r.solution_actions),
                            repr(r.epsilon)])
    return EXIT_OK


def cmd_sample_traj(cfg: RunConfig) -> int:
    """Debug view: lattice trajectories of the first game's agents."""
    records = _dataset(cfg)
    rules = ManeuverRuleTable(cfg.rule_overrides)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rec = records[0]
    with open(out / "trajectories.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["game_id", "agent_id", "maneuver_id", "scheme_tag",
                    "t", "x", "y", "v"])
        for agent in rec.agents:
            for scheme in SamplingScheme:
                for maneuver in rules.actions_for(agent):
                    try:
                        eps = sample_endpoints(agent, maneuver, scheme,
                                               seed=cfg.seed,
                                               limits=cfg.kinematics)
                    except HiergameError:
                        continue
                    for ep in eps:
                        try:
                            traj = generate_trajectory(
                                agent, ep, limits=cfg.kinematics,
                                maneuver_id=maneuver.name, scheme_tag=scheme)
                        except HiergameError:
                            continue
                        for t, x, y, v in traj.points:
                            w.writerow([rec.game_id, agent.agent_id,
                                        maneuver.name, scheme.value,
                                        repr(t), repr(x), repr(y), repr(v)])
    return EXIT_OK


# ---------------------------------------------------------------------------

_COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "estimate": cmd_estimate,
    "evaluate": cmd_evaluate,
    "sample-traj": cmd_sample_traj,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hiergame",
        description="Hierarchical driving games: generation, solving, and "
                    "bounded-rationality estimation.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML or JSON run configuration")
        sp.add_argument("--models", help="comma-separated model keys")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--input", help="dataset .jsonl path")
    return p


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        return _COMMANDS[args.command](cfg)
    except (SchemaViolation, TemplateUnsatisfiable, KeyError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (HiergameError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
