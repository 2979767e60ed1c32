"""Command-line driver: reproducible probing runs from one config document.

A run is described by a versioned JSON spec: dataset source (generator
recipe or CSV + schema), one or two model sections, a scenario, and the
chain configuration. Outputs are a samples CSV, a stats JSON, a plot-ready
long-format CSV, and a manifest that records every resolved seed and
hyperparameter so the run can be reproduced byte for byte.

Exit codes: 0 success, 2 config error, 3 training failure, 4 sampling
failure, 5 oracle-tolerance failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic_lr import lr_data_energy, lr_data_posterior
from .core import ColumnSpec, Dataset, TableSchema, one_hot_encode, read_csv
from .datasets import GENERATORS, make_dataset
from .errors import ConfigError, GibbsProbeError
from .latent import LatentMap, pushforward_probe
from .predictors import (
    LrSchedule,
    MlpSpec,
    PolyKernel,
    RbfKernel,
    fit_forest,
    fit_kernel_svm,
    fit_linear_regression,
    fit_logistic_regression,
    fit_mlp,
    fit_tree,
    load_predictor,
    save_predictor,
)
from .probing import (
    AnchorRegularizer,
    certainty_pin_energy,
    fixed_label_energy,
    model_contrast_energy,
    param_sensitive_energy,
    regression_contrast_energy,
    regression_sensitive_energy,
    risky_energy,
)
from .sampler import ChainConfig, ProbeReport, draw_param_ensemble, run_chains

logger = logging.getLogger(__name__)

SPEC_VERSION = 1

SCENARIOS = ("fixed-label", "contrast", "risky", "param-sensitive", "wine-pin", "latent")

EXIT_CONFIG = 2
EXIT_TRAINING = 3
EXIT_SAMPLING = 4
EXIT_ORACLE = 5


class StageFailure(GibbsProbeError):
    def __init__(self, stage: str, exit_code: int, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.exit_code = exit_code
        self.cause = cause


def derived_seed(master: int, purpose: int, index: int = 0) -> int:
    """Deterministic sub-seed for one purpose within a run."""
    return int(np.random.SeedSequence([int(master), purpose, index]).generate_state(1)[0])


# purposes for derived seeds
SEED_DATASET = 1
SEED_MODEL = 2
SEED_CHAIN = 3
SEED_ENSEMBLE = 4


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def validate_spec(spec: dict) -> dict:
    """Fill defaults and check every scenario-required parameter up front."""
    _require(isinstance(spec, dict), "spec must be a JSON object")
    _require(spec.get("version") == SPEC_VERSION,
             f"spec version must be {SPEC_VERSION}, got {spec.get('version')!r}")
    out = dict(spec)
    out.setdefault("seed", 0)
    _require(isinstance(out["seed"], int), "seed must be an integer")
    _require("dataset" in out, "spec needs a 'dataset' section")
    ds = out["dataset"]
    _require(isinstance(ds, dict) and ("generator" in ds) != ("csv" in ds),
             "dataset must give exactly one of 'generator' or 'csv'")
    if "generator" in ds:
        _require(ds["generator"] in GENERATORS,
                 f"unknown generator {ds['generator']!r}; available: {sorted(GENERATORS)}")
        ds.setdefault("args", {})
    else:
        _require("schema" in ds, "CSV datasets need a 'schema' section")
    models = out.get("models")
    _require(isinstance(models, list) and 1 <= len(models) <= 2,
             "spec needs a 'models' list with one or two entries")
    for m in models:
        _require(isinstance(m, dict) and ("kind" in m) != ("path" in m),
                 "each model needs exactly one of 'kind' or 'path'")
    scenario = out.get("scenario")
    _require(isinstance(scenario, dict) and scenario.get("type") in SCENARIOS,
             f"scenario.type must be one of {SCENARIOS}")
    stype = scenario["type"]
    if stype == "fixed-label":
        _require("target_label" in scenario, "fixed-label scenario needs 'target_label'")
    elif stype == "contrast":
        _require(len(models) == 2, "contrast scenario needs two models")
    elif stype == "risky":
        scenario.setdefault("mode", "norm")
        _require(scenario["mode"] in ("norm", "entropy"), "risky mode must be norm or entropy")
        if scenario["mode"] == "norm":
            scenario.setdefault("alpha", 0.5)
            scenario.setdefault("r", 2.0)
            scenario.setdefault("on", "probability")
    elif stype == "param-sensitive":
        _require("sigma_theta" in scenario, "param-sensitive scenario needs 'sigma_theta'")
        scenario.setdefault("ensemble_size", 32)
    elif stype == "wine-pin":
        _require(len(models) == 2, "wine-pin scenario needs two models (uncertain, pinned)")
        _require("target_class" in scenario, "wine-pin scenario needs 'target_class'")
        scenario.setdefault("pin_weight", 1.0)
    elif stype == "latent":
        _require("decoder" in scenario, "latent scenario needs a 'decoder' section")
        _require("base" in scenario and isinstance(scenario["base"], dict),
                 "latent scenario needs a 'base' scenario")
        _require(scenario["base"].get("type") in SCENARIOS[:-1],
                 "latent base scenario must be a non-latent scenario type")
    _require("chain" in out and isinstance(out["chain"], dict), "spec needs a 'chain' section")
    chain = out["chain"]
    for key in ("tau", "step_size", "n_steps"):
        _require(key in chain, f"chain section needs {key!r}")
    chain.setdefault("burn_in", int(0.2 * chain["n_steps"]))
    chain.setdefault("thinning", 1)
    chain.setdefault("n_chains", 1)
    chain.setdefault("gradient_mode", "exact")
    out.setdefault("output_dir", "probe_out")
    return out


def _load_schema(doc: dict) -> TableSchema:
    cols = [ColumnSpec(c["name"], c["kind"],
                       tuple(c["categories"]) if c.get("categories") else None)
            for c in doc["columns"]]
    return TableSchema(tuple(cols), doc.get("label_column"),
                       tuple(doc["label_categories"]) if doc.get("label_categories") else None)


def build_dataset(spec: dict) -> Dataset:
    ds = spec["dataset"]
    if "generator" in ds:
        args = dict(ds.get("args", {}))
        args.setdefault("seed", derived_seed(spec["seed"], SEED_DATASET))
        return make_dataset(ds["generator"], **args)
    header, rows = read_csv(ds["csv"])
    return one_hot_encode(header, rows, _load_schema(ds["schema"]))


def train_model(cfg: dict, data: Dataset, seed: int):
    if "path" in cfg:
        return load_predictor(cfg["path"])
    kind = cfg["kind"]
    if kind == "linear-regression":
        return fit_linear_regression(data)
    if kind == "logistic-regression":
        return fit_logistic_regression(data, l2=cfg.get("l2", 0.0),
                                       steps=cfg.get("steps", 2000), lr=cfg.get("lr", 0.5))
    if kind == "mlp":
        spec = MlpSpec(tuple(cfg["widths"]), cfg.get("dropout", 0.0))
        schedule = LrSchedule(cfg.get("lr_start", 0.1), cfg.get("lr_decay", 0.9),
                              cfg.get("lr_every", 100))
        return fit_mlp(data, spec, steps=cfg.get("steps", 10000),
                       batch=cfg.get("batch", 128), lr_schedule=schedule,
                       seed=cfg.get("seed", seed))
    if kind == "kernel-svm":
        kcfg = cfg.get("kernel", {"type": "rbf", "gamma": 1.0})
        if kcfg["type"] == "rbf":
            kernel = RbfKernel(kcfg.get("gamma", 1.0))
        elif kcfg["type"] == "poly":
            kernel = PolyKernel(kcfg.get("degree", 3), kcfg.get("coef", 1.0))
        else:
            raise ConfigError(f"unknown kernel type {kcfg['type']!r}")
        return fit_kernel_svm(data, kernel, C=cfg.get("C", 1.0),
                              seed=cfg.get("seed", seed))
    if kind == "decision-tree":
        return fit_tree(data, max_depth=cfg.get("max_depth", 4),
                        seed=cfg.get("seed", seed))
    if kind == "random-forest":
        return fit_forest(data, n_trees=cfg.get("n_trees", 100),
                          max_depth=cfg.get("max_depth", 8), seed=cfg.get("seed", seed))
    raise ConfigError(f"unknown model kind {kind!r}")


def _resolve_anchor(scenario: dict, data: Dataset):
    if "anchor" in scenario and scenario["anchor"] is not None:
        return np.asarray(scenario["anchor"], dtype=float)
    if "anchor_index" in scenario and scenario["anchor_index"] is not None:
        return data.X[int(scenario["anchor_index"])].copy()
    return None


def _regularizer(scenario: dict, anchor) -> AnchorRegularizer | None:
    lam = scenario.get("lambda", 0.0)
    if anchor is None or lam <= 0:
        return None
    weights = scenario.get("per_feature_weights")
    return AnchorRegularizer(anchor, lam=lam, r=scenario.get("r", 2.0),
                             weights=None if weights is None else np.asarray(weights, float))


def build_energy(scenario: dict, models: list, data: Dataset, master_seed: int):
    """Returns (energy, anchor, extras) where extras feed scenario statistics."""
    stype = scenario["type"]
    anchor = _resolve_anchor(scenario, data)
    reg = _regularizer(scenario, anchor)
    extras: dict = {}
    if stype == "fixed-label":
        energy = fixed_label_energy(models[0], scenario["target_label"], reg)
        extras["target_label"] = scenario["target_label"]
    elif stype == "contrast":
        if models[0].is_classifier:
            energy = model_contrast_energy(models[0], models[1], reg,
                                           soft=scenario.get("soft"))
        else:
            energy = regression_contrast_energy(models[0], models[1],
                                                scenario.get("sigma", 1.0), reg)
    elif stype == "risky":
        if scenario["mode"] == "entropy":
            energy = risky_energy(models[0], mode="entropy", reg=reg)
        else:
            energy = risky_energy(models[0], alpha=scenario["alpha"],
                                  r=scenario["r"], mode="norm",
                                  on=scenario["on"], reg=reg)
            extras["alpha"] = scenario["alpha"]
            extras["on"] = scenario["on"]
    elif stype == "param-sensitive":
        ens_seed = scenario.get("ensemble_seed", derived_seed(master_seed, SEED_ENSEMBLE))
        ensemble = draw_param_ensemble(models[0], scenario["sigma_theta"],
                                       scenario["ensemble_size"], ens_seed)
        if models[0].is_classifier:
            energy = param_sensitive_energy(ensemble, models[0], reg,
                                            soft=scenario.get("soft", True))
        else:
            energy = regression_sensitive_energy(ensemble, models[0],
                                                 scenario.get("sigma", 1.0), reg)
        extras["ensemble_seed"] = ens_seed
        extras["sigma_theta"] = scenario["sigma_theta"]
        extras["ensemble_size"] = scenario["ensemble_size"]
    elif stype == "wine-pin":
        energy = (risky_energy(models[0], mode="entropy", reg=reg)
                  + certainty_pin_energy(models[1], scenario["target_class"],
                                         scenario["pin_weight"]))
        extras["target_class"] = scenario["target_class"]
    else:
        raise ConfigError(f"scenario type {stype!r} cannot be built directly")
    return energy, anchor, extras


def _chain_bounds(chain_cfg: dict, feature_names):
    raw = chain_cfg.get("bounds")
    if raw is None:
        return None
    d = len(feature_names)
    bounds = np.column_stack([np.full(d, -np.inf), np.full(d, np.inf)])
    if isinstance(raw, dict):
        index = {n: i for i, n in enumerate(feature_names)}
        for name, (lo, hi) in raw.items():
            if name not in index:
                raise ConfigError(f"bounds name {name!r} is not a feature")
            bounds[index[name], 0] = -np.inf if lo is None else float(lo)
            bounds[index[name], 1] = np.inf if hi is None else float(hi)
    else:
        arr = list(raw)
        if len(arr) != d:
            raise ConfigError("bounds list must have one [lo, hi] entry per feature")
        for i, (lo, hi) in enumerate(arr):
            bounds[i, 0] = -np.inf if lo is None else float(lo)
            bounds[i, 1] = np.inf if hi is None else float(hi)
    return bounds


def _chain_config(chain_cfg: dict, seed: int, bounds) -> ChainConfig:
    return ChainConfig(
        tau=chain_cfg["tau"],
        step_size=chain_cfg["step_size"],
        n_steps=int(chain_cfg["n_steps"]),
        burn_in=int(chain_cfg["burn_in"]),
        thinning=int(chain_cfg["thinning"]),
        seed=seed,
        bounds=bounds,
        gradient_mode=chain_cfg.get("gradient_mode", "exact"),
        smoothing_sigma=chain_cfg.get("smoothing_sigma", 0.1),
        smoothing_draws=int(chain_cfg.get("smoothing_draws", 32)),
        smoothing_frozen_reverse=chain_cfg.get("smoothing_frozen_reverse", True),
        smoothing_corrected=chain_cfg.get("smoothing_corrected", False),
    )


def default_start(data: Dataset, anchor) -> np.ndarray:
    """Nearest training point to the anchor when one exists, else the mean."""
    if anchor is not None:
        idx = int(np.argmin(np.sum((data.X - anchor) ** 2, axis=1)))
        return data.X[idx].copy()
    return data.X.mean(axis=0)


def scenario_stats(stype: str, scenario: dict, models: list, report: ProbeReport,
                   anchor, extras: dict) -> dict:
    stats: dict = {"scenario": stype}
    stats.update({k: v for k, v in extras.items()})
    samples = report.samples
    if samples.shape[0] == 0:
        return stats
    if stype == "fixed-label":
        target = int(extras["target_label"])
        pred = models[0].predict_batch(samples)
        stats["flip_rate"] = float(np.mean(pred == target))
        if models[0].is_classifier:
            stats["mean_target_probability"] = float(
                np.mean(models[0].predict_proba_batch(samples)[:, target]))
        if anchor is not None:
            stats["mean_anchor_distance"] = float(
                np.mean(np.linalg.norm(samples - anchor, axis=1)))
    elif stype == "contrast":
        if models[0].is_classifier:
            p1 = models[0].predict_batch(samples)
            p2 = models[1].predict_batch(samples)
            stats["disagreement_rate"] = float(np.mean(p1 != p2))
        else:
            d = (models[0].predict_batch(samples) - models[1].predict_batch(samples))
            stats["mean_abs_prediction_gap"] = float(np.mean(np.abs(d)))
    elif stype == "risky":
        if models[0].is_classifier:
            proba = models[0].predict_proba_batch(samples)
            stats["mean_class_probabilities"] = [float(v) for v in proba.mean(axis=0)]
            stats["std_class1_probability"] = float(proba[:, 1].std())
            if models[0].n_classes == 2:
                dv = models[0].decision_value_batch(samples)
                stats["mean_abs_decision_value"] = float(np.mean(np.abs(dv)))
        else:
            dv = models[0].predict_batch(samples)
            stats["mean_prediction"] = float(dv.mean())
            stats["std_prediction"] = float(dv.std())
    elif stype == "param-sensitive":
        fresh_seed = derived_seed(int(extras["ensemble_seed"]) % (2 ** 31), SEED_ENSEMBLE, 1)
        fresh = draw_param_ensemble(models[0], extras["sigma_theta"],
                                    extras["ensemble_size"], fresh_seed)
        if models[0].is_classifier:
            center = models[0].predict_batch(samples)
            flips = np.zeros(samples.shape[0])
            for member in fresh.members:
                flips += (member.predict_batch(samples) != center)
            stats["flip_rate"] = float(np.mean(flips / len(fresh.members)))
            stats["fresh_ensemble_seed"] = fresh_seed
    elif stype == "wine-pin":
        target = int(extras["target_class"])
        uncertain = models[0].predict_proba_batch(samples)
        pinned = models[1].predict_proba_batch(samples)
        stats["uncertain_mean_probabilities"] = [float(v) for v in uncertain.mean(axis=0)]
        stats["pinned_mean_target_probability"] = float(np.mean(pinned[:, target]))
        stats["pin_purity_rate"] = float(np.mean(pinned[:, target] >= 1.0 - 1e-9))
    return stats


def long_format_csv(data: Dataset, report: ProbeReport) -> str:
    lines = ["feature,value,source"]
    for j, name in enumerate(data.feature_names):
        for v in data.X[:, j]:
            lines.append(f"{name},{float(v)!r},train")
    for j, name in enumerate(report.feature_names):
        for v in report.samples[:, j]:
            lines.append(f"{name},{float(v)!r},generated")
    return "\n".join(lines) + "\n"


def run(spec: dict, output_dir=None) -> ProbeReport:
    """Execute a probing run end to end and write its artifacts.

    Stages: dataset, training, energy construction, sampling, reporting.
    Stage failures carry the stage name; partially written outputs are
    removed before the failure propagates.
    """
    spec = validate_spec(spec)
    out_dir = Path(output_dir if output_dir is not None else spec["output_dir"])
    master = spec["seed"]

    try:
        data = build_dataset(spec)
    except GibbsProbeError as e:
        raise StageFailure("dataset", EXIT_CONFIG, e)

    try:
        models = [train_model(cfg, data, derived_seed(master, SEED_MODEL, i))
                  for i, cfg in enumerate(spec["models"])]
    except GibbsProbeError as e:
        raise StageFailure("training", EXIT_TRAINING, e)

    scenario = spec["scenario"]
    stype = scenario["type"]
    try:
        if stype == "latent":
            base = dict(scenario["base"])
            energy, anchor, extras = build_energy(base, models, data, master)
            decoder = LatentMap.from_json(json.dumps(scenario["decoder"]))
            energy = pushforward_probe(energy, decoder)
            stats_type = base["type"]
        else:
            decoder = None
            energy, anchor, extras = build_energy(scenario, models, data, master)
            stats_type = stype
    except GibbsProbeError as e:
        raise StageFailure("energy", EXIT_CONFIG, e)

    chain_cfg = spec["chain"]
    try:
        bounds = _chain_bounds(chain_cfg, data.feature_names if decoder is None
                               else tuple(f"z{i}" for i in range(decoder.latent_dim)))
        cfg = _chain_config(chain_cfg, chain_cfg.get("seed", derived_seed(master, SEED_CHAIN)),
                            bounds)
        if decoder is not None:
            x0 = np.asarray(chain_cfg.get("z0", np.zeros(decoder.latent_dim)), dtype=float)
            names = tuple(data.feature_names)
        else:
            x0 = (np.asarray(chain_cfg["x0"], dtype=float) if "x0" in chain_cfg
                  else default_start(data, anchor))
            names = tuple(data.feature_names)
        report = run_chains(x0, energy, cfg, int(chain_cfg["n_chains"]),
                            tuple(f"z{i}" for i in range(decoder.latent_dim))
                            if decoder is not None else names)
        if decoder is not None:
            pushed = (decoder.apply_batch(report.samples) if report.n_samples
                      else np.zeros((0, decoder.output_dim)))
            report = ProbeReport(pushed, report.acceptance_rate, names, report.stats)
    except GibbsProbeError as e:
        raise StageFailure("sampling", EXIT_SAMPLING, e)

    report = report.with_stats(**scenario_stats(stats_type, scenario, models, report,
                                                anchor, extras))

    manifest = {
        "package_version": __version__,
        "spec": spec,
        "resolved": {
            "chain_seed": cfg.seed,
            "model_seeds": [derived_seed(master, SEED_MODEL, i)
                            for i in range(len(spec["models"]))],
            "dataset_seed": (spec["dataset"].get("args", {}).get("seed")
                             if "generator" in spec["dataset"] else None),
        },
    }

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for name, text in (
            ("samples.csv", report.samples_csv()),
            ("stats.json", report.to_json()),
            ("long.csv", long_format_csv(data, report)),
            ("manifest.json", json.dumps(manifest, sort_keys=True, indent=2)),
        ):
            path = out_dir / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
    except OSError as e:
        for path in written:
            path.unlink(missing_ok=True)
        raise StageFailure("reporting", EXIT_SAMPLING, GibbsProbeError(str(e)))
    return report


def _cmd_gen_data(args) -> int:
    kwargs = json.loads(args.args) if args.args else {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    data = make_dataset(args.name, **kwargs)
    lines = [",".join([*data.feature_names, "label"])]
    for i in range(data.n):
        row = [repr(float(v)) for v in data.X[i]]
        row.append(repr(float(data.y[i])) if data.y is not None else "")
        lines.append(",".join(row))
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {data.n} rows to {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if cfg.get("version") != SPEC_VERSION:
        raise ConfigError(f"train config version must be {SPEC_VERSION}")
    if "dataset" not in cfg or "model" not in cfg or "out" not in cfg:
        raise ConfigError("train config needs 'dataset', 'model' and 'out'")
    seed = cfg.get("seed", 0)
    data = build_dataset({"dataset": cfg["dataset"], "seed": seed})
    try:
        model = train_model(cfg["model"], data, derived_seed(seed, SEED_MODEL, 0))
    except GibbsProbeError as e:
        raise StageFailure("training", EXIT_TRAINING, e)
    save_predictor(model, cfg["out"])
    print(f"trained {model.kind} -> {cfg['out']}")
    return 0


def _cmd_probe(args) -> int:
    spec = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if "spec" in spec and "package_version" in spec:
        spec = spec["spec"]  # accept a manifest document directly
    report = run(spec, args.output_dir)
    print(f"generated {report.n_samples} samples "
          f"(acceptance rate {report.acceptance_rate:.3f})")
    for key, value in sorted(report.stats.items()):
        print(f"  {key}: {value}")
    return 0


def _cmd_report(args) -> int:
    header, rows = read_csv(args.samples)
    samples = np.array([[float(v) for v in row] for row in rows], dtype=float)
    samples = samples.reshape(len(rows), len(header))
    report = ProbeReport(samples, acceptance_rate=float("nan"),
                         feature_names=tuple(header))
    Path(args.out).write_text(report.to_json(), encoding="utf-8")
    print(f"recomputed stats for {report.n_samples} samples -> {args.out}")
    return 0


def _cmd_verify_oracle(args) -> int:
    from .datasets import gaussian_regression
    from .sampler import run_chain

    data = gaussian_regression(n=args.n, dim=args.dim, seed=args.seed)
    tau = args.tau
    posterior = lr_data_posterior(data, args.w, tau)
    energy = lr_data_energy(data, args.w, tau)

    lam_max = float(np.linalg.eigvalsh(posterior.precision).max())
    cfg = ChainConfig(tau=tau, step_size=0.5 / (lam_max * tau), n_steps=args.steps,
                      burn_in=args.steps // 8, thinning=1, seed=args.seed + 1)
    report = run_chain(posterior.mean.copy(), energy, cfg)

    samples = report.samples
    n_batches = 40
    batches = np.array_split(samples, n_batches)
    batch_means = np.array([b.mean(axis=0) for b in batches])
    se = batch_means.std(axis=0, ddof=1) / np.sqrt(n_batches)
    mean_err_se = np.abs(samples.mean(axis=0) - posterior.mean) / se
    target_cov = posterior.covariance()
    emp_cov = np.cov(samples.T)
    cov_err = float(np.linalg.norm(emp_cov - target_cov) / np.linalg.norm(target_cov))

    print(f"mean error (in standard-error units, per coordinate): "
          f"{np.array2string(mean_err_se, precision=2)}")
    print(f"covariance relative Frobenius error: {cov_err:.4f}")
    print(f"acceptance rate: {report.acceptance_rate:.3f}")
    ok = bool(np.all(mean_err_se <= 3.0) and cov_err <= 0.10)
    print("oracle check:", "PASS" if ok else "FAIL")
    return 0 if ok else EXIT_ORACLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gibbsprobe",
                                     description="Probe trained models by Gibbs sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="emit a synthetic dataset as CSV")
    p.add_argument("--name", required=True, choices=sorted(GENERATORS))
    p.add_argument("--args", default="", help="generator arguments as a JSON object")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train", help="train one model from a config document")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("probe", help="run a probing spec end to end")
    p.add_argument("--config", required=True, help="probe spec or manifest JSON")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(fn=_cmd_probe)

    p = sub.add_parser("report", help="recompute statistics from a samples CSV")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("verify-oracle",
                       help="cross-check the sampler against the closed-form case")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--w", type=float, default=2.5)
    p.add_argument("--steps", type=int, default=40000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_verify_oracle)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("GIBBSPROBE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except GibbsProbeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SAMPLING


if __name__ == "__main__":
    sys.exit(main())
