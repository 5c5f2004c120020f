"""Config-driven experiment runner, synthetic benchmark generator and chart-data export.

An experiment applies a preprocessing recipe, splits the rows 80/20 by
stratum, fits scaling, resampling, the DBN autoencoder and the Wald baseline
on the training rows only, scores every (model, top-k) cell on the holdout,
and compares the two rankings by stratified k-fold cross-validation over all
rows restricted to the frozen feature subsets.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import shutil
import tempfile
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from .attribution import ImportanceVector, top_k
from .baselines import wald_rank_classification, wald_rank_regression
from .core import Dataset, RngStream, dataset_from_arrays, read_csv
from .dbna import DBNAutoencoder
from .exceptions import ConfigError, DataError, NumericalError, StageError
from .metrics import (
    T_TESTS, ModelComparison, TrainingPrep, higher_is_better, kfold_cv, score,
    select_better_method,
)
from .models import CLASSIFIERS, REGRESSORS, make_model, predict
from .preprocess import (
    Standardizer, apply_recipe, load_recipe, numeric_columns, random_over_under,
    smote_balance, stratified_folds, stratified_split,
)

TASKS = ("classification", "regression")
DEFAULT_MODELS = {
    "classification": ["logistic", "tree", "mlp"],
    "regression": ["linear", "ridge", "lasso", "svr", "tree", "mlp"],
}
DEFAULT_METRIC = {"classification": "auc", "regression": "smape"}
DBNA_DEFAULTS = {
    "hidden_sizes": [8],
    "learning_rate": 0.2,
    "n_epochs": 100,
    "cd_steps": 1,
    "batch_size": 32,
    "init_weight_scale": 0.01,
    "zero_column": "error",
}
_RANDOMISED_MODELS = {"mlp"}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment needs; unset options take the documented defaults."""

    dataset: str
    recipe: str
    task: str = ""
    dbna: dict = field(default_factory=dict)
    top_k: tuple = (10,)
    models: tuple = ()
    model_params: dict = field(default_factory=dict)
    cv_folds: int = 10
    seed: int = 0
    output_dir: str = "results"
    train_fraction: float = 0.8
    metric: str = ""
    mape_as_fraction: bool = False
    t_test: str = "pooled"
    wald_ridge: object = "auto"
    run_cv: bool = True
    cv_baseline: bool = True

    def __post_init__(self):
        recipe = None
        if not self.task:
            recipe = load_recipe(self.recipe)
            object.__setattr__(self, "task", recipe.task or "classification")
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        unknown = set(self.dbna) - set(DBNA_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown dbna option(s): {sorted(unknown)}")
        dbna = {**DBNA_DEFAULTS, **self.dbna}
        dbna["hidden_sizes"] = [int(h) for h in dbna["hidden_sizes"]]
        if not dbna["hidden_sizes"] or min(dbna["hidden_sizes"]) < 1:
            raise ConfigError("dbna.hidden_sizes must be a non-empty list of positive ints")
        object.__setattr__(self, "dbna", dbna)
        ks = (self.top_k,) if isinstance(self.top_k, int) else tuple(int(k) for k in self.top_k)
        if not ks or min(ks) < 1:
            raise ConfigError("top_k must hold positive integers")
        object.__setattr__(self, "top_k", ks)
        table = CLASSIFIERS if self.task == "classification" else REGRESSORS
        models = tuple(self.models) or tuple(DEFAULT_MODELS[self.task])
        bad = [m for m in models if m not in table]
        if bad:
            raise ConfigError(f"model(s) {bad} not available for {self.task}; choose from {sorted(table)}")
        object.__setattr__(self, "models", models)
        params = {}
        for m in models:
            given = dict(self.model_params.get(m, {}))
            try:
                est = make_model(m, self.task, **given)
            except TypeError as exc:
                raise ConfigError(f"model_params[{m!r}]: {exc}") from exc
            full = est.get_params()
            full.pop("random_state", None)
            params[m] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in full.items()}
        object.__setattr__(self, "model_params", params)
        if int(self.cv_folds) < 2:
            raise ConfigError("cv_folds must be >= 2")
        object.__setattr__(self, "cv_folds", int(self.cv_folds))
        if not 0 < float(self.train_fraction) < 1:
            raise ConfigError("train_fraction must lie strictly between 0 and 1")
        metric = self.metric or DEFAULT_METRIC[self.task]
        if metric not in ("auc", "smape", "mape"):
            raise ConfigError(f"unknown metric {metric!r}")
        if (metric == "auc") != (self.task == "classification"):
            raise ConfigError(f"metric {metric!r} does not fit task {self.task!r}")
        object.__setattr__(self, "metric", metric)
        if self.t_test not in T_TESTS:
            raise ConfigError(f"t_test must be one of {sorted(T_TESTS)}")
        if not (self.wald_ridge in (None, "auto") or isinstance(self.wald_ridge, (int, float))):
            raise ConfigError("wald_ridge must be null, 'auto' or a number")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if recipe is None:
            load_recipe(self.recipe)  # fail early on a bad recipe reference

    @classmethod
    def from_dict(cls, d, base_dir=None):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        for key in ("dataset", "recipe"):
            if key not in d:
                raise ConfigError(f"config is missing required key {key!r}")
        d = dict(d)
        if base_dir is not None:
            for key in ("dataset", "recipe", "output_dir"):
                if key in d and isinstance(d[key], str):
                    p = Path(d[key])
                    # bare recipe names refer to shipped recipes
                    if key == "recipe" and p.suffix != ".json":
                        continue
                    if not p.is_absolute():
                        d[key] = str(Path(base_dir) / p)
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path}: invalid JSON ({exc})") from exc
        return cls.from_dict(d, base_dir=path.parent)

    def to_dict(self):
        d = asdict(self)
        d["top_k"] = list(self.top_k)
        d["models"] = list(self.models)
        return d


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    config: ExperimentConfig
    dataset: dict
    split: dict
    standardization: Optional[dict]
    dbna: DBNAutoencoder
    ega: ImportanceVector
    wald: ImportanceVector
    wald_stabilized: bool
    holdout: list = field(default_factory=list)
    cv: list = field(default_factory=list)
    decisions: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def to_dict(self):
        return _finite({
            "config": self.config.to_dict(),
            "dataset": self.dataset,
            "split": self.split,
            "standardization": self.standardization,
            "dbna": {"layer_sizes": list(self.dbna.model_.layer_sizes),
                     "final_reconstruction_error": [float(e[-1]) for e in self.dbna.reconstruction_errors_]},
            "importance": {"ega": self.ega.to_dict(), "wald": self.wald.to_dict(),
                           "wald_stabilized": self.wald_stabilized},
            "holdout": self.holdout,
            "cv": self.cv,
            "decisions": self.decisions,
            "files": sorted(self.files),
        })

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _finite(obj):
    """JSON has no infinities; encode them as strings."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.generic):
        return _finite(obj.item())
    return obj


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _prepare_training(train: Dataset, holdout: Dataset, fitted_steps, task, rng: RngStream):
    """Fit the recipe's scaling/resampling steps on ``train`` and apply scaling to ``holdout``."""
    stats = None
    Xtr, Xho = train.X, holdout.X
    standardize = any(s["op"] == "standardize" for s in fitted_steps)
    resample = next((s for s in fitted_steps if s["op"] == "resample"), None)
    if standardize:
        cols = numeric_columns(train)
        if cols:
            sc = Standardizer(columns=cols).fit(Xtr)
            Xtr, Xho = sc.transform(Xtr), sc.transform(Xho)
            stats = sc.stats_.to_dict()
    train = replace(train, features=pd.DataFrame(Xtr, columns=train.features.columns))
    holdout = replace(holdout, features=pd.DataFrame(Xho, columns=holdout.features.columns))
    if resample is not None:
        if task != "classification":
            raise ConfigError("resampling only applies to classification recipes")
        if resample.get("method", "smote") == "smote":
            train = smote_balance(train, rng, resample.get("k", 5))
        else:
            train = random_over_under(train, resample["positive_fraction"], rng)
    prep = TrainingPrep(standardize=standardize,
                        resample=None if resample is None else {k: v for k, v in resample.items() if k != "op"})
    return train, holdout, stats, prep


def _wald(X, y, task, ridge, names):
    if task == "classification":
        r = wald_rank_classification(X, y, feature_names=names)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            r = wald_rank_regression(X, y, feature_names=names, ridge=ridge)
    return r


def _model(kind, cfg: ExperimentConfig, rng: RngStream):
    params = dict(cfg.model_params[kind])
    if kind in _RANDOMISED_MODELS:
        params["random_state"] = rng
    return make_model(kind, cfg.task, **params)


def rank_features(cfg: ExperimentConfig):
    """Run the recipe, split and training-side stages; return everything fitted so far."""
    master = RngStream(cfg.seed)
    split_rng, resample_rng, dbna_rng, models_rng, folds_rng, cv_rng = master.spawn(6)
    recipe = load_recipe(cfg.recipe)
    with _Stage("load"):
        target = next((s["column"] for s in recipe.steps if s["op"] == "set_target"), None)
        if target is None:
            raise ConfigError("recipe has no set_target step")
        raw = read_csv(cfg.dataset)
        data_hash = _sha256(cfg.dataset)
    with _Stage("recipe"):
        data = apply_recipe(raw, recipe.structural(), RngStream(cfg.seed))
        for k in cfg.top_k:
            if k > data.n_features:
                raise ConfigError(f"top_k {k} exceeds the {data.n_features} features after the recipe")
    with _Stage("split"):
        train_idx, hold_idx = stratified_split(data.y, cfg.train_fraction, split_rng, cfg.task)
        train, holdout, stats, prep = _prepare_training(
            data.take(train_idx), data.take(hold_idx), recipe.fitted(), cfg.task, resample_rng)
    names = data.feature_names
    with _Stage("dbna"):
        d = cfg.dbna
        dbna = DBNAutoencoder(hidden_sizes=tuple(d["hidden_sizes"]), learning_rate=d["learning_rate"],
                              n_epochs=d["n_epochs"], cd_steps=d["cd_steps"], batch_size=d["batch_size"],
                              init_weight_scale=d["init_weight_scale"], zero_column=d["zero_column"],
                              random_state=dbna_rng)
        dbna.fit(train.X, feature_names=names)
    with _Stage("wald"):
        ranking = _wald(train.X, train.y, cfg.task, cfg.wald_ridge, names)
    info = {"path": str(cfg.dataset), "sha256": data_hash, "n_samples": data.n_samples,
            "n_features": data.n_features, "feature_names": names, "target": data.target_name}
    split = {"n_train": int(train_idx.shape[0]), "n_holdout": int(hold_idx.shape[0]),
             "n_train_after_resampling": train.n_samples}
    return {
        "data": data, "train": train, "holdout": holdout, "prep": prep, "stats": stats,
        "dbna": dbna, "wald": ranking, "dataset": info, "split": split,
        "rngs": {"models": models_rng, "folds": folds_rng, "cv": cv_rng},
    }


def _holdout_table(cfg, train, holdout, subsets, rng):
    rows = []
    for model_kind in cfg.models:
        row = {"model": model_kind, "metric": cfg.metric, "scores": {}}
        for label, cols in subsets:
            m = _model(model_kind, cfg, rng.child())
            m.fit(train.X[:, cols], train.y)
            row["scores"][label] = score(cfg.metric, holdout.y, predict(m, holdout.X[:, cols]),
                                         cfg.mape_as_fraction)
        rows.append(row)
    return rows


def _cv_tables(cfg, data, prep, subsets, folds_rng, cv_rng):
    folds = stratified_folds(data.y, cfg.cv_folds, folds_rng, cfg.task)
    rows = []
    for model_kind in cfg.models:
        for label, cols in subsets:
            fs = kfold_cv(data, cols, model_kind, cfg.cv_folds, cv_rng.child(), metric=cfg.metric,
                          task=cfg.task, model_params=_cv_params(cfg, model_kind), prep=prep,
                          method=label, mape_as_fraction=cfg.mape_as_fraction, folds=folds)
            rows.append(fs)
    return rows


def _cv_params(cfg, kind):
    params = dict(cfg.model_params[kind])
    if kind in _RANDOMISED_MODELS:
        params["random_state"] = cfg.seed
    return params


def run_experiment(cfg: ExperimentConfig, output_dir=None, persist=True):
    """Run the full comparison and, if ``persist``, write all outputs atomically.

    Raises
    ------
    StageError
        Wrapping the original error, with the failing stage's name.
    """
    out = Path(output_dir or cfg.output_dir)
    fitted = rank_features(cfg)
    data, train, holdout = fitted["data"], fitted["train"], fitted["holdout"]
    ega_imp = fitted["dbna"].importance_
    wald_imp = fitted["wald"].as_importance()
    rngs = fitted["rngs"]

    report = ComparisonReport(cfg, fitted["dataset"], fitted["split"], fitted["stats"], fitted["dbna"],
                              ega_imp, wald_imp, fitted["wald"].stabilized)
    all_cols = list(range(data.n_features))
    with _Stage("holdout"):
        subsets = [("none", all_cols)]
        for k in cfg.top_k:
            subsets += [(f"ega_top{k}", top_k(ega_imp, k)[0]), (f"wald_top{k}", top_k(wald_imp, k)[0])]
        report.holdout = _holdout_table(cfg, train, holdout, subsets, rngs["models"])
    if cfg.run_cv:
        with _Stage("cross_validation"):
            cv_subsets = subsets if cfg.cv_baseline else subsets[1:]
            scores = _cv_tables(cfg, data, fitted["prep"], cv_subsets, rngs["folds"], rngs["cv"])
            by_key = {(fs.model, fs.method): fs for fs in scores}
            test = T_TESTS[cfg.t_test]
            labels = ("EGA", "Wald")
            for k in cfg.top_k:
                comparisons = []
                for model_kind in cfg.models:
                    a, b = by_key[(model_kind, f"ega_top{k}")], by_key[(model_kind, f"wald_top{k}")]
                    tt = test(a, b)
                    comparisons.append(ModelComparison(model_kind, a.mean, b.mean, tt))
                    entry = {"model": model_kind, "k": k, "metric": cfg.metric,
                             "ega": a.to_dict(), "wald": b.to_dict(), "t_test": tt.to_dict()}
                    if (model_kind, "none") in by_key:
                        entry["none"] = by_key[(model_kind, "none")].to_dict()
                    report.cv.append(entry)
                try:
                    decision = select_better_method(comparisons, cfg.task, labels)
                    report.decisions.append({"k": k, **decision.to_dict()})
                except DataError as exc:
                    report.decisions.append({"k": k, "winner": None, "rationale": str(exc)})
    if persist:
        with _Stage("persist"):
            write_outputs(report, out)
    return report


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------


def _tables_rows(report: ComparisonReport):
    cfg = report.config
    cv = {(e["model"], e["k"]): e for e in report.cv}
    rows = []
    for h in report.holdout:
        for k in cfg.top_k:
            e = cv.get((h["model"], k))
            rows.append({
                "model": h["model"], "k": k, "metric": cfg.metric,
                "holdout_no_selection": h["scores"]["none"],
                "holdout_ega": h["scores"][f"ega_top{k}"],
                "holdout_wald": h["scores"][f"wald_top{k}"],
                "cv_mean_no_selection": e["none"]["mean"] if e and "none" in e else "",
                "cv_mean_ega": e["ega"]["mean"] if e else "",
                "cv_mean_wald": e["wald"]["mean"] if e else "",
                "t": e["t_test"]["t"] if e else "",
                "p": e["t_test"]["p"] if e else "",
                "df": e["t_test"]["df"] if e else "",
                "significant_at_5pct": e["t_test"]["significant_at_5pct"] if e else "",
            })
    return rows


def _write_csv_rows(path, rows):
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def write_outputs(report: ComparisonReport, out_dir):
    """Write every output into a scratch directory, then move it into place."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir.parent))
    try:
        files = ["tables.csv", "importance_ega.csv", "importance_wald.csv", "dbna.json"]
        _write_csv_rows(scratch / "tables.csv", _tables_rows(report))
        report.ega.to_csv(scratch / "importance_ega.csv")
        report.wald.to_csv(scratch / "importance_wald.csv")
        report.dbna.model_.save(scratch / "dbna.json")
        for k in report.config.top_k:
            for label, imp in (("ega", report.ega), ("wald", report.wald)):
                name = f"chart_{label}_top{k}.csv"
                emit_chart_data(imp, k, scratch / name)
                files.append(name)
        report.files = files + ["report.json"]
        (scratch / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in report.files:
            shutil.move(str(scratch / name), str(out_dir / name))
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    return out_dir


def emit_chart_data(importance: ImportanceVector, k, path):
    """Top-``k`` features in descending order with a running cumulative percent."""
    idx, _ = top_k(importance, k)
    names = importance.names
    cum = np.cumsum(importance.scores[idx])
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "feature", "percent", "cumulative_percent"])
            for r, (i, c) in enumerate(zip(idx, cum), start=1):
                w.writerow([r, names[i], repr(float(importance.scores[i])), repr(float(c))])
    except OSError as exc:
        raise DataError(f"cannot write chart data to {path}: {exc}") from exc
    return Path(path)


# ---------------------------------------------------------------------------
# Synthetic benchmark
# ---------------------------------------------------------------------------


def generate_synthetic(n_samples=500, n_informative=3, n_noise=3, task="classification", seed=0,
                       loading=(0.8, 0.9), noise_scale=0.5):
    """Planted-signal dataset and the boolean mask of informative columns.

    Informative columns share a latent factor, ``x = a z + sqrt(1 - a^2) e``
    with loadings ``a`` drawn from ``loading``; noise columns are independent
    standard normals. The target is a linear-plus-quadratic function of the
    informative columns only (thresholded at its median for classification).
    Columns are shuffled so position carries no information.

    Returns
    -------
    dataset : Dataset
    mask : ndarray of bool, shape (n_informative + n_noise,)
    """
    if n_samples < 2 or n_informative < 1 or n_noise < 0:
        raise DataError("need n_samples >= 2, n_informative >= 1 and n_noise >= 0")
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}")
    g = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    z = g.standard_normal(n_samples)
    a = g.uniform(*loading, size=n_informative)
    inf = a * z[:, None] + np.sqrt(1.0 - a**2) * g.standard_normal((n_samples, n_informative))
    noise = g.standard_normal((n_samples, n_noise))
    coef = g.uniform(0.5, 1.5, size=n_informative)
    f = inf @ coef + 0.2 * np.sum(inf**2, axis=1)
    f = f + noise_scale * g.standard_normal(n_samples)
    y = (f > np.median(f)).astype(np.int64) if task == "classification" else f
    X = np.hstack([inf, noise])
    mask = np.r_[np.ones(n_informative, bool), np.zeros(n_noise, bool)]
    perm = g.permutation(X.shape[1])
    X, mask = X[:, perm], mask[perm]
    names = [f"x{i}" for i in range(X.shape[1])]
    return dataset_from_arrays(X, y, names, target_name="y"), mask


__all__ = [
    "ComparisonReport", "ExperimentConfig", "emit_chart_data", "generate_synthetic",
    "rank_features", "run_experiment", "write_outputs",
]
