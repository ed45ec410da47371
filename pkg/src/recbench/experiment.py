"""Declarative end-to-end experiments: split, train, score, evaluate.

An experiment is described by an INI-style config file with one section per
algorithm, read with :func:`load_config` and executed by
:func:`run_experiment`.  The grammar::

    [data]
    ratings = path/to/ratings      ; required
    format = csv | ml100k          ; default csv

    [split]
    method = part-users | sample-users | part-rows | sample-rows
    k = 5                          ; number of folds
    select = n:5                   ; n:N, frac:F, last-n:N, last-frac:F
    seed = 42
    size = 10                      ; sample methods only
    disjoint = true                ; sample-rows only

    [run]
    n = 20                         ; recommendation list length
    workers = 1
    out = experiment-out           ; output directory

    [metrics]
    metrics = rmse,ndcg            ; any of rmse, mae, ndcg, precision,
                                   ; recall, recall.capped, hit, recip_rank,
                                   ; avg_precision
    gain = binary | rating         ; ndcg gain
    min_rating = 4.0               ; optional relevance threshold

    [algo:LABEL]
    type = biased-mf               ; default: the label itself
    features = 50                  ; remaining keys are hyperparameters

Every stage writes its intermediate files under the output directory (fold
tables, model files, predictions, recommendations, per-user metrics), so runs
can be inspected or post-processed piecemeal.  Outputs contain no timestamps:
rerunning a config reproduces them exactly.

Per-user recommendation metrics are pooled over folds and grouped by
algorithm, which is exact for the user-disjoint split methods (each user is
tested in at most one fold).
"""

from __future__ import annotations

import configparser
import json
import logging
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
import pandas as pd

from . import batch
from .algorithms import Predictor, Recommender, adapt_to_recommender, create_algorithm
from .crossfold import (
    partition_rows,
    partition_users,
    sample_rows,
    sample_users,
    selector_from_string,
)
from .data import load_csv, write_csv
from .exceptions import DataError, UndefinedMetricError
from .metrics import predict as predict_metrics
from .metrics import topn as topn_metrics
from .persistence import save_model

_logger = logging.getLogger(__name__)

PREDICT_METRICS = {"rmse": predict_metrics.rmse, "mae": predict_metrics.mae}
LIST_METRICS = {
    "precision": topn_metrics.precision,
    "recall": topn_metrics.recall,
    "recall.capped": partial(topn_metrics.recall, capped=True),
    "hit": topn_metrics.hit,
    "recip_rank": topn_metrics.recip_rank,
    "avg_precision": topn_metrics.avg_precision,
    "ndcg": topn_metrics.ndcg,
}


@dataclass
class AlgoSpec:
    label: str
    kind: str
    params: dict


@dataclass
class ExperimentConfig:
    ratings: str
    format: str = "csv"
    method: str = "part-users"
    k: int = 5
    select: str = "n:5"
    seed: int = 42
    size: int | None = None
    disjoint: bool = True
    n: int = 20
    workers: int = 1
    out: str = "experiment-out"
    metrics: list = field(default_factory=lambda: ["rmse", "ndcg"])
    gain: str = "binary"
    min_rating: float | None = None
    algorithms: list = field(default_factory=list)


def parse_value(text: str):
    """Parse a flat parameter value: int, float, bool, tuple, or string."""
    text = text.strip()
    if "," in text:
        return tuple(parse_value(part) for part in text.split(","))
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def load_config(path) -> ExperimentConfig:
    "Parse an experiment config file; config problems raise DataError."
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path, "r", encoding="utf-8") as f:
        cp.read_file(f)
    if not cp.has_option("data", "ratings"):
        raise DataError(f"{path}: [data] section must name a ratings file")
    cfg = ExperimentConfig(ratings=cp.get("data", "ratings"))
    cfg.format = cp.get("data", "format", fallback=cfg.format)
    if cp.has_section("split"):
        cfg.method = cp.get("split", "method", fallback=cfg.method)
        cfg.k = cp.getint("split", "k", fallback=cfg.k)
        cfg.select = cp.get("split", "select", fallback=cfg.select)
        cfg.seed = cp.getint("split", "seed", fallback=cfg.seed)
        if cp.has_option("split", "size"):
            cfg.size = cp.getint("split", "size")
        cfg.disjoint = cp.getboolean("split", "disjoint", fallback=cfg.disjoint)
    if cp.has_section("run"):
        cfg.n = cp.getint("run", "n", fallback=cfg.n)
        cfg.workers = cp.getint("run", "workers", fallback=cfg.workers)
        cfg.out = cp.get("run", "out", fallback=cfg.out)
    if cp.has_section("metrics"):
        raw = cp.get("metrics", "metrics", fallback=",".join(cfg.metrics))
        cfg.metrics = [m.strip() for m in raw.split(",") if m.strip()]
        cfg.gain = cp.get("metrics", "gain", fallback=cfg.gain)
        if cp.has_option("metrics", "min_rating"):
            cfg.min_rating = cp.getfloat("metrics", "min_rating")
    for section in cp.sections():
        if not section.startswith("algo:"):
            continue
        label = section.split(":", 1)[1]
        params = {key: parse_value(val) for key, val in cp.items(section)}
        kind = params.pop("type", label)
        cfg.algorithms.append(AlgoSpec(label=label, kind=kind, params=params))
    if not cfg.algorithms:
        raise DataError(f"{path}: no [algo:...] sections found")
    unknown = [m for m in cfg.metrics if m not in PREDICT_METRICS and m not in LIST_METRICS]
    if unknown:
        raise DataError(f"{path}: unknown metric(s): " + ", ".join(unknown))
    return cfg


def make_folds(ratings, cfg: ExperimentConfig):
    "Run the configured split method."
    select = selector_from_string(cfg.select)
    if cfg.method == "part-users":
        return partition_users(ratings, cfg.k, select, cfg.seed)
    elif cfg.method == "sample-users":
        if cfg.size is None:
            raise DataError("sample-users requires a size setting")
        return sample_users(ratings, cfg.k, cfg.size, select, cfg.seed)
    elif cfg.method == "part-rows":
        return partition_rows(ratings, cfg.k, cfg.seed)
    elif cfg.method == "sample-rows":
        if cfg.size is None:
            raise DataError("sample-rows requires a size setting")
        return sample_rows(ratings, cfg.k, cfg.size, cfg.seed, disjoint=cfg.disjoint)
    raise DataError(f"unknown split method {cfg.method!r}")


def run_experiment(cfg: ExperimentConfig, echo=print) -> pd.DataFrame:
    """Run the configured experiment end to end.

    Returns the summary frame (one row per algorithm) after writing all
    intermediate and final files under the configured output directory.
    """
    ratings = load_csv(cfg.ratings, cfg.format)  # fail before creating outputs
    folds = make_folds(ratings, cfg)

    out = Path(cfg.out)
    (out / "folds").mkdir(parents=True, exist_ok=True)
    (out / "models").mkdir(parents=True, exist_ok=True)
    for pair in folds:
        write_csv(pair.train, out / "folds" / f"train-{pair.fold}.csv")
        write_csv(pair.test, out / "folds" / f"test-{pair.fold}.csv")

    all_preds = []
    all_recs = []
    for spec in cfg.algorithms:
        for pair in folds:
            algo = create_algorithm(spec.kind, spec.params)
            if isinstance(algo, Predictor) and not isinstance(algo, Recommender):
                algo = adapt_to_recommender(algo)
            algo.fit(pair.train)
            save_model(algo, out / "models" / f"{spec.label}-fold{pair.fold}.mdl")
            users = pd.unique(pair.test["user"])
            if isinstance(algo, Predictor):
                preds = batch.predict(algo, pair.test, workers=cfg.workers)
                preds.insert(0, "algorithm", spec.label)
                preds.insert(1, "fold", pair.fold)
                all_preds.append(preds)
            recs = batch.recommend(algo, users, cfg.n, workers=cfg.workers)
            recs.insert(0, "algorithm", spec.label)
            recs.insert(1, "fold", pair.fold)
            all_recs.append(recs)
            _logger.info("finished %s on fold %d", spec.label, pair.fold)

    preds = (
        pd.concat(all_preds, ignore_index=True)
        if all_preds
        else pd.DataFrame(columns=["algorithm", "fold", "user", "item", "prediction"])
    )
    recs = pd.concat(all_recs, ignore_index=True)
    truth = pd.concat([pair.test for pair in folds], ignore_index=True)
    write_csv(preds, out / "predictions.csv")
    write_csv(recs, out / "recommendations.csv")

    list_names = [m for m in cfg.metrics if m in LIST_METRICS]
    rla = topn_metrics.RecListAnalysis(group_cols=["algorithm"], min_rating=cfg.min_rating)
    for name in list_names:
        kwargs = {"gain": cfg.gain} if name == "ndcg" else {}
        rla.add_metric(LIST_METRICS[name], name=name, **kwargs)
    user_metrics = rla.compute(recs, truth)
    write_csv(user_metrics, out / "user-metrics.csv")

    summary_rows = []
    for spec in cfg.algorithms:
        row = {"algorithm": spec.label}
        mine = preds[preds["algorithm"] == spec.label] if len(preds) else preds
        for name in cfg.metrics:
            if name in PREDICT_METRICS:
                row[name] = _pooled_accuracy(mine, PREDICT_METRICS[name])
            else:
                cell = user_metrics[user_metrics["algorithm"] == spec.label]
                row[name] = float(cell[name].mean()) if len(cell) else np.nan
        summary_rows.append(row)
    summary = pd.DataFrame(summary_rows, columns=["algorithm", *cfg.metrics])
    write_csv(summary, out / "summary.csv")

    manifest = {
        "ratings": str(cfg.ratings),
        "format": cfg.format,
        "split": {
            "method": cfg.method,
            "k": cfg.k,
            "select": cfg.select,
            "seed": cfg.seed,
            "size": cfg.size,
            "disjoint": cfg.disjoint,
        },
        "n": cfg.n,
        "metrics": cfg.metrics,
        "algorithms": [
            {"label": s.label, "type": s.kind, "params": _jsonish(s.params)}
            for s in cfg.algorithms
        ],
    }
    (out / "experiment.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    if echo is not None:
        for _, row in summary.iterrows():
            parts = " ".join(f"{m}={row[m]:.4f}" for m in cfg.metrics)
            echo(f"{row['algorithm']}: {parts}")
    return summary


def _pooled_accuracy(preds, fn):
    if len(preds) == 0 or "rating" not in preds.columns:
        return np.nan
    try:
        return fn(preds["prediction"], preds["rating"], missing="ignore")
    except UndefinedMetricError:
        return np.nan


def _jsonish(params):
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()}
