"""Command-line pipeline: split, train, predict, recommend, eval, experiment.

Exit codes: 0 success, 2 usage error, 3 data error, 4 infeasible split.
All tabular inputs and outputs are CSV (the ML-100K tab format is accepted
for ratings via ``--format ml100k``); run metadata goes to sidecar JSON
manifests so data files never contain timestamps and reruns are
byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__, batch
from .algorithms import CONSTRUCTIBLE, Predictor, Recommender, adapt_to_recommender, create_algorithm
from .crossfold import selector_from_string
from .data import load_csv, write_csv
from .exceptions import DataError, InfeasibleSplitError, SchemaError
from .experiment import (
    LIST_METRICS,
    PREDICT_METRICS,
    ExperimentConfig,
    load_config,
    make_folds,
    parse_value,
    run_experiment,
)
from .metrics import topn as topn_metrics
from .metrics.predict import rmse as rmse_fn
from .persistence import load_model, save_model


class UsageError(Exception):
    "Bad flag combinations detected after argparse."


def main(argv=None) -> int:
    "Run the CLI; returns the process exit code."
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.handler(args)
        return 0
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except InfeasibleSplitError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except (DataError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


def run():  # console entry point
    raise SystemExit(main())


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="recbench",
        description="Composable offline recommender-system experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="write train/test fold files")
    p.add_argument("--ratings", required=True, help="rating file to split")
    p.add_argument("--format", default="csv", choices=["csv", "ml100k"])
    p.add_argument(
        "--method",
        default="part-users",
        choices=["part-users", "sample-users", "part-rows", "sample-rows"],
    )
    p.add_argument("--k", type=int, required=True, help="number of folds")
    p.add_argument("--select", default="n:5", help="row selector, e.g. n:5 or last-frac:0.2")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--size", type=int, help="users/rows per fold (sample methods)")
    p.add_argument("--overlap", action="store_true", help="allow overlapping row samples")
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("train", help="fit an algorithm and save the model")
    p.add_argument("--algo", required=True, choices=CONSTRUCTIBLE)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--ratings", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "ml100k"])
    p.add_argument("--no-adapt", action="store_true", help="save the bare predictor")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("predict", help="score (user, item) pairs with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True, help="CSV of user,item[,rating,...]")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("recommend", help="produce top-N lists with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--users", required=True, help="CSV with a user column")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--candidates", help="optional CSV of user,item candidate lists")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_recommend)

    p = sub.add_parser("eval", help="compute metrics from recs/preds and truth")
    p.add_argument("--recs", help="recommendation CSV (user,item,score,rank,...)")
    p.add_argument("--preds", help="prediction CSV (user,item,prediction,rating)")
    p.add_argument("--truth", required=True, help="test rating CSV")
    p.add_argument("--metrics", default="ndcg,precision,recall,rmse")
    p.add_argument("--gain", default="binary", choices=["binary", "rating"])
    p.add_argument("--min-rating", type=float, default=None)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("experiment", help="run a config-driven experiment")
    p.add_argument("config", help="experiment config file")
    p.add_argument("--out", help="override the configured output directory")
    p.set_defaults(handler=_cmd_experiment)

    return parser


def _cmd_split(args):
    ratings = load_csv(args.ratings, args.format)
    cfg = ExperimentConfig(
        ratings=args.ratings,
        format=args.format,
        method=args.method,
        k=args.k,
        select=args.select,
        seed=args.seed,
        size=args.size,
        disjoint=not args.overlap,
    )
    selector_from_string(args.select)  # validate the spelling early
    folds = make_folds(ratings, cfg)
    prefix = Path(args.out)
    if prefix.parent != Path("."):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    for pair in folds:
        train_path = f"{prefix}.train-{pair.fold}.csv"
        test_path = f"{prefix}.test-{pair.fold}.csv"
        write_csv(pair.train, train_path)
        write_csv(pair.test, test_path)
        entries.append(
            {
                "fold": pair.fold,
                "train": train_path,
                "test": test_path,
                "n_train": len(pair.train),
                "n_test": len(pair.test),
            }
        )
    manifest = {
        "method": args.method,
        "k": args.k,
        "select": args.select,
        "seed": args.seed,
        "size": args.size,
        "folds": entries,
    }
    Path(f"{prefix}.folds.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"wrote {len(folds)} folds to {prefix}.*")


def _cmd_train(args):
    params = {}
    for spec in args.param:
        key, sep, val = spec.partition("=")
        if not sep:
            raise UsageError(f"--param needs KEY=VALUE, got {spec!r}")
        params[key.strip()] = parse_value(val)
    try:
        algo = create_algorithm(args.algo, params)
    except (TypeError, ValueError) as e:
        raise UsageError(f"cannot configure {args.algo}: {e}") from e
    if isinstance(algo, Predictor) and not isinstance(algo, Recommender) and not args.no_adapt:
        algo = adapt_to_recommender(algo)
    ratings = load_csv(args.ratings, args.format)
    algo.fit(ratings)
    save_model(algo, args.out)
    print(f"saved {args.algo} model to {args.out}")


def _cmd_predict(args):
    algo = load_model(args.model)
    if not isinstance(algo, Predictor):
        raise UsageError(f"model {args.model} cannot predict ratings")
    pairs = load_csv(args.pairs, "csv")
    preds = batch.predict(algo, pairs, workers=args.workers)
    write_csv(preds, args.out)
    print(f"wrote {len(preds)} predictions to {args.out}")


def _cmd_recommend(args):
    algo = load_model(args.model)
    users_table = load_csv(args.users, "csv") if _has_item_column(args.users) else None
    if users_table is None:
        frame = pd.read_csv(args.users, dtype=str, keep_default_na=False)
        if "user" not in frame.columns:
            raise SchemaError(f"{args.users}: missing required column(s): user")
        users = list(pd.unique(frame["user"]))
    else:
        users = list(pd.unique(users_table["user"]))
    candidates = None
    if args.candidates:
        cand = load_csv(args.candidates, "csv")
        candidates = {
            user: cand["item"].to_numpy()[pos]
            for user, pos in cand.groupby("user", sort=False).indices.items()
        }
    if not isinstance(algo, Recommender) and candidates is None:
        raise UsageError(
            f"model {args.model} is a bare predictor; retrain without --no-adapt "
            "or pass --candidates"
        )
    recs = batch.recommend(algo, users, n=args.n, candidates=candidates, workers=args.workers)
    write_csv(recs, args.out)
    served = recs["user"].nunique() if len(recs) else 0
    manifest = {
        "model": args.model,
        "n": args.n,
        "users_requested": len(users),
        "users_served": int(served),
        "users": [
            {"user": str(u), "n_recs": int((recs["user"] == u).sum()) if len(recs) else 0}
            for u in users
        ],
    }
    Path(f"{args.out}.manifest.json").write_text(json.dumps(manifest, indent=2))
    print(f"wrote recommendations for {served}/{len(users)} users to {args.out}")


def _has_item_column(path):
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline()
    return "item" in [c.strip() for c in header.rstrip("\n").split(",")]


def _cmd_eval(args):
    names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = [m for m in names if m not in PREDICT_METRICS and m not in LIST_METRICS]
    if unknown:
        raise UsageError("unknown metric(s): " + ", ".join(unknown))
    list_names = [m for m in names if m in LIST_METRICS]
    pred_names = [m for m in names if m in PREDICT_METRICS]
    if list_names and not args.recs:
        raise UsageError("list metrics requested but no --recs given")
    if pred_names and not args.preds:
        raise UsageError("prediction metrics requested but no --preds given")
    truth = load_csv(args.truth, "csv")

    user_metrics = None
    group_cols = []
    if list_names:
        recs = load_csv(args.recs, "csv")
        if len(recs) == 0:
            raise DataError(f"{args.recs}: no recommendations to evaluate")
        rla = topn_metrics.RecListAnalysis(min_rating=args.min_rating)
        for name in list_names:
            kwargs = {"gain": args.gain} if name == "ndcg" else {}
            rla.add_metric(LIST_METRICS[name], name=name, **kwargs)
        user_metrics = rla.compute(recs, truth)
        group_cols = [
            c for c in user_metrics.columns if c not in ("user", "nrecs", *list_names)
        ]
        write_csv(user_metrics, f"{args.out}.users.csv")

    rows = []
    if user_metrics is not None and group_cols:
        summary = user_metrics.groupby(group_cols, as_index=False)[list_names].mean()
    elif user_metrics is not None:
        summary = pd.DataFrame([user_metrics[list_names].mean().to_dict()])
    else:
        summary = pd.DataFrame([{}])
    if pred_names:
        preds = load_csv(args.preds, "csv")
        if "rating" not in preds.columns or "prediction" not in preds.columns:
            raise SchemaError(f"{args.preds}: needs prediction and rating columns")
        for name in pred_names:
            value = PREDICT_METRICS[name](
                preds["prediction"], preds["rating"], missing="ignore"
            )
            summary[name] = value
    write_csv(summary, f"{args.out}.summary.csv")
    for _, row in summary.iterrows():
        label = " ".join(f"{c}={row[c]}" for c in group_cols)
        vals = " ".join(f"{m}={row[m]:.4f}" for m in names if m in summary.columns)
        print(f"{label + ': ' if label else ''}{vals}")
    del rows


def _cmd_experiment(args):
    cfg = load_config(args.config)
    if args.out:
        cfg.out = args.out
    run_experiment(cfg)
