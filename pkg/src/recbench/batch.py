"""Mass-produce predictions and recommendations, parallelized over users.

The unit of parallelism is the user: the fitted model is shared read-only
across worker processes, workers never exchange state, and results are
reassembled in a canonical order, so output is a deterministic function of
the model and inputs regardless of worker count.  ``workers=1`` runs
everything in-process for debugging; the default comes from the
``RECBENCH_WORKERS`` environment variable or the machine's core count.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pandas as pd

from .algorithms.base import Predictor, Recommender, rank_scores
from .validation import check_pairs

WORKERS_ENV_VAR = "RECBENCH_WORKERS"

_WORKER_STATE = None


def predict(algo, pairs, *, workers=None):
    """Score a table of (user, item) pairs.

    The output has one row per input pair in input order, with a
    ``prediction`` column added; all other input columns (notably ``rating``,
    which eases accuracy computation) pass through untouched.  Pairs the model
    cannot score get NaN predictions.

    Args:
        algo: a fitted :class:`Predictor`.
        pairs: frame with ``user`` and ``item`` columns.
        workers: worker processes; None picks a default, 1 is sequential.
    """
    check_pairs(pairs)
    if not isinstance(algo, Predictor):
        raise TypeError(f"{type(algo).__name__} cannot predict")
    out_cols = ["user", "item", "prediction"] + [
        c for c in pairs.columns if c not in ("user", "item")
    ]
    if len(pairs) == 0:
        return pd.DataFrame(columns=out_cols)
    groups = pairs.groupby("user", sort=False).indices
    items = pairs["item"].to_numpy()
    tasks = [(user, items[pos]) for user, pos in groups.items()]
    results = _run(tasks, _predict_task, {"algo": algo}, workers)
    values = np.empty(len(pairs))
    for (_, vals), pos in zip(results, groups.values()):
        values[pos] = vals
    out = pairs.copy()
    out["prediction"] = values
    return out[out_cols]


def recommend(algo, users, n=None, candidates=None, *, workers=None):
    """Produce ranked recommendation lists for a sequence of users.

    Args:
        algo: a fitted :class:`Recommender`; a bare :class:`Predictor` is
            accepted only together with ``candidates`` (wrap predictors with
            :func:`~recbench.algorithms.adapt_to_recommender` before fitting
            to let them pick their own candidates).
        users: user ids; duplicates are dropped, order is kept.
        n: maximum list length per user.
        candidates: optional dict mapping user id to candidate item ids.
        workers: worker processes; None picks a default, 1 is sequential.

    Returns:
        frame with ``user``, ``item``, ``score`` and 1-based ``rank`` columns;
        scores are non-increasing within each user's list.
    """
    if not isinstance(algo, (Recommender, Predictor)):
        raise TypeError(f"{type(algo).__name__} cannot recommend")
    if not isinstance(algo, Recommender) and candidates is None:
        raise TypeError(
            f"{type(algo).__name__} needs candidates to recommend; adapt it "
            "with adapt_to_recommender() before fitting, or pass candidates="
        )
    users = list(dict.fromkeys(users))
    state = {"algo": algo, "n": n, "candidates": candidates}
    results = _run(users, _recommend_task, state, workers)
    frames = []
    for user, lst in results:
        lst = lst.copy()
        lst.insert(0, "user", user)
        lst["rank"] = np.arange(1, len(lst) + 1)
        frames.append(lst)
    if not frames:
        return pd.DataFrame(columns=["user", "item", "score", "rank"])
    return pd.concat(frames, ignore_index=True)


def _predict_task(task):
    user, items = task
    algo = _WORKER_STATE["algo"]
    return user, algo.predict_for_user(user, items).to_numpy()


def _recommend_task(user):
    algo = _WORKER_STATE["algo"]
    n = _WORKER_STATE["n"]
    cands = _WORKER_STATE["candidates"]
    cands = cands.get(user) if cands is not None else None
    if isinstance(algo, Recommender):
        return user, algo.recommend(user, n=n, candidates=cands)
    scores = algo.predict_for_user(user, cands)
    return user, rank_scores(scores, n)


def _init_worker(state):
    global _WORKER_STATE
    _WORKER_STATE = state


def _run(tasks, fn, state, workers):
    """Map ``fn`` over tasks, preserving task order in the results."""
    global _WORKER_STATE
    w = _effective_workers(workers, len(tasks))
    if w <= 1:
        prior = _WORKER_STATE
        _init_worker(state)
        try:
            return [fn(t) for t in tasks]
        finally:
            _WORKER_STATE = prior
    n_chunks = min(len(tasks), w * 4)
    size = math.ceil(len(tasks) / n_chunks)
    chunks = [tasks[i : i + size] for i in range(0, len(tasks), size)]
    ctx = mp.get_context("fork" if "fork" in mp.get_all_start_methods() else None)
    with ProcessPoolExecutor(
        max_workers=w, mp_context=ctx, initializer=_init_worker, initargs=(state,)
    ) as pool:
        out = []
        for part in pool.map(_chunk_runner, [(fn.__name__, c) for c in chunks]):
            out.extend(part)
    return out


def _chunk_runner(payload):
    name, chunk = payload
    fn = {"_predict_task": _predict_task, "_recommend_task": _recommend_task}[name]
    return [fn(t) for t in chunk]


def _effective_workers(workers, n_tasks):
    if workers is None:
        env = os.environ.get(WORKERS_ENV_VAR)
        workers = int(env) if env else os.cpu_count() or 1
    workers = max(1, int(workers))
    return min(workers, max(1, n_tasks))
