"""Top-N list metrics and the grouped analysis that applies them correctly.

Each metric takes one user's recommendation list (a DataFrame with an ``item``
column, rows in rank order) and that user's test data (truth), and returns a
single value.  Truth can be a frame with an ``item`` column or one already
indexed by item; a ``rating`` column supplies graded relevance where a metric
uses it, and rating-less truth counts every row at relevance 1.

:class:`RecListAnalysis` evaluates whole experiment outputs: it groups
recommendation rows by run (algorithm, fold, ...), matches each user's list
with their truth, and hands both to every metric, so metrics that need the
unrecommended test items (recall, gain-based ones) see them.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from ..data import dedupe_ratings
from ..exceptions import SchemaError
from ..validation import check_ratings

RESERVED_COLUMNS = ("item", "score", "rank")


def _as_truth(truth):
    if "item" in getattr(truth, "columns", ()):
        truth = truth.drop_duplicates(subset="item", keep="last").set_index("item")
    return truth


def precision(recs, truth):
    "Fraction of recommended items that are relevant; NaN for an empty list."
    if len(recs) == 0:
        return np.nan
    truth = _as_truth(truth)
    return float(recs["item"].isin(truth.index).sum() / len(recs))


def recall(recs, truth, *, capped=False):
    """Fraction of relevant items recommended.

    With ``capped`` the denominator is limited to the list length, so a full
    list of hits scores 1 even when the truth set is larger.
    """
    truth = _as_truth(truth)
    if len(truth) == 0:
        return np.nan
    if len(recs) == 0:
        return 0.0
    denom = min(len(truth), len(recs)) if capped else len(truth)
    return float(recs["item"].isin(truth.index).sum() / denom)


def hit(recs, truth):
    "1 when any recommended item is relevant, else 0."
    truth = _as_truth(truth)
    if len(truth) == 0:
        return np.nan
    return 1.0 if recs["item"].isin(truth.index).any() else 0.0


def recip_rank(recs, truth):
    "Reciprocal of the rank of the first relevant item; 0 when there is none."
    truth = _as_truth(truth)
    hits = np.flatnonzero(recs["item"].isin(truth.index).to_numpy())
    return 1.0 / (int(hits[0]) + 1) if len(hits) else 0.0


def avg_precision(recs, truth):
    """Mean precision at each relevant item's rank.

    The sum of precision@rank over relevant recommended items is divided by
    the number of relevant items, capped at the list length.
    """
    truth = _as_truth(truth)
    rel = recs["item"].isin(truth.index).to_numpy()
    if len(rel) == 0 or not rel.any():
        return 0.0
    ranks = np.flatnonzero(rel) + 1
    prec_at = np.arange(1, len(ranks) + 1) / ranks
    return float(prec_at.sum() / min(len(truth), len(recs)))


def _discounts(n):
    return 1.0 / np.log2(np.maximum(np.arange(1, n + 1), 2))


def _gains(truth, gain):
    if gain == "binary":
        return pd.Series(1.0, index=truth.index)
    elif gain == "rating":
        if "rating" in truth.columns:
            return truth["rating"].astype(np.float64)
        return pd.Series(1.0, index=truth.index)
    raise ValueError(f"unknown gain type {gain!r}")


def ndcg(recs, truth, *, gain="binary"):
    """Normalized discounted cumulative gain of one list.

    The discount at rank r is ``1 / log2(max(r, 2))``, so ranks 1 and 2 share
    a discount of 1.  The ideal ordering ranks the whole truth set by gain,
    uncapped; empty truth scores 0.
    """
    truth = _as_truth(truth)
    gains = _gains(truth, gain)
    ideal = np.sort(gains.to_numpy())[::-1]
    idcg = float(ideal @ _discounts(len(ideal)))
    if idcg == 0.0:
        return 0.0
    achieved = gains.reindex(recs["item"]).fillna(0.0).to_numpy()
    dcg = float(achieved @ _discounts(len(achieved)))
    return dcg / idcg


class RecListAnalysis:
    """Compute per-list metrics over grouped recommendation results.

    Recommendation rows need ``user``, ``item`` and ``rank`` columns; any
    other column apart from ``score`` is treated as a grouping variable
    (algorithm, data set, fold, ...) unless ``group_cols`` overrides that.
    Users present in the truth data but missing from a group's results are
    scored against an empty list, because dropping unserved users inflates
    averages; pass ``include_missing=False`` to drop them instead.  Users
    with recommendations but no truth rows are excluded.

    Args:
        include_missing: score truth-only users against empty lists.
        min_rating: when set, only truth rows with at least this rating count
            as relevant.
        group_cols: explicit grouping columns; default infers them.
    """

    def __init__(self, *, include_missing=True, min_rating=None, group_cols=None):
        self.include_missing = include_missing
        self.min_rating = min_rating
        self.group_cols = group_cols
        self._metrics = []

    def add_metric(self, metric, *, name=None, **kwargs):
        "Register a metric function; extra kwargs are passed through to it."
        self._metrics.append((name or metric.__name__, metric, kwargs))
        return self

    def compute(self, recs, truth):
        """Evaluate every metric for every (grouping, user) cell.

        Returns a frame with one row per cell, sorted by the grouping
        columns and user, carrying ``nrecs`` plus one column per metric.
        """
        missing = [c for c in ("user", "item", "rank") if c not in recs.columns]
        if missing:
            raise SchemaError("recommendations are missing column(s): " + ", ".join(missing))
        check_ratings(truth)
        group_cols = self.group_cols
        if group_cols is None:
            group_cols = [
                c for c in recs.columns if c not in RESERVED_COLUMNS and c != "user"
            ]
        if recs.duplicated(subset=[*group_cols, "user", "rank"]).any():
            raise SchemaError("duplicate (grouping, user, rank) rows in recommendations")

        truth = dedupe_ratings(truth)
        if self.min_rating is not None and "rating" in truth.columns:
            truth = truth[truth["rating"] >= self.min_rating]
        truth_users = {
            user: frame.set_index("item")
            for user, frame in truth.groupby("user", sort=False)
        }

        empty = recs.iloc[0:0]
        rows = []
        if group_cols:
            grouped = recs.groupby(group_cols, sort=True)
        else:
            grouped = [((), recs)]
        for key, group in grouped:
            if not isinstance(key, tuple):
                key = (key,)
            lists = {
                user: frame.sort_values("rank")
                for user, frame in group.groupby("user", sort=False)
            }
            if self.include_missing:
                users = sorted(truth_users)
            else:
                users = sorted(set(truth_users) & set(lists))
            for user in users:
                user_recs = lists.get(user, empty)
                user_truth = truth_users[user]
                row = dict(zip(group_cols, key))
                row["user"] = user
                row["nrecs"] = len(user_recs)
                for name, fn, kwargs in self._metrics:
                    row[name] = fn(user_recs, user_truth, **kwargs)
                rows.append(row)
        columns = [*group_cols, "user", "nrecs", *(m[0] for m in self._metrics)]
        return pd.DataFrame(rows, columns=columns)
