"""Non-personalized baselines: bias prediction, popularity, random lists."""

from __future__ import annotations

import logging
import zlib

import numpy as np
import pandas as pd
from sklearn.utils.validation import check_is_fitted

from ..data import build_dataset, dedupe_ratings
from ..exceptions import EmptyDataError
from ..validation import check_ratings
from .base import Predictor, Recommender, UnratedItems, rank_scores

_logger = logging.getLogger(__name__)


class Bias(Predictor):
    """Damped user-item bias rating predictor.

    Fitting computes the global mean rating, then per-item offsets of the
    residuals, then per-user offsets of what remains, each divided by the
    rating count plus the matching damping term:

    * ``mean = mean(rating)``
    * ``item_offset[i] = sum(rating - mean over i's raters) / (count + item_damping)``
    * ``user_offset[u] = sum(rating - mean - item_offset over u's items) / (count + user_damping)``

    Predictions are ``mean + user_offset + item_offset`` with the offset of an
    unknown user or item taken as zero; no range clamping is applied.

    Args:
        user_damping: shrinkage strength for user offsets (0 disables).
        item_damping: shrinkage strength for item offsets.
    """

    def __init__(self, user_damping=0.0, item_damping=0.0):
        self.user_damping = user_damping
        self.item_damping = item_damping

    def fit(self, ratings, **kwargs):
        if self.user_damping < 0 or self.item_damping < 0:
            raise ValueError("damping must be nonnegative")
        check_ratings(ratings, require_rating=True)
        ratings = dedupe_ratings(ratings)
        if len(ratings) == 0:
            raise EmptyDataError("no ratings to fit on")
        r = ratings["rating"].astype(np.float64)
        self.mean_ = float(r.mean())
        resid = r - self.mean_
        istats = resid.groupby(ratings["item"], sort=False).agg(["sum", "count"])
        self.item_offsets_ = istats["sum"] / (istats["count"] + self.item_damping)
        resid = resid - self.item_offsets_.reindex(ratings["item"]).to_numpy()
        ustats = resid.groupby(ratings["user"], sort=False).agg(["sum", "count"])
        self.user_offsets_ = ustats["sum"] / (ustats["count"] + self.user_damping)
        _logger.info(
            "fit bias model: mean=%.3f, %d items, %d users",
            self.mean_,
            len(self.item_offsets_),
            len(self.user_offsets_),
        )
        return self

    def predict_for_user(self, user, items, ratings=None):
        check_is_fitted(self)
        idx = pd.Index(items)
        preds = self.item_offsets_.reindex(idx).fillna(0.0).to_numpy()
        preds += self.mean_ + float(self.user_offsets_.get(user, 0.0))
        return pd.Series(preds, index=idx)


class Popular(Recommender):
    """Recommend the most-interacted items the user has not interacted with.

    An item's score is the number of distinct users who interacted with it in
    training; rating values play no role.  Equal counts fall back to item
    insertion order, keeping rankings deterministic.
    """

    def fit(self, ratings, **kwargs):
        ds = build_dataset(ratings)
        self.item_index_ = ds.items
        self.item_counts_ = np.diff(ds.by_item.indptr).astype(np.int64)
        self.selector_ = UnratedItems().fit(ratings)
        return self

    def recommend(self, user, n=None, candidates=None, ratings=None):
        check_is_fitted(self)
        if candidates is None:
            candidates = self.selector_.candidates(user, ratings)
        idx = pd.Index(candidates)
        pos = self.item_index_.get_indexer(idx)
        counts = np.zeros(len(pos), dtype=np.float64)
        known = pos >= 0
        counts[known] = self.item_counts_[pos[known]]
        return rank_scores(pd.Series(counts, index=idx), n)


class Random(Recommender):
    """Recommend uniformly random unrated items.

    Each user's list is a deterministic function of (seed, user id), so
    results do not depend on evaluation order or worker scheduling.  Scores
    are descending list positions, carrying no meaning beyond the ranking.
    """

    def __init__(self, seed=0):
        self.seed = seed

    def fit(self, ratings, **kwargs):
        self.selector_ = UnratedItems().fit(ratings)
        return self

    def recommend(self, user, n=None, candidates=None, ratings=None):
        check_is_fitted(self)
        if candidates is None:
            candidates = self.selector_.candidates(user, ratings)
        arr = np.asarray(candidates)
        take = len(arr) if n is None else min(int(n), len(arr))
        rng = np.random.default_rng([int(self.seed), _user_key(user)])
        picks = rng.choice(len(arr), size=take, replace=False) if take else []
        return pd.DataFrame(
            {"item": arr[picks], "score": np.arange(take, 0, -1, dtype=np.float64)}
        )


def _user_key(user) -> int:
    "Stable 32-bit key for a user id, independent of interpreter hashing."
    return zlib.crc32(str(user).encode("utf-8"))
