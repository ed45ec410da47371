"""Core algorithm interfaces and the adapters that compose them.

Algorithms follow the scikit-learn estimator protocol: hyperparameters are
constructor arguments exposed through ``get_params``/``set_params``, and
``fit`` estimates state in trailing-underscore attributes and returns the
algorithm itself.  Fitted models are immutable and safe to score from
concurrent workers.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..data import build_dataset


class Algorithm(BaseEstimator, ABC):
    """Base class for trainable recommendation components.

    ``fit`` accepts a rating table (a DataFrame with ``user`` and ``item``
    columns and whatever else the data carries) plus arbitrary extra keyword
    arguments, which built-in implementations ignore so callers can thread
    side data through to their own components.
    """

    @abstractmethod
    def fit(self, ratings, **kwargs):
        "Train the model in place on a rating table; returns self."


class Predictor(Algorithm):
    """Algorithm that scores (user, item) pairs."""

    @abstractmethod
    def predict_for_user(self, user, items, ratings=None):
        """Score the given items for one user.

        Args:
            user: the user id.
            items: iterable of item ids to score.
            ratings: optional series of the user's fresh ratings, indexed by
                item.  Only the neighborhood models use it; others ignore it.

        Returns:
            pandas.Series of scores indexed by ``items`` in the given order,
            with NaN marking items the model cannot score.  Items are never
            silently dropped.
        """


class Recommender(Algorithm):
    """Algorithm that produces ranked item lists."""

    @abstractmethod
    def recommend(self, user, n=None, candidates=None, ratings=None):
        """Recommend up to ``n`` items for a user.

        Args:
            user: the user id.
            n: maximum list length; ``None`` ranks every scorable candidate.
            candidates: optional iterable of candidate item ids; when omitted
                the algorithm picks its own (normally the user's unrated items).
            ratings: optional fresh ratings, as for ``predict_for_user``.

        Returns:
            pandas.DataFrame with ``item`` and ``score`` columns, sorted by
            score descending.
        """


class CandidateSelector(Algorithm):
    """Produces the candidate item set when a caller supplies none."""

    @abstractmethod
    def candidates(self, user, ratings=None):
        "Return an array of candidate item ids for ``user``."


def rank_scores(scores: pd.Series, n=None) -> pd.DataFrame:
    """Turn per-item scores into a ranked list frame.

    NaN scores are dropped.  Sorting is stable, so ties keep the candidate
    order, which the built-in selectors emit in item-index order; this makes
    rankings deterministic.
    """
    s = scores.dropna()
    vals = s.to_numpy(dtype=np.float64)
    order = np.argsort(-vals, kind="stable")
    if n is not None:
        order = order[: int(n)]
    return pd.DataFrame({"item": s.index[order].to_numpy(), "score": vals[order]})


class UnratedItems(CandidateSelector):
    """Candidate selector: every training item the user has not rated.

    Unknown users get the whole item universe.  Items named in fresh ratings
    are subtracted too, so freshly-rated items are not recommended back.
    """

    def fit(self, ratings, **kwargs):
        ds = build_dataset(ratings)
        self.users_ = ds.users
        self.items_ = ds.items
        self.matrix_ = ds.matrix
        return self

    def candidates(self, user, ratings=None):
        check_is_fitted(self)
        mask = np.ones(len(self.items_), dtype=bool)
        upos = self.users_.get_indexer([user])[0]
        if upos >= 0:
            mat = self.matrix_
            mask[mat.indices[mat.indptr[upos] : mat.indptr[upos + 1]]] = False
        if ratings is not None and len(ratings) > 0:
            fresh = self.items_.get_indexer(pd.Index(ratings.index))
            mask[fresh[fresh >= 0]] = False
        return self.items_.to_numpy()[mask]


class TopN(Recommender, Predictor):
    """Recommend by ranking a scorer's predictions over candidate items.

    Args:
        scorer: the :class:`Predictor` whose scores are ranked.
        selector: optional :class:`CandidateSelector`; defaults to
            :class:`UnratedItems` fitted on the same data.
    """

    def __init__(self, scorer, selector=None):
        self.scorer = scorer
        self.selector = selector

    def fit(self, ratings, **kwargs):
        if not isinstance(self.scorer, Predictor):
            raise TypeError("TopN requires a Predictor scorer")
        self.scorer.fit(ratings, **kwargs)
        self.selector_ = self.selector if self.selector is not None else UnratedItems()
        self.selector_.fit(ratings, **kwargs)
        return self

    def recommend(self, user, n=None, candidates=None, ratings=None):
        check_is_fitted(self)
        if candidates is None:
            candidates = self.selector_.candidates(user, ratings)
        scores = self.scorer.predict_for_user(user, candidates, ratings)
        return rank_scores(scores, n)

    def predict_for_user(self, user, items, ratings=None):
        check_is_fitted(self)
        return self.scorer.predict_for_user(user, items, ratings)


class Fallback(Predictor):
    """Score with a primary predictor, filling its gaps from a fallback.

    Both predictors are fitted on the same data; wherever the primary scores
    an item as missing, the fallback's score is used instead.
    """

    def __init__(self, primary, fallback):
        self.primary = primary
        self.fallback = fallback

    def fit(self, ratings, **kwargs):
        self.primary.fit(ratings, **kwargs)
        self.fallback.fit(ratings, **kwargs)
        self.fitted_ = True
        return self

    def predict_for_user(self, user, items, ratings=None):
        check_is_fitted(self)
        preds = self.primary.predict_for_user(user, items, ratings)
        missing = preds.isna()
        if missing.any():
            holes = preds.index[missing]
            filler = self.fallback.predict_for_user(user, holes, ratings)
            preds = preds.copy()
            preds[missing] = filler.to_numpy()
        return preds


def adapt_to_recommender(algo) -> Recommender:
    """Ensure an algorithm can recommend, wrapping bare predictors in TopN.

    Recommenders (including TopN) come back unchanged, so the function is
    idempotent.  Wrap before fitting: the TopN wrapper trains its candidate
    selector during ``fit``.
    """
    if isinstance(algo, Recommender):
        return algo
    if isinstance(algo, Predictor):
        return TopN(algo)
    raise TypeError(f"cannot adapt {type(algo).__name__} to a recommender")
