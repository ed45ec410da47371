"""Feature-sequential gradient-descent matrix factorization.

Features are trained one at a time on the residuals of a bias model.  While
feature g trains, the prediction is the clamped partial estimate through the
previous features plus the feature-g term, clamped again to the rating range;
each rating applies one gradient step to its user and item factors.  Training
is strictly sequential by definition, so results depend only on the rating
iteration order (row-major over the deduplicated matrix).
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd
from sklearn.utils.validation import check_is_fitted

from ..data import build_dataset
from ..validation import check_ratings
from .base import Predictor
from .basic import Bias

_logger = logging.getLogger(__name__)

INITIAL_FACTOR = 0.1


def _run_epoch(row, col, vals, est, pg, qg, lrate, reg, lo, hi):
    """One pass over all ratings, updating one feature's factor columns.

    ``est`` holds the clamped partial prediction through the already-trained
    features.  Both factor updates for a rating use the pre-update user value.
    """
    for k in range(len(vals)):
        u = row[k]
        i = col[k]
        pu = pg[u]
        qi = qg[i]
        pred = est[k] + pu * qi
        if pred < lo:
            pred = lo
        elif pred > hi:
            pred = hi
        err = vals[k] - pred
        pg[u] = pu + lrate * (err * qi - reg * pu)
        qg[i] = qi + lrate * (err * pu - reg * qi)


class FunkSVD(Predictor):
    """Gradient-descent biased matrix factorization with range clamping.

    Predicts ``mean + user_offset + item_offset + p_u . q_i`` clamped to the
    rating range; unknown users or items fall back to the (clamped) bias
    prediction.  All factors start at 0.1, so training is deterministic
    without a seed.

    Args:
        features: number of latent features.
        lrate: learning rate.
        reg: regularization strength.
        epochs: training passes per feature.
        range: (min, max) rating range for clamping; defaults to the observed
            range of the training ratings.
    """

    def __init__(self, features, *, lrate=0.001, reg=0.015, epochs=100, range=None):
        self.features = features
        self.lrate = lrate
        self.reg = reg
        self.epochs = epochs
        self.range = range

    def fit(self, ratings, **kwargs):
        if self.features < 1:
            raise ValueError("features must be at least 1")
        check_ratings(ratings, require_rating=True)
        bias = Bias()
        bias.fit(ratings)
        ds = build_dataset(ratings)
        mat = ds.matrix
        row = ds.row_ids()
        col = mat.indices
        vals = mat.data
        if self.range is not None:
            lo, hi = self.range
        else:
            lo, hi = float(vals.min()), float(vals.max())
        if not lo < hi:
            raise ValueError(f"invalid rating range ({lo}, {hi})")

        bu = bias.user_offsets_.reindex(ds.users).fillna(0.0).to_numpy()
        bi = bias.item_offsets_.reindex(ds.items).fillna(0.0).to_numpy()
        est = np.clip(bias.mean_ + bu[row] + bi[col], lo, hi)
        P = np.full((ds.n_users, self.features), INITIAL_FACTOR)
        Q = np.full((ds.n_items, self.features), INITIAL_FACTOR)

        for g in range(self.features):
            pg = P[:, g]
            qg = Q[:, g]
            for _ in range(self.epochs):
                _run_epoch(row, col, vals, est, pg, qg, self.lrate, self.reg, lo, hi)
            est = np.clip(est + pg[row] * qg[col], lo, hi)
            _logger.debug("trained feature %d", g)
        _logger.info(
            "fit %d-feature model on %d ratings (range %.2f-%.2f)",
            self.features,
            mat.nnz,
            lo,
            hi,
        )

        self.bias_ = bias
        self.user_index_ = ds.users
        self.item_index_ = ds.items
        self.user_features_ = P
        self.item_features_ = Q
        self.rating_range_ = (lo, hi)
        return self

    def predict_for_user(self, user, items, ratings=None):
        check_is_fitted(self)
        preds = self.bias_.predict_for_user(user, items)
        vals = preds.to_numpy()
        upos = self.user_index_.get_indexer([user])[0]
        if upos >= 0:
            ipos = self.item_index_.get_indexer(preds.index)
            known = ipos >= 0
            vals[known] += self.item_features_[ipos[known]] @ self.user_features_[upos]
        lo, hi = self.rating_range_
        return pd.Series(np.clip(vals, lo, hi), index=preds.index)
