"""Neighborhood collaborative filtering with cosine similarity.

Both models use cosine similarity over mean-centered rating vectors: every
user's ratings are centered by that user's mean before similarities are
computed (for the item model too, which compares item columns of the
user-centered matrix).  Scores are similarity-weighted averages of centered
ratings with the target user's mean added back.

Tables without a rating column are treated as implicit feedback: values are
taken as 1, centering is skipped, and scores become plain similarity sums
(a weighted average of constant values could not rank items).
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd
from scipy import sparse
from sklearn.utils.validation import check_is_fitted

from ..data import build_dataset
from ..validation import check_ratings
from .base import Predictor

_logger = logging.getLogger(__name__)


def _check_knobs(nnbrs, min_nbrs, min_sim):
    if nnbrs < 1:
        raise ValueError("nnbrs must be at least 1")
    if min_nbrs < 1:
        raise ValueError("min_nbrs must be at least 1")
    if min_sim <= 0:
        raise ValueError("min_sim must be positive")


def _center_rows(ds, explicit):
    """Center each user's row by their mean rating.

    Returns (means, centered CSR matrix).  Implicit data keeps unit values
    and zero means.
    """
    mat = ds.matrix
    counts = np.diff(mat.indptr)
    rows = ds.row_ids()
    if explicit:
        sums = np.bincount(rows, weights=mat.data, minlength=ds.n_users)
        means = sums / counts
        data = mat.data - means[rows]
    else:
        means = np.zeros(ds.n_users)
        data = np.ones_like(mat.data)
    centered = sparse.csr_array((data, mat.indices.copy(), mat.indptr.copy()), shape=mat.shape)
    return means, centered


def _profile(model, user, ratings):
    """Resolve the query profile: (mean, item positions, centered values).

    Fresh ratings take precedence; otherwise the user's training row is used.
    Returns None when there is nothing to go on (unknown user, no ratings).
    """
    if ratings is not None and len(ratings) > 0:
        pos = model.item_index_.get_indexer(pd.Index(ratings.index))
        known = pos >= 0
        vals = np.asarray(ratings, dtype=np.float64)
        if model.feedback_ == "explicit":
            mean = float(np.mean(vals))
            return mean, pos[known], vals[known] - mean
        return 0.0, pos[known], np.ones(int(known.sum()))
    upos = model.user_index_.get_indexer([user])[0]
    if upos < 0:
        return None
    mat = model.rating_matrix_
    sl = slice(mat.indptr[upos], mat.indptr[upos + 1])
    return float(model.user_means_[upos]), mat.indices[sl], mat.data[sl]


class UserUser(Predictor):
    """User-based k-nearest-neighbor rating prediction.

    To score item ``i`` for user ``u``, the most similar users who rated
    ``i`` (up to ``nnbrs``, similarity above ``min_sim``) vote with their
    centered ratings; with fewer than ``min_nbrs`` such neighbors the item
    scores as missing.  The target user's own row never votes.

    Fresh ratings passed to ``predict_for_user`` replace the user's profile,
    so unknown users can be scored from a rating vector alone.

    Args:
        nnbrs: maximum neighborhood size.
        min_nbrs: minimum neighbors needed to score an item.
        min_sim: similarity threshold; also discards non-positive similarities.
    """

    def __init__(self, nnbrs=20, min_nbrs=1, min_sim=1.0e-6):
        self.nnbrs = nnbrs
        self.min_nbrs = min_nbrs
        self.min_sim = min_sim

    def fit(self, ratings, **kwargs):
        _check_knobs(self.nnbrs, self.min_nbrs, self.min_sim)
        check_ratings(ratings)
        ds = build_dataset(ratings)
        explicit = "rating" in ratings.columns
        means, centered = _center_rows(ds, explicit)
        self.feedback_ = "explicit" if explicit else "implicit"
        self.user_index_ = ds.users
        self.item_index_ = ds.items
        self.user_means_ = means
        self.user_norms_ = np.sqrt(
            np.bincount(ds.row_ids(), weights=centered.data**2, minlength=ds.n_users)
        )
        self.rating_matrix_ = centered
        self.by_item_ = centered.tocsc()
        _logger.info(
            "fit user-user model: %d users, %d items (%s feedback)",
            ds.n_users,
            ds.n_items,
            self.feedback_,
        )
        return self

    def predict_for_user(self, user, items, ratings=None):
        check_is_fitted(self)
        idx = pd.Index(items)
        out = np.full(len(idx), np.nan)
        prof = _profile(self, user, ratings)
        if prof is None:
            return pd.Series(out, index=idx)
        qmean, qpos, qvals = prof
        qnorm = float(np.sqrt(np.sum(qvals**2)))
        if qnorm == 0.0:
            return pd.Series(out, index=idx)
        query = np.zeros(len(self.item_index_))
        query[qpos] = qvals
        sims = self.rating_matrix_ @ query
        norms = self.user_norms_ * qnorm
        sims = np.divide(sims, norms, out=np.zeros_like(sims), where=norms > 0)
        upos = self.user_index_.get_indexer([user])[0]
        if upos >= 0:
            sims[upos] = 0.0
        col = self.by_item_
        tpos = self.item_index_.get_indexer(idx)
        for j, ipos in enumerate(tpos):
            if ipos < 0:
                continue
            sl = slice(col.indptr[ipos], col.indptr[ipos + 1])
            raters = col.indices[sl]
            nsims = sims[raters]
            keep = nsims > self.min_sim
            nsims = nsims[keep]
            nvals = col.data[sl][keep]
            if len(nsims) > self.nnbrs:
                top = np.argpartition(nsims, len(nsims) - self.nnbrs)[-self.nnbrs :]
                nsims = nsims[top]
                nvals = nvals[top]
            if len(nsims) < self.min_nbrs:
                continue
            if self.feedback_ == "explicit":
                out[j] = qmean + float(nsims @ nvals) / float(np.sum(nsims))
            else:
                out[j] = float(np.sum(nsims))
        return pd.Series(out, index=idx)


class ItemItem(Predictor):
    """Item-based k-nearest-neighbor rating prediction.

    Fitting precomputes, for every item, its most similar items (cosine over
    the user-centered rating columns), keeping similarities above ``min_sim``
    and at most ``save_nbrs`` of them (0 keeps all).  Scoring item ``i`` takes
    the up-to-``nnbrs`` most similar items the user has rated and averages the
    user's centered ratings of them, weighted by similarity.

    Args:
        nnbrs: maximum neighborhood size used at prediction time.
        min_nbrs: minimum rated neighbors needed to score an item.
        min_sim: similarity threshold; also discards non-positive similarities.
        save_nbrs: per-item cap on stored neighbors (0 = unlimited).
    """

    def __init__(self, nnbrs=20, min_nbrs=1, min_sim=1.0e-6, save_nbrs=0):
        self.nnbrs = nnbrs
        self.min_nbrs = min_nbrs
        self.min_sim = min_sim
        self.save_nbrs = save_nbrs

    def fit(self, ratings, **kwargs):
        _check_knobs(self.nnbrs, self.min_nbrs, self.min_sim)
        if self.save_nbrs < 0:
            raise ValueError("save_nbrs must be nonnegative")
        check_ratings(ratings)
        ds = build_dataset(ratings)
        explicit = "rating" in ratings.columns
        means, centered = _center_rows(ds, explicit)
        n_items = ds.n_items
        norms = np.sqrt(
            np.bincount(centered.indices, weights=centered.data**2, minlength=n_items)
        )
        co = (centered.T @ centered).tocoo()
        denom = norms[co.row] * norms[co.col]
        with np.errstate(invalid="ignore", divide="ignore"):
            sim = np.divide(co.data, denom, out=np.zeros(len(co.data)), where=denom > 0)
        keep = (co.row != co.col) & (sim > self.min_sim)
        rows, cols, sims = co.row[keep], co.col[keep], sim[keep]
        # group by source item, most similar first; equal similarities keep
        # ascending item order for determinism
        order = np.lexsort((cols, -sims, rows))
        rows, cols, sims = rows[order], cols[order], sims[order]
        bounds = np.searchsorted(rows, np.arange(n_items + 1))
        nbr_items, nbr_sims = [], []
        cap = self.save_nbrs if self.save_nbrs > 0 else None
        for i in range(n_items):
            sl = slice(bounds[i], bounds[i + 1] if cap is None else min(bounds[i] + cap, bounds[i + 1]))
            nbr_items.append(cols[sl].copy())
            nbr_sims.append(sims[sl].copy())
        self.feedback_ = "explicit" if explicit else "implicit"
        self.user_index_ = ds.users
        self.item_index_ = ds.items
        self.user_means_ = means
        self.rating_matrix_ = centered
        self.nbr_items_ = nbr_items
        self.nbr_sims_ = nbr_sims
        _logger.info(
            "fit item-item model: %d items, %d stored similarities (%s feedback)",
            n_items,
            sum(len(a) for a in nbr_items),
            self.feedback_,
        )
        return self

    def predict_for_user(self, user, items, ratings=None):
        check_is_fitted(self)
        idx = pd.Index(items)
        out = np.full(len(idx), np.nan)
        prof = _profile(self, user, ratings)
        if prof is None:
            return pd.Series(out, index=idx)
        qmean, qpos, qvals = prof
        n_items = len(self.item_index_)
        rated = np.zeros(n_items, dtype=bool)
        rated[qpos] = True
        values = np.zeros(n_items)
        values[qpos] = qvals
        tpos = self.item_index_.get_indexer(idx)
        for j, ipos in enumerate(tpos):
            if ipos < 0:
                continue
            nbrs = self.nbr_items_[ipos]
            mask = rated[nbrs]
            cand = nbrs[mask][: self.nnbrs]
            csim = self.nbr_sims_[ipos][mask][: self.nnbrs]
            if len(cand) < self.min_nbrs:
                continue
            if self.feedback_ == "explicit":
                out[j] = qmean + float(csim @ values[cand]) / float(np.sum(csim))
            else:
                out[j] = float(np.sum(csim))
        return pd.Series(out, index=idx)
