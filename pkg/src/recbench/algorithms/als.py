"""Matrix factorization trained with alternating least squares.

``BiasedMF`` handles explicit ratings: it fits a bias model first, then
factorizes the residuals, optimizing each half (user factors, then item
factors) by cyclic coordinate descent.  ``ImplicitMF`` handles interaction
data with confidence weighting, solving each row's regularized least-squares
system with a few steps of conjugate gradient.

Both trainers run a fixed number of iterations with no early exit, log their
loss per step in ``training_loss_``, and are deterministic given the model
seed.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np
import pandas as pd
from sklearn.utils.validation import check_is_fitted

from ..data import build_dataset
from ..validation import check_ratings
from .base import Predictor
from .basic import Bias

_logger = logging.getLogger(__name__)


def _init_factors(rng, shape):
    return rng.uniform(-0.01, 0.01, size=shape)


def _cd_half_sweep(row, col, resid, this, other, reg, row_counts):
    """One coordinate-descent pass over every row of ``this``.

    Entries (row, col, resid) must be grouped so ``row`` indexes ``this`` and
    ``col`` indexes ``other``.  For each feature g, the closed-form update

        this[u, g] = sum(other[i, g] * (resid + this[u, g] * other[i, g]))
                     / (sum(other[i, g]^2) + reg * row_counts[u])

    is applied to all rows at once and ``resid`` is adjusted in place, so each
    update is the exact one-dimensional minimizer of the count-weighted
    regularized squared error.
    """
    nr, nf = this.shape
    for g in range(nf):
        og = other[col, g]
        num = np.bincount(row, weights=og * resid, minlength=nr)
        sq = np.bincount(row, weights=og * og, minlength=nr)
        pg = this[:, g]
        denom = sq + reg * row_counts
        new = np.divide(num + pg * sq, denom, out=pg.copy(), where=denom > 0)
        resid -= (new - pg)[row] * og
        this[:, g] = new


def _cd_objective(resid, P, Q, reg, user_counts, item_counts):
    "Count-weighted regularized squared error of the current factors."
    penalty = user_counts @ np.sum(P * P, axis=1) + item_counts @ np.sum(Q * Q, axis=1)
    return float(resid @ resid + reg * penalty)


class BiasedMF(Predictor):
    """Biased matrix factorization for explicit feedback.

    Predicts ``mean + user_offset + item_offset + p_u . q_i``; the offsets of
    unknown users or items are zero, so cold-start predictions fall back to
    the bias model.  Regularization of each row is scaled by its rating count.

    Args:
        features: number of latent features (at least 1).
        reg: regularization strength.
        iterations: number of alternating rounds (user sweep + item sweep).
        damping: damping for the underlying bias model.
        seed: seed for factor initialization.
    """

    def __init__(self, features, *, reg=0.1, iterations=20, damping=0.0, seed=0):
        self.features = features
        self.reg = reg
        self.iterations = iterations
        self.damping = damping
        self.seed = seed

    def fit(self, ratings, **kwargs):
        if self.features < 1:
            raise ValueError("features must be at least 1")
        if self.reg < 0:
            raise ValueError("reg must be nonnegative")
        check_ratings(ratings, require_rating=True)
        bias = Bias(user_damping=self.damping, item_damping=self.damping)
        bias.fit(ratings)
        ds = build_dataset(ratings)
        if self.features > min(ds.n_users, ds.n_items):
            warnings.warn(
                f"features={self.features} exceeds the smaller matrix dimension "
                f"{min(ds.n_users, ds.n_items)}",
                stacklevel=2,
            )
        mat = ds.matrix
        row = ds.row_ids()
        col = mat.indices
        bu = bias.user_offsets_.reindex(ds.users).fillna(0.0).to_numpy()
        bi = bias.item_offsets_.reindex(ds.items).fillna(0.0).to_numpy()

        rng = np.random.default_rng(self.seed)
        P = _init_factors(rng, (ds.n_users, self.features))
        Q = _init_factors(rng, (ds.n_items, self.features))
        # resid tracks the full current error, so the initial factor product
        # must be part of it
        resid = mat.data - bias.mean_ - bu[row] - bi[col]
        resid -= np.einsum("ij,ij->i", P[row], Q[col])
        user_counts = np.diff(mat.indptr).astype(np.float64)
        item_counts = np.bincount(col, minlength=ds.n_items).astype(np.float64)
        csc_order = np.lexsort((row, col))
        row_c = row[csc_order]
        col_c = col[csc_order]

        losses = []
        for it in range(self.iterations):
            _cd_half_sweep(row, col, resid, P, Q, self.reg, user_counts)
            losses.append(_cd_objective(resid, P, Q, self.reg, user_counts, item_counts))
            resid_c = resid[csc_order]
            _cd_half_sweep(col_c, row_c, resid_c, Q, P, self.reg, item_counts)
            resid[csc_order] = resid_c
            losses.append(_cd_objective(resid, P, Q, self.reg, user_counts, item_counts))
            _logger.debug("round %d: objective %.6f", it, losses[-1])
        _logger.info(
            "fit %d-feature MF on %d ratings, final objective %.4f",
            self.features,
            mat.nnz,
            losses[-1],
        )

        self.bias_ = bias
        self.user_index_ = ds.users
        self.item_index_ = ds.items
        self.user_features_ = P
        self.item_features_ = Q
        self.training_loss_ = losses
        return self

    def predict_for_user(self, user, items, ratings=None):
        check_is_fitted(self)
        preds = self.bias_.predict_for_user(user, items)
        upos = self.user_index_.get_indexer([user])[0]
        if upos >= 0:
            ipos = self.item_index_.get_indexer(preds.index)
            known = ipos >= 0
            vals = preds.to_numpy()
            vals[known] += self.item_features_[ipos[known]] @ self.user_features_[upos]
            preds = pd.Series(vals, index=preds.index)
        return preds


def _cg_solve(G, M, w, reg, b, x, steps):
    """Minimize the row subproblem by conjugate gradient, starting from ``x``.

    Solves (G + reg*I + M' diag(w) M) x = b without forming the matrix; each
    step reduces the quadratic objective, so truncated runs still make
    progress monotonically.
    """

    def apply(v):
        return G @ v + reg * v + M.T @ (w * (M @ v))

    r = b - apply(x)
    p = r.copy()
    rs = float(r @ r)
    for _ in range(steps):
        if rs == 0.0:
            break
        Ap = apply(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            break
        alpha = rs / pAp
        x += alpha * p
        r -= alpha * Ap
        rs_next = float(r @ r)
        p = r + (rs_next / rs) * p
        rs = rs_next
    return x


def _half_round(this, other, indptr, indices, values, weight, reg, cg_steps):
    "Recompute every row of ``this`` against frozen ``other``."
    G = other.T @ other
    for u in range(this.shape[0]):
        s, e = indptr[u], indptr[u + 1]
        if s == e:
            this[u, :] = 0.0
            continue
        cols = indices[s:e]
        w = weight * values[s:e]  # confidence minus one on the rated items
        M = other[cols]
        b = M.T @ (1.0 + w)
        this[u] = _cg_solve(G, M, w, reg, b, this[u].copy(), cg_steps)


def _implicit_loss(X, Y, row, col, vals, weight, reg):
    """Full confidence-weighted loss over all user-item pairs.

    Unobserved pairs have confidence 1 and preference 0; observed pairs have
    confidence ``1 + weight * value`` and preference 1.
    """
    G = Y.T @ Y
    total = float(np.einsum("uf,fg,ug->", X, G, X))
    dots = np.einsum("ij,ij->i", X[row], Y[col])
    c = 1.0 + weight * vals
    observed = float(np.sum(c * (1.0 - dots) ** 2 - dots**2))
    penalty = float(np.sum(X * X) + np.sum(Y * Y))
    return total + observed + reg * penalty


class ImplicitMF(Predictor):
    """Confidence-weighted matrix factorization for implicit feedback.

    Each interaction value r becomes a confidence ``1 + weight * r`` on the
    preference 1; all other pairs carry preference 0 at confidence 1.  A
    missing rating column means every interaction counts as r = 1.  Scores
    are bare factor dot products, useful for ranking but not on a rating
    scale; unknown users or items score as missing.

    Args:
        features: number of latent features.
        reg: regularization strength.
        weight: confidence weight on interaction values.
        iterations: number of alternating rounds.
        cg_steps: conjugate-gradient steps per row solve.
        seed: seed for factor initialization.
    """

    def __init__(self, features, *, reg=0.1, weight=40.0, iterations=20, cg_steps=3, seed=0):
        self.features = features
        self.reg = reg
        self.weight = weight
        self.iterations = iterations
        self.cg_steps = cg_steps
        self.seed = seed

    def fit(self, ratings, **kwargs):
        if self.features < 1:
            raise ValueError("features must be at least 1")
        if self.cg_steps < 1:
            raise ValueError("cg_steps must be at least 1")
        if self.weight <= 0:
            raise ValueError("weight must be positive")
        check_ratings(ratings)
        ds = build_dataset(ratings)
        mat = ds.matrix
        if np.any(mat.data < 0):
            raise ValueError("interaction values must be nonnegative")
        colmat = ds.by_item
        row = ds.row_ids()
        col = mat.indices

        rng = np.random.default_rng(self.seed)
        X = _init_factors(rng, (ds.n_users, self.features))
        Y = _init_factors(rng, (ds.n_items, self.features))

        losses = []
        for it in range(self.iterations):
            _half_round(X, Y, mat.indptr, mat.indices, mat.data, self.weight, self.reg, self.cg_steps)
            _half_round(Y, X, colmat.indptr, colmat.indices, colmat.data, self.weight, self.reg, self.cg_steps)
            losses.append(_implicit_loss(X, Y, row, col, mat.data, self.weight, self.reg))
            _logger.debug("round %d: loss %.6f", it, losses[-1])
        _logger.info(
            "fit %d-feature implicit MF on %d interactions, final loss %.4f",
            self.features,
            mat.nnz,
            losses[-1] if losses else float("nan"),
        )

        self.user_index_ = ds.users
        self.item_index_ = ds.items
        self.user_features_ = X
        self.item_features_ = Y
        self.training_loss_ = losses
        return self

    def predict_for_user(self, user, items, ratings=None):
        check_is_fitted(self)
        idx = pd.Index(items)
        out = np.full(len(idx), np.nan)
        upos = self.user_index_.get_indexer([user])[0]
        if upos >= 0:
            ipos = self.item_index_.get_indexer(idx)
            known = ipos >= 0
            out[known] = self.item_features_[ipos[known]] @ self.user_features_[upos]
        return pd.Series(out, index=idx)
