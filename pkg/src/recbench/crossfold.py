"""Train/test splitting oriented around test users rather than raw rows.

The user-based splitters pick a set of test users per fold, hold out some of
each test user's rows (chosen by a :class:`RowSelector`), and keep the rest of
their history in the training set together with every row of non-test users,
so a model can still learn each test user's preferences.  Row-based splitters
and item-candidate sampling are provided for protocols that need them.

All functions are deterministic for a given seed; the generator is numpy's
default PCG64 (:func:`numpy.random.default_rng`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .exceptions import InfeasibleSplitError, SchemaError
from .validation import check_ratings


@dataclass(frozen=True)
class TrainTestPair:
    """One fold: disjoint train and test rating tables.

    Rows keep the input table's order and all of its columns; ``seed`` records
    the generator seed the fold was produced with.
    """

    train: pd.DataFrame
    test: pd.DataFrame
    fold: int
    seed: int | None = None


class RowSelector:
    """Rule choosing which of one user's rows become test rows."""

    def test_count(self, n_rows: int) -> int:
        "Number of test rows to select from a user with ``n_rows`` rows."
        raise NotImplementedError

    def eligible(self, n_rows: int) -> bool:
        "True when selection leaves the user at least one training row."
        cnt = self.test_count(n_rows)
        return 0 < cnt < n_rows

    def select(self, ratings, positions, rng):
        "Pick test row positions for one user from their ``positions``."
        raise NotImplementedError


class SampleN(RowSelector):
    "Select exactly ``n`` rows per user, uniformly without replacement."

    def __init__(self, n):
        if n < 1:
            raise ValueError("sample size must be at least 1")
        self.n = int(n)

    def test_count(self, n_rows):
        return self.n

    def select(self, ratings, positions, rng):
        return rng.choice(positions, size=self.n, replace=False)

    def __repr__(self):
        return f"SampleN({self.n})"


class SampleFrac(RowSelector):
    """Select a fraction of each user's rows, uniformly without replacement.

    The per-user count is ``f * n_rows`` rounded to the nearest integer
    (half away from zero), with a minimum of one row.
    """

    def __init__(self, frac):
        if not 0.0 < frac < 1.0:
            raise ValueError("fraction must lie in (0, 1)")
        self.frac = float(frac)

    def test_count(self, n_rows):
        return max(1, int(np.floor(self.frac * n_rows + 0.5)))

    def select(self, ratings, positions, rng):
        return rng.choice(positions, size=self.test_count(len(positions)), replace=False)

    def __repr__(self):
        return f"SampleFrac({self.frac})"


class _LastSelector(RowSelector):
    "Shared timestamp-ordered selection: largest timestamps become test rows."

    def select(self, ratings, positions, rng):
        if "timestamp" not in ratings.columns:
            raise SchemaError("time-based selection requires a timestamp column")
        ts = ratings["timestamp"].to_numpy()[positions]
        order = np.argsort(ts, kind="stable")  # ties keep input order
        cnt = self.test_count(len(positions))
        return positions[order[len(positions) - cnt :]]


class LastN(_LastSelector):
    "Select each user's ``n`` most recent rows (largest timestamps)."

    def __init__(self, n):
        if n < 1:
            raise ValueError("sample size must be at least 1")
        self.n = int(n)

    def test_count(self, n_rows):
        return self.n

    def __repr__(self):
        return f"LastN({self.n})"


class LastFrac(_LastSelector):
    "Select the most recent fraction of each user's rows."

    def __init__(self, frac):
        if not 0.0 < frac < 1.0:
            raise ValueError("fraction must lie in (0, 1)")
        self.frac = float(frac)

    def test_count(self, n_rows):
        return max(1, int(np.floor(self.frac * n_rows + 0.5)))

    def __repr__(self):
        return f"LastFrac({self.frac})"


_SELECTOR_SPELLINGS = {
    "n": SampleN,
    "frac": SampleFrac,
    "last-n": LastN,
    "last-frac": LastFrac,
}


def selector_from_string(spec: str) -> RowSelector:
    """Parse a selector spelling like ``n:5``, ``frac:0.2``, ``last-n:3``."""
    kind, sep, arg = spec.partition(":")
    if not sep or kind not in _SELECTOR_SPELLINGS:
        raise ValueError(f"unknown selector spec {spec!r}")
    cls = _SELECTOR_SPELLINGS[kind]
    value = int(arg) if kind in ("n", "last-n") else float(arg)
    return cls(value)


def selector_to_string(select: RowSelector) -> str:
    "Inverse of :func:`selector_from_string`."
    if isinstance(select, SampleN):
        return f"n:{select.n}"
    elif isinstance(select, SampleFrac):
        return f"frac:{select.frac}"
    elif isinstance(select, LastN):
        return f"last-n:{select.n}"
    elif isinstance(select, LastFrac):
        return f"last-frac:{select.frac}"
    raise ValueError(f"cannot spell selector {select!r}")


def partition_users(ratings, k, select, seed):
    """Partition users into ``k`` folds of test users.

    Users whose row count makes selection infeasible (the selector would take
    their whole history) stay in the training set of every fold.  Each
    eligible user is a test user in exactly one fold.

    Args:
        ratings: the rating table to split.
        k: number of folds, at least 2.
        select: the :class:`RowSelector` picking each test user's test rows.
        seed: RNG seed; identical inputs and seed give identical folds.

    Returns:
        list of ``k`` :class:`TrainTestPair`.
    """
    check_ratings(ratings)
    if k < 2:
        raise InfeasibleSplitError(f"k={k}: partitioning needs at least 2 folds")
    groups = ratings.groupby("user", sort=False).indices
    eligible = [u for u, pos in groups.items() if select.eligible(len(pos))]
    if k > len(eligible):
        raise InfeasibleSplitError(
            f"cannot make {k} folds from {len(eligible)} eligible users"
        )
    rng = np.random.default_rng(seed)
    shuffled = [eligible[j] for j in rng.permutation(len(eligible))]
    pairs = []
    for fold, fold_users in enumerate(_near_equal_chunks(shuffled, k)):
        test_pos = _select_rows(ratings, groups, fold_users, select, rng)
        pairs.append(_make_pair(ratings, test_pos, fold, seed))
    return pairs


def sample_users(ratings, k, size, select, seed):
    """Draw ``k`` disjoint samples of ``size`` test users each.

    Useful when evaluating on every user is too expensive; every user appears
    as a test user in at most one fold.
    """
    check_ratings(ratings)
    if k < 1 or size < 1:
        raise InfeasibleSplitError("k and size must both be at least 1")
    groups = ratings.groupby("user", sort=False).indices
    eligible = [u for u, pos in groups.items() if select.eligible(len(pos))]
    if k * size > len(eligible):
        raise InfeasibleSplitError(
            f"cannot draw {k} samples of {size} users from {len(eligible)} eligible users"
        )
    rng = np.random.default_rng(seed)
    shuffled = [eligible[j] for j in rng.permutation(len(eligible))]
    pairs = []
    for fold in range(k):
        fold_users = shuffled[fold * size : (fold + 1) * size]
        test_pos = _select_rows(ratings, groups, fold_users, select, rng)
        pairs.append(_make_pair(ratings, test_pos, fold, seed))
    return pairs


def partition_rows(ratings, k, seed):
    """Partition rows into ``k`` near-equal disjoint test sets.

    Fold test-set sizes differ by at most one; each fold's training set is the
    complement of its test rows.
    """
    check_ratings(ratings)
    if k < 2:
        raise InfeasibleSplitError(f"k={k}: partitioning needs at least 2 folds")
    n = len(ratings)
    if n < k:
        raise InfeasibleSplitError(f"cannot make {k} folds from {n} rows")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    pairs = []
    for fold, chunk in enumerate(_near_equal_chunks(perm, k)):
        pairs.append(_make_pair(ratings, np.asarray(chunk), fold, seed))
    return pairs


def sample_rows(ratings, k, size, seed, disjoint=True):
    """Draw ``k`` test samples of ``size`` rows each.

    With ``disjoint`` (the default) the samples never share a row; otherwise
    each fold is an independent uniform sample.
    """
    check_ratings(ratings)
    if k < 1 or size < 1:
        raise InfeasibleSplitError("k and size must both be at least 1")
    n = len(ratings)
    rng = np.random.default_rng(seed)
    pairs = []
    if disjoint:
        if k * size > n:
            raise InfeasibleSplitError(
                f"cannot draw {k} disjoint samples of {size} rows from {n} rows"
            )
        perm = rng.permutation(n)
        for fold in range(k):
            chunk = perm[fold * size : (fold + 1) * size]
            pairs.append(_make_pair(ratings, chunk, fold, seed))
    else:
        if size > n:
            raise InfeasibleSplitError(f"cannot sample {size} rows from {n} rows")
        for fold in range(k):
            chunk = rng.choice(n, size=size, replace=False)
            pairs.append(_make_pair(ratings, chunk, fold, seed))
    return pairs


def select_item_candidates(test, n_negatives, universe, seed, train=None):
    """Build per-user candidate lists: test items plus sampled negatives.

    For each test user, the list holds their test items followed by
    ``n_negatives`` items sampled uniformly from the universe items the user
    has not rated.  Pass the training table as ``train`` so items rated there
    are excluded from the negative pool as well.

    Returns:
        dict mapping user id to an array of candidate item ids.
    """
    check_ratings(test)
    universe = pd.Index(universe)
    rng = np.random.default_rng(seed)
    rated = {}
    for frame in (train, test):
        if frame is None:
            continue
        for user, pos in frame.groupby("user", sort=False).indices.items():
            items = frame["item"].to_numpy()[pos]
            rated.setdefault(user, set()).update(items)
    out = {}
    for user, pos in test.groupby("user", sort=False).indices.items():
        test_items = pd.unique(test["item"].to_numpy()[pos])
        pool = universe[~universe.isin(rated[user])].to_numpy()
        if n_negatives > len(pool):
            raise InfeasibleSplitError(
                f"user {user!r}: universe has only {len(pool)} unrated items, "
                f"cannot sample {n_negatives} negatives"
            )
        if n_negatives > 0:
            negs = pool[rng.choice(len(pool), size=n_negatives, replace=False)]
            out[user] = np.concatenate([test_items, negs])
        else:
            out[user] = test_items
    return out


def _select_rows(ratings, groups, fold_users, select, rng):
    if not fold_users:
        return np.array([], dtype=np.intp)
    picked = [select.select(ratings, groups[u], rng) for u in fold_users]
    return np.sort(np.concatenate(picked))


def _make_pair(ratings, test_pos, fold, seed):
    test_pos = np.sort(np.asarray(test_pos))
    mask = np.zeros(len(ratings), dtype=bool)
    mask[test_pos] = True
    test = ratings.iloc[test_pos]
    train = ratings.iloc[np.flatnonzero(~mask)]
    return TrainTestPair(train=train, test=test, fold=fold, seed=seed)


def _near_equal_chunks(values, k):
    "Split ``values`` into k chunks; the first ``len % k`` chunks get one extra."
    n = len(values)
    base, extra = divmod(n, k)
    start = 0
    for j in range(k):
        size = base + (1 if j < extra else 0)
        yield values[start : start + size]
        start += size
