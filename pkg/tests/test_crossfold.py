import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from recbench.crossfold import (
    LastFrac,
    LastN,
    SampleFrac,
    SampleN,
    partition_rows,
    partition_users,
    sample_rows,
    sample_users,
    select_item_candidates,
    selector_from_string,
    selector_to_string,
)
from recbench.exceptions import InfeasibleSplitError, SchemaError

from conftest import random_ratings


def uniform_ratings(n_users, per_user):
    "Deterministic table: every user has exactly per_user rows."
    rows = []
    for u in range(n_users):
        for j in range(per_user):
            rows.append((f"u{u}", f"i{j}", float(1 + (u + j) % 5), u * 100 + j))
    return pd.DataFrame(rows, columns=["user", "item", "rating", "timestamp"])


def expected_fold_counts(n_eligible, k):
    "Enumeration oracle: near-equal fold sizes, first n%k folds get one extra."
    base, extra = divmod(n_eligible, k)
    return [base + (1 if j < extra else 0) for j in range(k)]


def test_partition_users_count_arithmetic():
    # 10 users x 6 ratings, k=5, SampleN(5): per fold 2 test users,
    # 2*5=10 test rows, 60-10=50 train rows
    ratings = uniform_ratings(10, 6)
    folds = partition_users(ratings, 5, SampleN(5), seed=17)
    sizes = expected_fold_counts(10, 5)
    for pair, expect_users in zip(folds, sizes):
        assert pair.test["user"].nunique() == expect_users
        assert len(pair.test) == expect_users * 5
        assert len(pair.train) == len(ratings) - len(pair.test)


def test_partition_users_two_users():
    ratings = uniform_ratings(2, 3)
    folds = partition_users(ratings, 2, SampleN(1), seed=3)
    for pair in folds:
        assert pair.test["user"].nunique() == 1
        assert len(pair.test) == 1


def test_partition_users_coverage_and_disjointness():
    ratings = random_ratings(5, n_users=23, n_items=30, per_user=(6, 10))
    folds = partition_users(ratings, 4, SampleN(3), seed=11)
    seen = [set(pair.test["user"]) for pair in folds]
    all_test_users = set().union(*seen)
    assert all_test_users == set(ratings["user"])
    for a in range(len(seen)):
        for b in range(a + 1, len(seen)):
            assert not seen[a] & seen[b]


def test_partition_users_rows_disjoint_and_complete():
    ratings = uniform_ratings(8, 5)
    for pair in partition_users(ratings, 4, SampleN(2), seed=0):
        train_idx = set(pair.train.index)
        test_idx = set(pair.test.index)
        assert not train_idx & test_idx
        assert train_idx | test_idx == set(ratings.index)


def test_partition_users_ineligible_users_stay_in_train():
    ratings = pd.concat(
        [uniform_ratings(6, 8), uniform_ratings(3, 2).assign(user=lambda d: d.user + "small")],
        ignore_index=True,
    )
    folds = partition_users(ratings, 3, SampleN(4), seed=9)
    small = {u for u in ratings["user"] if u.endswith("small")}
    for pair in folds:
        assert not small & set(pair.test["user"])
        # their rows are all in train
        assert (pair.train["user"].isin(small)).sum() == 6


def test_partition_users_every_test_user_has_train_rows():
    ratings = random_ratings(2, n_users=15, per_user=(2, 7))
    for pair in partition_users(ratings, 3, SampleN(2), seed=4):
        train_users = set(pair.train["user"])
        for user in pair.test["user"]:
            assert user in train_users


def test_partition_users_infeasible():
    ratings = uniform_ratings(3, 4)
    with pytest.raises(InfeasibleSplitError):
        partition_users(ratings, 4, SampleN(2), seed=0)
    with pytest.raises(InfeasibleSplitError):
        partition_users(ratings, 1, SampleN(2), seed=0)
    # nobody has > 5 rows, so nobody is eligible
    with pytest.raises(InfeasibleSplitError):
        partition_users(ratings, 2, SampleN(5), seed=0)


def test_sample_users_basic():
    ratings = uniform_ratings(100, 4)
    folds = sample_users(ratings, 3, 10, SampleN(2), seed=5)
    assert len(folds) == 3
    testers = [set(p.test["user"]) for p in folds]
    assert all(len(t) == 10 for t in testers)
    assert len(set().union(*testers)) == 30


def test_sample_users_every_user_exactly_once():
    # 50 users, k=5, size=10: the samples tile the whole user set
    ratings = uniform_ratings(50, 4)
    folds = sample_users(ratings, 5, 10, SampleN(2), seed=8)
    testers = [set(p.test["user"]) for p in folds]
    assert len(set().union(*testers)) == 50
    for a in range(5):
        for b in range(a + 1, 5):
            assert not testers[a] & testers[b]


def test_sample_users_infeasible():
    ratings = uniform_ratings(10, 4)
    with pytest.raises(InfeasibleSplitError):
        sample_users(ratings, 3, 4, SampleN(2), seed=1)


def test_partition_rows_sizes():
    ratings = uniform_ratings(2, 5)  # 10 rows
    folds = partition_rows(ratings, 5, seed=2)
    assert [len(p.test) for p in folds] == [2, 2, 2, 2, 2]
    test_sets = [set(p.test.index) for p in folds]
    assert set().union(*test_sets) == set(ratings.index)
    for a in range(5):
        for b in range(a + 1, 5):
            assert not test_sets[a] & test_sets[b]


@given(st.integers(min_value=2, max_value=12), st.integers(min_value=2, max_value=8))
def test_partition_rows_near_equal(n_mult, k):
    n = n_mult * k + (n_mult % k)
    ratings = uniform_ratings(1, n)
    folds = partition_rows(ratings, k, seed=1)
    sizes = [len(p.test) for p in folds]
    assert sum(sizes) == n
    assert max(sizes) - min(sizes) <= 1


def test_partition_rows_infeasible():
    ratings = uniform_ratings(1, 3)
    with pytest.raises(InfeasibleSplitError):
        partition_rows(ratings, 5, seed=0)
    with pytest.raises(InfeasibleSplitError):
        partition_rows(ratings, 1, seed=0)


def test_sample_rows_disjoint():
    ratings = uniform_ratings(3, 5)
    folds = sample_rows(ratings, 3, 4, seed=6)
    test_sets = [set(p.test.index) for p in folds]
    assert all(len(t) == 4 for t in test_sets)
    for a in range(3):
        for b in range(a + 1, 3):
            assert not test_sets[a] & test_sets[b]


def test_sample_rows_overlapping():
    ratings = uniform_ratings(2, 4)
    folds = sample_rows(ratings, 5, 6, seed=6, disjoint=False)
    assert all(len(p.test) == 6 for p in folds)


def test_sample_rows_infeasible():
    ratings = uniform_ratings(2, 4)
    with pytest.raises(InfeasibleSplitError):
        sample_rows(ratings, 3, 4, seed=0)
    with pytest.raises(InfeasibleSplitError):
        sample_rows(ratings, 1, 9, seed=0, disjoint=False)


def test_lastn_selects_most_recent():
    ratings = random_ratings(7, n_users=10, per_user=(4, 8))
    folds = partition_users(ratings, 3, LastN(2), seed=13)
    for pair in folds:
        for user in pair.test["user"].unique():
            test_ts = pair.test.loc[pair.test["user"] == user, "timestamp"]
            train_ts = pair.train.loc[pair.train["user"] == user, "timestamp"]
            assert len(test_ts) == 2
            assert train_ts.max() <= test_ts.min()


def test_lastn_requires_timestamp():
    ratings = uniform_ratings(4, 3).drop(columns="timestamp")
    with pytest.raises(SchemaError):
        partition_users(ratings, 2, LastN(1), seed=0)


def test_samplefrac_minimum_one_row():
    ratings = uniform_ratings(6, 3)
    folds = partition_users(ratings, 2, SampleFrac(0.1), seed=0)
    for pair in folds:
        counts = pair.test.groupby("user").size()
        assert (counts == 1).all()


def test_lastfrac_counts():
    sel = LastFrac(0.5)
    assert sel.test_count(4) == 2
    assert sel.test_count(5) == 3  # rounds half away from zero
    assert sel.test_count(1) == 1
    assert not sel.eligible(1)


def test_selector_validation():
    with pytest.raises(ValueError):
        SampleN(0)
    with pytest.raises(ValueError):
        SampleFrac(1.0)
    with pytest.raises(ValueError):
        LastFrac(0.0)


def test_selector_string_roundtrip():
    for spec in ["n:5", "frac:0.25", "last-n:3", "last-frac:0.5"]:
        assert selector_to_string(selector_from_string(spec)) == spec
    with pytest.raises(ValueError):
        selector_from_string("bogus:1")


def test_split_determinism():
    ratings = random_ratings(3, n_users=14, per_user=(3, 8))
    a = partition_users(ratings, 3, SampleN(2), seed=99)
    b = partition_users(ratings, 3, SampleN(2), seed=99)
    for pa, pb in zip(a, b):
        assert pa.train.to_csv() == pb.train.to_csv()
        assert pa.test.to_csv() == pb.test.to_csv()
    c = partition_users(ratings, 3, SampleN(2), seed=100)
    assert any(
        not pa.test.equals(pc.test) for pa, pc in zip(a, c)
    ), "different seeds should shuffle users differently"


def test_extra_columns_survive_splits(simple_ratings):
    folds = partition_users(simple_ratings, 2, SampleN(1), seed=1)
    for pair in folds:
        joined = pd.concat([pair.train, pair.test]).sort_index()
        assert joined["note"].tolist() == simple_ratings["note"].tolist()


def test_select_item_candidates_counts(simple_ratings):
    test = simple_ratings.iloc[[0]]  # u1 rated item a
    universe = [f"x{j}" for j in range(10)] + ["a"]
    cands = select_item_candidates(test, 3, universe, seed=1)
    assert len(cands["u1"]) == 4
    assert cands["u1"][0] == "a"


def test_select_item_candidates_identity(simple_ratings):
    test = simple_ratings[simple_ratings["user"] == "u1"]
    cands = select_item_candidates(test, 0, ["a", "b", "c", "z"], seed=1)
    assert cands["u1"].tolist() == ["a", "b", "c"]


def test_select_item_candidates_never_hits_rated():
    rng = np.random.default_rng(21)
    universe = [f"i{j}" for j in range(25)]
    for trial in range(200):
        ratings = random_ratings(trial, n_users=6, n_items=25, per_user=(3, 10))
        folds = partition_users(ratings, 2, SampleN(1), seed=trial)
        pair = folds[rng.integers(2)]
        cands = select_item_candidates(
            pair.test, 5, universe, seed=trial, train=pair.train
        )
        rated = ratings.groupby("user")["item"].agg(set)
        for user, items in cands.items():
            negatives = set(items) - set(pair.test.loc[pair.test["user"] == user, "item"])
            assert not negatives & rated[user]


def test_select_item_candidates_universe_too_small(simple_ratings):
    test = simple_ratings[simple_ratings["user"] == "u1"]
    with pytest.raises(InfeasibleSplitError):
        select_item_candidates(test, 3, ["a", "b", "c", "z"], seed=1)
