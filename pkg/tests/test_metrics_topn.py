import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from recbench.exceptions import SchemaError
from recbench.metrics import (
    RecListAnalysis,
    avg_precision,
    hit,
    ndcg,
    precision,
    recall,
    recip_rank,
)

# ---------------------------------------------------------------------------
# oracles


def set_count_oracle(rec_items, rel_items):
    "Plain set arithmetic for the join-style metrics."
    hits = len([i for i in rec_items if i in set(rel_items)])
    prec = hits / len(rec_items) if rec_items else float("nan")
    rec = hits / len(rel_items) if rel_items else float("nan")
    any_hit = 1.0 if hits else 0.0
    return prec, rec, any_hit


def rank_walk_ap_oracle(rec_items, rel_items, list_len=None):
    rel = set(rel_items)
    hits = 0
    total = 0.0
    for rank, item in enumerate(rec_items, start=1):
        if item in rel:
            hits += 1
            total += hits / rank
    denom = min(len(rel), list_len if list_len is not None else len(rec_items))
    return total / denom if denom else 0.0


def discount_table_oracle(rec_gains, truth_gains):
    "Independent nDCG: explicit discount table, ideal over the full truth."

    def dcg(gains):
        return sum(g / math.log2(max(r, 2)) for r, g in enumerate(gains, start=1))

    ideal = dcg(sorted(truth_gains, reverse=True))
    return dcg(rec_gains) / ideal if ideal > 0 else 0.0


def recs_of(items):
    return pd.DataFrame({"item": list(items)})


def truth_of(items, ratings=None):
    frame = pd.DataFrame({"item": list(items)})
    if ratings is not None:
        frame["rating"] = list(ratings)
    return frame.set_index("item")


# ---------------------------------------------------------------------------
# single-list metrics


def test_precision_recall_hit_counts():
    # 10 recommendations, 3 of 6 relevant items among them
    recs = recs_of([f"r{j}" for j in range(7)] + ["a", "b", "c"])
    truth = truth_of(["a", "b", "c", "d", "e", "f"])
    want_p, want_r, want_h = set_count_oracle(recs["item"].tolist(), list(truth.index))
    assert want_p == pytest.approx(0.3)
    assert want_r == pytest.approx(0.5)
    assert want_h == 1.0
    assert precision(recs, truth) == pytest.approx(want_p, abs=1e-12)
    assert recall(recs, truth) == pytest.approx(want_r, abs=1e-12)
    assert hit(recs, truth) == want_h


def test_first_relevant_at_rank_four():
    recs = recs_of(["x1", "x2", "x3", "a"])
    truth = truth_of(["a", "b"])
    assert recip_rank(recs, truth) == pytest.approx(0.25, abs=1e-12)


def test_nothing_relevant():
    recs = recs_of(["x1", "x2"])
    truth = truth_of(["a"])
    assert hit(recs, truth) == 0.0
    assert recip_rank(recs, truth) == 0.0
    assert avg_precision(recs, truth) == 0.0


def test_empty_rec_list():
    truth = truth_of(["a", "b"])
    assert np.isnan(precision(recs_of([]), truth))
    assert recall(recs_of([]), truth) == 0.0


def test_recall_capped_variant():
    recs = recs_of(["a", "b"])
    truth = truth_of(["a", "b", "c", "d"])
    assert recall(recs, truth) == pytest.approx(0.5)
    assert recall(recs, truth, capped=True) == pytest.approx(1.0)


def test_avg_precision_hand_case():
    # relevant items at ranks 1 and 3, two relevant items total
    recs = recs_of(["a", "x", "b"])
    truth = truth_of(["a", "b"])
    want = rank_walk_ap_oracle(["a", "x", "b"], ["a", "b"])
    assert want == pytest.approx(5.0 / 6.0, abs=1e-12)
    assert avg_precision(recs, truth) == pytest.approx(want, abs=1e-12)


def test_avg_precision_perfect_prefix():
    recs = recs_of(["a", "b", "x", "y"])
    truth = truth_of(["a", "b"])
    assert avg_precision(recs, truth) == pytest.approx(1.0, abs=1e-12)


def test_ndcg_single_relevant_at_rank_three():
    recs = recs_of(["x1", "x2", "a"])
    truth = truth_of(["a"])
    want = discount_table_oracle([0.0, 0.0, 1.0], [1.0])
    assert want == pytest.approx(1.0 / math.log2(3.0), abs=1e-12)
    assert ndcg(recs, truth) == pytest.approx(want, abs=1e-12)


def test_ndcg_ideal_ordering_is_one():
    recs = recs_of(["a", "b", "c"])
    truth = truth_of(["a", "b", "c"], ratings=[5.0, 4.0, 3.0])
    assert ndcg(recs, truth, gain="rating") == pytest.approx(1.0, abs=1e-12)
    assert ndcg(recs, truth) == pytest.approx(1.0, abs=1e-12)


def test_ndcg_empty_truth_is_zero():
    assert ndcg(recs_of(["a"]), truth_of([])) == 0.0


def test_ndcg_rating_gain_ranks_misorder():
    # ranks 1 and 2 share a discount, so the order signal appears at rank 3
    truth = truth_of(["a", "b", "c"], ratings=[1.0, 5.0, 3.0])
    good = ndcg(recs_of(["b", "c", "a"]), truth, gain="rating")
    bad = ndcg(recs_of(["a", "c", "b"]), truth, gain="rating")
    assert good == pytest.approx(1.0)
    assert bad < good


def test_ndcg_rating_gain_without_ratings_counts_ones():
    truth = truth_of(["a", "b"])  # no rating column
    assert ndcg(recs_of(["a", "b"]), truth, gain="rating") == pytest.approx(1.0)


def test_ndcg_appending_zero_gain_items():
    truth = truth_of(["a", "b"])
    base = recs_of(["a", "x"])
    longer = recs_of(["a", "x", "y", "z"])
    assert ndcg(longer, truth) == pytest.approx(ndcg(base, truth), abs=1e-12)


def test_ndcg_matches_oracle_on_random_lists():
    rng = np.random.default_rng(4)
    for _ in range(50):
        items = [f"i{j}" for j in range(12)]
        rng.shuffle(items)
        rec_items = items[: rng.integers(1, 10)]
        rel = {f"i{j}": float(rng.integers(1, 6)) for j in rng.choice(12, rng.integers(1, 8), replace=False)}
        truth = truth_of(list(rel), ratings=list(rel.values()))
        rec_gains = [rel.get(i, 0.0) for i in rec_items]
        want = discount_table_oracle(rec_gains, list(rel.values()))
        got = ndcg(recs_of(rec_items), truth, gain="rating")
        assert got == pytest.approx(want, abs=1e-12)


@given(
    st.lists(st.integers(min_value=0, max_value=30), min_size=0, max_size=15, unique=True),
    st.lists(st.integers(min_value=0, max_value=30), min_size=1, max_size=15, unique=True),
)
def test_metric_ranges(rec_ids, rel_ids):
    recs = recs_of([f"i{j}" for j in rec_ids])
    truth = truth_of([f"i{j}" for j in rel_ids])
    for fn in (recall, hit, recip_rank, avg_precision, ndcg):
        value = fn(recs, truth)
        assert 0.0 <= value <= 1.0
    p = precision(recs, truth)
    assert np.isnan(p) or 0.0 <= p <= 1.0


def test_metrics_are_pure():
    recs = recs_of(["a", "x", "b"])
    truth = truth_of(["a", "b"])
    first = [fn(recs, truth) for fn in (precision, recall, hit, recip_rank, avg_precision, ndcg)]
    second = [fn(recs, truth) for fn in (precision, recall, hit, recip_rank, avg_precision, ndcg)]
    assert first == second


# ---------------------------------------------------------------------------
# RecListAnalysis


def make_recs(user, items, algorithm=None):
    frame = pd.DataFrame(
        {
            "user": user,
            "item": items,
            "score": np.linspace(1.0, 0.1, len(items)),
            "rank": np.arange(1, len(items) + 1),
        }
    )
    if algorithm is not None:
        frame.insert(0, "algorithm", algorithm)
    return frame


def rla_loop_oracle(recs, truth, group_cols, include_missing=True):
    "Per-user loop over groups, computing each metric directly."
    rows = []
    truth_by_user = {
        u: truth[truth["user"] == u].drop_duplicates("item", keep="last").set_index("item")
        for u in truth["user"].unique()
    }
    if group_cols:
        keys = sorted(set(map(tuple, recs[group_cols].itertuples(index=False))))
    else:
        keys = [()]
    for key in keys:
        sel = np.ones(len(recs), dtype=bool)
        for c, v in zip(group_cols, key):
            sel &= (recs[c] == v).to_numpy()
        cell = recs[sel]
        users = sorted(truth_by_user) if include_missing else sorted(
            set(truth_by_user) & set(cell["user"])
        )
        for user in users:
            mine = cell[cell["user"] == user].sort_values("rank")
            t = truth_by_user[user]
            rows.append(
                dict(
                    zip(group_cols, key),
                    user=user,
                    nrecs=len(mine),
                    precision=precision(mine, t),
                    recall=recall(mine, t),
                    ndcg=ndcg(mine, t),
                )
            )
    return pd.DataFrame(rows)


def rla_with_defaults(**kwargs):
    rla = RecListAnalysis(**kwargs)
    rla.add_metric(precision)
    rla.add_metric(recall)
    rla.add_metric(ndcg)
    return rla


def test_rla_per_user_rows():
    recs = pd.concat(
        [make_recs("u1", ["a", "b", "c"]), make_recs("u2", ["b", "d"])],
        ignore_index=True,
    )
    truth = pd.DataFrame(
        {"user": ["u1", "u1", "u2"], "item": ["a", "z", "d"], "rating": [4.0, 3.0, 5.0]}
    )
    out = rla_with_defaults().compute(recs, truth)
    assert out["user"].tolist() == ["u1", "u2"]
    u1 = out.iloc[0]
    assert u1["precision"] == pytest.approx(1.0 / 3.0)
    assert u1["recall"] == pytest.approx(0.5)


def test_rla_matches_loop_oracle():
    rng = np.random.default_rng(11)
    frames = []
    all_users = [f"u{k}" for k in range(10)]
    for algo in ("alpha", "beta"):
        for user in all_users:
            if rng.random() < 0.2:
                continue  # some users unserved by this algorithm
            n = int(rng.integers(1, 8))
            items = [f"i{j}" for j in rng.choice(20, n, replace=False)]
            frames.append(make_recs(user, items, algorithm=algo))
    recs = pd.concat(frames, ignore_index=True)
    truth_rows = []
    for user in all_users:
        for j in rng.choice(20, rng.integers(1, 6), replace=False):
            truth_rows.append((user, f"i{j}", float(rng.integers(1, 6))))
    truth = pd.DataFrame(truth_rows, columns=["user", "item", "rating"])

    got = rla_with_defaults().compute(recs, truth)
    want = rla_loop_oracle(recs, truth, ["algorithm"])
    assert len(got) == len(want)
    got_sorted = got.sort_values(["algorithm", "user"]).reset_index(drop=True)
    want_sorted = want.sort_values(["algorithm", "user"]).reset_index(drop=True)
    for colname in ["algorithm", "user", "nrecs"]:
        assert got_sorted[colname].tolist() == want_sorted[colname].tolist()
    for colname in ["precision", "recall", "ndcg"]:
        np.testing.assert_array_equal(
            got_sorted[colname].to_numpy(), want_sorted[colname].to_numpy()
        )


def test_rla_groups_are_disjoint():
    recs = pd.concat(
        [
            make_recs("u1", ["a", "b"], algorithm="one"),
            make_recs("u1", ["c", "d"], algorithm="two"),
        ],
        ignore_index=True,
    )
    truth = pd.DataFrame({"user": ["u1"], "item": ["a"], "rating": [5.0]})
    out = rla_with_defaults().compute(recs, truth)
    assert len(out) == 2
    one = out[out["algorithm"] == "one"].iloc[0]
    two = out[out["algorithm"] == "two"].iloc[0]
    assert one["precision"] == 0.5
    assert two["precision"] == 0.0


def test_rla_truth_only_users_score_against_empty_list():
    recs = make_recs("u1", ["a", "b"])
    truth = pd.DataFrame(
        {"user": ["u1", "u2"], "item": ["a", "b"], "rating": [5.0, 5.0]}
    )
    out = rla_with_defaults().compute(recs, truth)
    absent = out[out["user"] == "u2"].iloc[0]
    assert absent["nrecs"] == 0
    assert np.isnan(absent["precision"])
    assert absent["recall"] == 0.0
    assert absent["ndcg"] == 0.0


def test_rla_can_drop_unserved_users():
    recs = make_recs("u1", ["a"])
    truth = pd.DataFrame(
        {"user": ["u1", "u2"], "item": ["a", "b"], "rating": [5.0, 5.0]}
    )
    out = rla_with_defaults(include_missing=False).compute(recs, truth)
    assert out["user"].tolist() == ["u1"]


def test_rla_users_without_truth_are_excluded():
    recs = pd.concat(
        [make_recs("u1", ["a"]), make_recs("u3", ["b"])], ignore_index=True
    )
    truth = pd.DataFrame({"user": ["u1"], "item": ["a"], "rating": [4.0]})
    out = rla_with_defaults().compute(recs, truth)
    assert out["user"].tolist() == ["u1"]


def test_rla_min_rating_threshold():
    recs = make_recs("u1", ["a", "b"])
    truth = pd.DataFrame(
        {"user": ["u1", "u1"], "item": ["a", "b"], "rating": [2.0, 5.0]}
    )
    out = rla_with_defaults(min_rating=4.0).compute(recs, truth)
    assert out.iloc[0]["precision"] == pytest.approx(0.5)
    assert out.iloc[0]["recall"] == pytest.approx(1.0)


def test_rla_duplicate_ranks_rejected():
    recs = make_recs("u1", ["a", "b"])
    recs.loc[1, "rank"] = 1
    truth = pd.DataFrame({"user": ["u1"], "item": ["a"], "rating": [4.0]})
    with pytest.raises(SchemaError, match="duplicate"):
        rla_with_defaults().compute(recs, truth)


def test_rla_requires_rank_column():
    recs = make_recs("u1", ["a"]).drop(columns="rank")
    truth = pd.DataFrame({"user": ["u1"], "item": ["a"], "rating": [4.0]})
    with pytest.raises(SchemaError, match="rank"):
        rla_with_defaults().compute(recs, truth)


def test_rla_metric_kwargs_flow_through():
    recs = make_recs("u1", ["a", "c", "b"])
    truth = pd.DataFrame(
        {"user": ["u1", "u1", "u1"], "item": ["a", "b", "c"], "rating": [1.0, 5.0, 3.0]}
    )
    rla = RecListAnalysis()
    rla.add_metric(ndcg, name="ndcg_rated", gain="rating")
    rla.add_metric(ndcg)
    out = rla.compute(recs, truth)
    assert out.iloc[0]["ndcg"] == pytest.approx(1.0)
    assert out.iloc[0]["ndcg_rated"] < 1.0
