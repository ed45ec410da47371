import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ci")

REPO_ROOT = Path(__file__).resolve().parent.parent
SYNTH_PATH = REPO_ROOT / "data" / "synth100" / "u.data"


@pytest.fixture
def simple_ratings():
    "Small explicit-feedback table with timestamps and an extra column."
    return pd.DataFrame(
        {
            "user": ["u1", "u1", "u1", "u2", "u2", "u3", "u3", "u3", "u3"],
            "item": ["a", "b", "c", "a", "c", "a", "b", "c", "d"],
            "rating": [4.0, 3.0, 5.0, 2.0, 4.0, 3.0, 1.0, 5.0, 4.0],
            "timestamp": [10, 20, 30, 15, 25, 5, 6, 7, 8],
            "note": ["w", "x", "y", "z", "p", "q", "r", "s", "t"],
        }
    )


def random_ratings(seed, n_users=12, n_items=15, per_user=(4, 9), integer=False):
    "Random explicit rating table; continuous ratings avoid similarity ties."
    rng = np.random.default_rng(seed)
    rows = []
    ts = 1000
    for u in range(n_users):
        m = int(rng.integers(per_user[0], per_user[1] + 1))
        m = min(m, n_items)
        for i in rng.choice(n_items, size=m, replace=False):
            if integer:
                val = float(rng.integers(1, 6))
            else:
                val = float(np.round(rng.uniform(1.0, 5.0), 6))
            ts += int(rng.integers(1, 50))
            rows.append((f"u{u}", f"i{i}", val, ts))
    return pd.DataFrame(rows, columns=["user", "item", "rating", "timestamp"])


@pytest.fixture(scope="session")
def eval_ratings():
    """Rating set for accuracy-style tests.

    Uses the bundled synthetic set; point RECBENCH_ML100K at an ML-100K
    ``u.data`` file to run against the real thing instead.
    """
    from recbench.data import load_csv

    override = os.environ.get("RECBENCH_ML100K")
    path = Path(override) if override else SYNTH_PATH
    return load_csv(path, "ml100k")
