#!/usr/bin/env python3
"""Regenerate the bundled synthetic rating set at data/synth100/u.data.

The file mimics the ML-100K layout: tab-separated user, item, rating,
timestamp rows with no header, integer ratings on a 1-5 scale.  Ratings are
drawn from a latent model (global mean, user and item offsets, clustered
taste factors, noise) and each user rates items with probability shaped by
both item popularity and their own taste, so personalized algorithms have
real signal to find while popularity remains a meaningful baseline.

The construction is fully deterministic; rerunning this script reproduces
the committed file byte for byte.
"""

from pathlib import Path

import numpy as np

SEED = 20240817
N_USERS = 100
N_ITEMS = 220
N_FACTORS = 4
N_CLUSTERS = 4

MEAN = 3.5
USER_BIAS_SD = 0.45
ITEM_BIAS_SD = 0.55
FACTOR_SCALE = 1.1
NOISE_SD = 0.30
TASTE_SHARPNESS = 2.5
POPULARITY_EXPONENT = 0.45
CLUSTER_NOISE = 0.30
MIN_RATINGS = 40
MAX_RATINGS = 90


def generate():
    rng = np.random.default_rng(SEED)
    centers = rng.normal(0.0, 1.0, size=(N_CLUSTERS, N_FACTORS))
    ucluster = rng.integers(N_CLUSTERS, size=N_USERS)
    icluster = rng.integers(N_CLUSTERS, size=N_ITEMS)
    P = centers[ucluster] + rng.normal(0.0, CLUSTER_NOISE, size=(N_USERS, N_FACTORS))
    Q = centers[icluster] + rng.normal(0.0, CLUSTER_NOISE, size=(N_ITEMS, N_FACTORS))
    P *= FACTOR_SCALE / np.sqrt(N_FACTORS)
    Q *= 1.0 / np.sqrt(N_FACTORS)
    user_bias = rng.normal(0.0, USER_BIAS_SD, size=N_USERS)
    item_bias = rng.normal(0.0, ITEM_BIAS_SD, size=N_ITEMS)

    # popularity follows a shuffled power law so a few items dominate
    pop = 1.0 / np.arange(1, N_ITEMS + 1) ** POPULARITY_EXPONENT
    rng.shuffle(pop)

    affinity = P @ Q.T
    rows = []
    ts = 800000000
    for u in range(N_USERS):
        m = int(rng.integers(MIN_RATINGS, MAX_RATINGS + 1))
        weights = pop * np.exp(TASTE_SHARPNESS * affinity[u])
        weights /= weights.sum()
        items = rng.choice(N_ITEMS, size=m, replace=False, p=weights)
        for i in items:
            raw = MEAN + user_bias[u] + item_bias[i] + affinity[u, i]
            raw += rng.normal(0.0, NOISE_SD)
            rating = int(np.clip(np.rint(raw), 1, 5))
            ts += int(rng.integers(10, 5000))
            rows.append((u + 1, i + 1, rating, ts))
    return rows


def main():
    rows = generate()
    out = Path(__file__).resolve().parent.parent / "data" / "synth100" / "u.data"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        for user, item, rating, ts in rows:
            f.write(f"{user}\t{item}\t{rating}\t{ts}\n")
    print(f"wrote {len(rows)} ratings to {out}")


if __name__ == "__main__":
    main()
