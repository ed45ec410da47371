"""Input validation helpers for rating tables and related frames."""

import pandas as pd

from .exceptions import SchemaError


def check_ratings(ratings, *, require_rating=False, require_timestamp=False):
    """Validate that ``ratings`` is a usable rating table.

    A rating table is a :class:`pandas.DataFrame` with ``user`` and ``item``
    columns; ``rating`` and ``timestamp`` are optional unless required.
    Returns the frame unchanged so calls can be inlined.
    """
    if not isinstance(ratings, pd.DataFrame):
        raise SchemaError(f"expected a rating DataFrame, got {type(ratings).__name__}")
    missing = [c for c in ("user", "item") if c not in ratings.columns]
    if missing:
        raise SchemaError("rating table is missing column(s): " + ", ".join(missing))
    if require_rating and "rating" not in ratings.columns:
        raise SchemaError("this operation requires explicit feedback (a rating column)")
    if require_timestamp and "timestamp" not in ratings.columns:
        raise SchemaError("this operation requires a timestamp column")
    return ratings


def check_pairs(pairs):
    "Validate a (user, item) pair table, e.g. batch prediction input."
    if not isinstance(pairs, pd.DataFrame):
        raise SchemaError(f"expected a pair DataFrame, got {type(pairs).__name__}")
    missing = [c for c in ("user", "item") if c not in pairs.columns]
    if missing:
        raise SchemaError("pair table is missing column(s): " + ", ".join(missing))
    return pairs
