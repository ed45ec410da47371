"""Rating tables, identifier indexing, and sparse dataset construction.

A rating table is a pandas DataFrame with ``user`` and ``item`` columns, an
optional numeric ``rating`` column (explicit feedback), an optional integer
``timestamp`` column, and any number of extra columns that pass through every
operation untouched.  User and item identifiers are opaque: the file loaders
read them as strings and nothing in the toolkit ever coerces them, so ids
reproduce exactly in every output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from scipy import sparse

from .exceptions import EmptyDataError, ParseError, SchemaError
from .validation import check_ratings

ML100K_COLUMNS = ("user", "item", "rating", "timestamp")


def load_csv(path, format="csv"):
    """Read a rating table from ``path``.

    Args:
        path: the file to read.
        format: ``"csv"`` for comma-separated values with a header row naming
            at least ``user`` and ``item``; ``"ml100k"`` for tab-separated
            ``user item rating timestamp`` rows with no header.

    Raises:
        ParseError: a value cannot be parsed (the message names the line).
        SchemaError: mandatory columns are missing.
    """
    if format == "csv":
        return _load_csv_header(path)
    elif format == "ml100k":
        return _load_ml100k(path)
    else:
        raise ValueError(f"unknown rating file format {format!r}")


def write_csv(table, path):
    "Write a tabular result to ``path`` as CSV (header row, no index column)."
    table.to_csv(path, index=False)


def dedupe_ratings(ratings):
    """Resolve duplicate (user, item) pairs by keeping the last occurrence.

    All model fitting runs on deduplicated data, so the most recent
    interaction in input order wins.
    """
    return ratings.drop_duplicates(subset=["user", "item"], keep="last")


@dataclass(frozen=True)
class Dataset:
    """Indexed sparse view of a rating table.

    Attributes:
        users: distinct user ids; position in the index is the dense user
            number (insertion order of first appearance).
        items: distinct item ids, indexed the same way.
        matrix: ``n_users x n_items`` CSR matrix of ratings, or of 1.0
            values when the table has no rating column.
    """

    users: pd.Index
    items: pd.Index
    matrix: sparse.csr_array

    @cached_property
    def by_item(self):
        "Column-major (by-item) view of the rating matrix."
        return self.matrix.tocsc()

    @property
    def n_users(self):
        return len(self.users)

    @property
    def n_items(self):
        return len(self.items)

    def row_ids(self):
        "Dense user number for every stored entry, in CSR order."
        return np.repeat(np.arange(self.n_users), np.diff(self.matrix.indptr))


def build_dataset(ratings) -> Dataset:
    """Index users and items and build the sparse rating matrix.

    Duplicate (user, item) pairs keep the last occurrence; the matrix has one
    stored entry per deduplicated row (explicit zeros are preserved).
    """
    check_ratings(ratings)
    if len(ratings) == 0:
        raise EmptyDataError("rating table is empty")
    users = pd.Index(pd.unique(ratings["user"]), name="user")
    items = pd.Index(pd.unique(ratings["item"]), name="item")
    dedup = dedupe_ratings(ratings)
    u = users.get_indexer(dedup["user"])
    i = items.get_indexer(dedup["item"])
    if "rating" in dedup.columns:
        vals = dedup["rating"].to_numpy(dtype=np.float64)
    else:
        vals = np.ones(len(dedup), dtype=np.float64)
    mat = sparse.csr_array((vals, (u, i)), shape=(len(users), len(items)))
    return Dataset(users=users, items=items, matrix=mat)


def _load_csv_header(path):
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise EmptyDataError(f"{path}: file has no data") from e
    except pd.errors.ParserError as e:
        raise ParseError(path, _parser_line(e), str(e)) from e
    missing = [c for c in ("user", "item") if c not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing required column(s): " + ", ".join(missing))
    # line 1 is the header, so data row k sits on line k + 2
    if "rating" in df.columns:
        df["rating"] = _parse_floats(df["rating"], path, "rating", first_line=2)
    if "timestamp" in df.columns:
        df["timestamp"] = _parse_ints(df["timestamp"], path, "timestamp", first_line=2)
    return df


def _load_ml100k(path):
    try:
        df = pd.read_csv(path, sep="\t", header=None, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise EmptyDataError(f"{path}: file has no data") from e
    except pd.errors.ParserError as e:
        raise ParseError(path, _parser_line(e), str(e)) from e
    if df.shape[1] != 4:
        raise SchemaError(
            f"{path}: expected 4 tab-separated columns, found {df.shape[1]}"
        )
    df.columns = list(ML100K_COLUMNS)
    df["rating"] = _parse_floats(df["rating"], path, "rating", first_line=1)
    df["timestamp"] = _parse_ints(df["timestamp"], path, "timestamp", first_line=1)
    return df


def _parser_line(exc):
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else 0


def _parse_floats(values, path, column, *, first_line):
    nums = pd.to_numeric(values, errors="coerce")
    bad = np.flatnonzero(nums.isna().to_numpy())
    if len(bad):
        k = int(bad[0])
        raise ParseError(
            path, first_line + k, f"cannot parse {column} value {values.iloc[k]!r}"
        )
    return nums.astype(np.float64)


def _parse_ints(values, path, column, *, first_line):
    nums = _parse_floats(values, path, column, first_line=first_line)
    frac = np.flatnonzero((nums.to_numpy() % 1.0) != 0.0)
    if len(frac):
        k = int(frac[0])
        raise ParseError(
            path, first_line + k, f"{column} value {values.iloc[k]!r} is not an integer"
        )
    return nums.astype(np.int64)
