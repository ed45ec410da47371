"""Prediction-accuracy metrics over aligned prediction/rating values."""

import numpy as np
import pandas as pd

from ..exceptions import UndefinedMetricError


def _aligned(predictions, truth, missing):
    pred = np.asarray(predictions, dtype=np.float64)
    true = np.asarray(truth, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(
            f"predictions and truth must align: {pred.shape} vs {true.shape}"
        )
    holes = np.isnan(pred)
    if holes.any():
        if missing == "error":
            raise ValueError(f"{int(holes.sum())} prediction(s) are missing")
        elif missing == "ignore":
            pred = pred[~holes]
            true = true[~holes]
        else:
            raise ValueError(f"unknown missing policy {missing!r}")
    if len(pred) == 0:
        raise UndefinedMetricError("no scored pairs to measure")
    return pred, true


def rmse(predictions, truth, *, missing="error"):
    """Root mean squared error of positionally-aligned predictions.

    Args:
        predictions: predicted values; NaN marks a missing prediction.
        truth: observed values, same length and order.
        missing: ``"error"`` to reject missing predictions, ``"ignore"`` to
            drop those pairs.
    """
    pred, true = _aligned(predictions, truth, missing)
    return float(np.sqrt(np.mean((pred - true) ** 2)))


def mae(predictions, truth, *, missing="error"):
    "Mean absolute error; arguments as for :func:`rmse`."
    pred, true = _aligned(predictions, truth, missing)
    return float(np.mean(np.abs(pred - true)))


_METRICS = {"rmse": rmse, "mae": mae}


def measure_user_accuracy(predictions: pd.DataFrame, *, metric="rmse", missing="ignore"):
    """Per-user accuracy over a prediction table.

    Args:
        predictions: frame with ``user``, ``prediction`` and ``rating`` columns.
        metric: ``"rmse"`` or ``"mae"``.
        missing: missing-prediction policy per user (see :func:`rmse`).

    Returns:
        pandas.Series of metric values indexed by user; users with nothing
        scored come back as NaN.
    """
    fn = _METRICS[metric]

    def _one(frame):
        try:
            return fn(frame["prediction"], frame["rating"], missing=missing)
        except UndefinedMetricError:
            return np.nan

    grouped = predictions.groupby("user", sort=True)
    return pd.Series({user: _one(frame) for user, frame in grouped}, name=metric)
