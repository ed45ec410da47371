"""Prediction-accuracy and top-N list metrics."""

from . import predict, topn
from .predict import mae, measure_user_accuracy, rmse
from .topn import (
    RecListAnalysis,
    avg_precision,
    hit,
    ndcg,
    precision,
    recall,
    recip_rank,
)

__all__ = [
    "predict",
    "topn",
    "rmse",
    "mae",
    "measure_user_accuracy",
    "precision",
    "recall",
    "hit",
    "recip_rank",
    "avg_precision",
    "ndcg",
    "RecListAnalysis",
]
