"""Composable building blocks for offline recommender-system experiments.

The pieces — data loading, train/test splitting, algorithms, batch scoring,
and metrics — are plain functions and estimator-style classes over pandas
frames, usable together, separately, or alongside other tools.
"""

__version__ = "0.1.0"

from . import algorithms, batch, crossfold, data, metrics, persistence
from .algorithms import Algorithm, Predictor, Recommender, adapt_to_recommender

__all__ = [
    "__version__",
    "algorithms",
    "batch",
    "crossfold",
    "data",
    "metrics",
    "persistence",
    "Algorithm",
    "Predictor",
    "Recommender",
    "adapt_to_recommender",
]
