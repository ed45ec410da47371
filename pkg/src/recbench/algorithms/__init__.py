"""Recommendation algorithms behind a uniform train/score/recommend interface."""

from .als import BiasedMF, ImplicitMF
from .base import (
    Algorithm,
    CandidateSelector,
    Fallback,
    Predictor,
    Recommender,
    TopN,
    UnratedItems,
    adapt_to_recommender,
)
from .basic import Bias, Popular, Random
from .funksvd import FunkSVD
from .knn import ItemItem, UserUser

#: CLI/persistence names for the built-in algorithms.
ALGORITHMS = {
    "bias": Bias,
    "popular": Popular,
    "random": Random,
    "user-user": UserUser,
    "item-item": ItemItem,
    "biased-mf": BiasedMF,
    "implicit-mf": ImplicitMF,
    "funk-svd": FunkSVD,
    "top-n": TopN,
    "fallback": Fallback,
}

#: Names constructible from flat key=value parameters (no nested estimators).
CONSTRUCTIBLE = [n for n in ALGORITHMS if n not in ("top-n", "fallback")]


def algorithm_name(algo) -> str:
    "Registry name for an algorithm instance (falls back to the class name)."
    for name, cls in ALGORITHMS.items():
        if type(algo) is cls:
            return name
    return type(algo).__name__


def create_algorithm(name: str, params: dict) -> Algorithm:
    "Instantiate a registered algorithm from flat keyword parameters."
    if name not in ALGORITHMS or name not in CONSTRUCTIBLE:
        raise ValueError(f"unknown algorithm {name!r}")
    return ALGORITHMS[name](**params)


__all__ = [
    "Algorithm",
    "Predictor",
    "Recommender",
    "CandidateSelector",
    "TopN",
    "UnratedItems",
    "Fallback",
    "adapt_to_recommender",
    "Bias",
    "Popular",
    "Random",
    "UserUser",
    "ItemItem",
    "BiasedMF",
    "ImplicitMF",
    "FunkSVD",
    "ALGORITHMS",
    "CONSTRUCTIBLE",
    "algorithm_name",
    "create_algorithm",
]
