"""Versioned single-file storage for fitted algorithms.

A model file is a small binary container: an 8-byte magic string, a
little-endian format version and header length, a JSON header naming the
algorithm and its hyperparameters, and the pickled fitted estimator as the
payload.  Loading verifies the magic and rejects files written by a newer
format version.

The payload is a pickle, so load model files only from sources you trust.
"""

from __future__ import annotations

import json
import pickle
import struct

from .algorithms import Algorithm, algorithm_name
from .exceptions import ModelFormatError

MAGIC = b"RECMODEL"
FORMAT_VERSION = 1

_HEAD = struct.Struct("<II")


def save_model(algo, path):
    """Write a fitted algorithm to ``path``.

    Args:
        algo: the algorithm to store.
        path: destination file.
    """
    if not isinstance(algo, Algorithm):
        raise TypeError(f"cannot save {type(algo).__name__}: not an Algorithm")
    header = {
        "algorithm": algorithm_name(algo),
        "params": _jsonable(algo.get_params(deep=False)),
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = pickle.dumps(algo, protocol=pickle.HIGHEST_PROTOCOL)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEAD.pack(FORMAT_VERSION, len(hbytes)))
        f.write(hbytes)
        f.write(payload)


def load_model(path) -> Algorithm:
    """Load an algorithm saved by :func:`save_model`.

    Raises:
        ModelFormatError: the file is not a model container, is truncated, or
            was written by a newer format version.
    """
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ModelFormatError(f"{path}: not a model file")
        head = f.read(_HEAD.size)
        if len(head) < _HEAD.size:
            raise ModelFormatError(f"{path}: truncated model file")
        version, hlen = _HEAD.unpack(head)
        if version > FORMAT_VERSION:
            raise ModelFormatError(
                f"{path}: format version {version} is newer than supported "
                f"version {FORMAT_VERSION}"
            )
        f.read(hlen)  # header is advisory; reconstruction uses the payload
        try:
            algo = pickle.load(f)
        except Exception as e:
            raise ModelFormatError(f"{path}: cannot read model payload: {e}") from e
    if not isinstance(algo, Algorithm):
        raise ModelFormatError(f"{path}: payload is not an Algorithm")
    return algo


def read_model_header(path) -> dict:
    "Read a model file's header (name, parameters) without unpickling it."
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise ModelFormatError(f"{path}: not a model file")
        head = f.read(_HEAD.size)
        if len(head) < _HEAD.size:
            raise ModelFormatError(f"{path}: truncated model file")
        version, hlen = _HEAD.unpack(head)
        header = json.loads(f.read(hlen).decode("utf-8"))
        header["format_version"] = version
    return header


def _jsonable(params):
    out = {}
    for key, value in params.items():
        try:
            json.dumps(value)
        except (TypeError, ValueError):
            value = repr(value)
        out[key] = value
    return out
