"""Versioned, self-describing tensor bundles (checkpoints, transfer caches).

Plain JSON: a ``kind`` string, a format version, free-form metadata and a
map of named tensors stored as shape + flat float list. Floats use the
shortest exact round-trip representation, and keys are sorted, so saving
the same state twice produces byte-identical files.
"""

import json

import numpy as np

from .errors import FormatError

FORMAT_VERSION = 1


def save_tensor_bundle(path, kind: str, meta: dict, tensors: dict):
    payload = {
        "format": kind,
        "version": FORMAT_VERSION,
        "meta": meta,
        "tensors": {
            name: {"shape": list(arr.shape), "data": np.asarray(arr, dtype=np.float64).ravel().tolist()}
            for name, arr in tensors.items()
        },
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")


def load_tensor_bundle(path, kind: str):
    """Returns (meta, tensors); checks the kind tag and version."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not a tensor bundle ({exc})") from None
    if payload.get("format") != kind:
        raise FormatError(f"{path}: expected bundle kind {kind!r}, "
                          f"found {payload.get('format')!r}")
    if payload.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {payload.get('version')!r}")
    tensors = {
        name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in payload["tensors"].items()
    }
    return payload["meta"], tensors
