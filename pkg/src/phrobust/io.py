"""Model files and JSON output.

Accepted inputs (UTF-8 JSON, unknown keys rejected):

* state space: ``{"n", "m", "A", "B", "C", "D"}``
* port-Hamiltonian: ``{"n", "m", "J", "R", "G", "K", "S", "N"}``
* a result document written by the CLI: any object with ``"kind"`` and a
  ``"model"`` entry in state-space form.
* for ``stabilize`` only, a bare matrix: ``{"n", "A"}``.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .exceptions import ModelFileError, PassivityError
from .model import PHRealization, StateSpaceModel, from_ph_form, validate_model

MODEL_KEYS = {"n", "m", "A", "B", "C", "D"}
PH_KEYS = {"n", "m", "J", "R", "G", "K", "S", "N"}
MATRIX_KEYS = {"n", "A"}


def _int(obj, key):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ModelFileError(f"{key!r} must be a positive integer, got {v!r}")
    return v


def _matrix(obj, key, shape):
    v = obj[key]
    if not isinstance(v, list) or any(not isinstance(r, list) for r in v):
        raise ModelFileError(f"{key!r} must be a list of rows")
    for row in v:
        for x in row:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ModelFileError(f"{key!r} contains a non-numeric entry {x!r}")
    rows = len(v)
    cols = {len(r) for r in v}
    if rows != shape[0] or cols != {shape[1]}:
        raise ModelFileError(f"{key!r} must be {shape[0]}x{shape[1]}")
    return np.array(v, dtype=np.float64).reshape(shape)


def _check_keys(obj, expected, what):
    keys = set(obj)
    if keys != expected:
        extra = sorted(keys - expected)
        missing = sorted(expected - keys)
        parts = []
        if extra:
            parts.append(f"unknown keys {extra}")
        if missing:
            parts.append(f"missing keys {missing}")
        raise ModelFileError(f"{what}: " + ", ".join(parts))


def _schema(obj):
    if not isinstance(obj, dict):
        raise ModelFileError("top-level JSON value must be an object")
    if "kind" in obj:
        return "result"
    keys = set(obj)
    if keys & {"J", "R", "G", "K", "S", "N"}:
        return "ph"
    if keys <= MATRIX_KEYS and "m" not in keys:
        return "matrix"
    return "model"


def parse_model(obj) -> StateSpaceModel:
    """Build a model from a decoded JSON object in any accepted schema except bare matrices."""
    kind = _schema(obj)
    if kind == "result":
        if not isinstance(obj.get("model"), dict):
            raise ModelFileError("result document has no 'model' entry")
        return parse_model(obj["model"])
    if kind == "matrix":
        raise ModelFileError("file holds a bare matrix, not a model")
    if kind == "ph":
        try:
            return from_ph_form(parse_ph(obj))
        except PassivityError as exc:
            raise ModelFileError(str(exc)) from exc
    _check_keys(obj, MODEL_KEYS, "model file")
    n, m = _int(obj, "n"), _int(obj, "m")
    try:
        return validate_model(
            _matrix(obj, "A", (n, n)), _matrix(obj, "B", (n, m)),
            _matrix(obj, "C", (m, n)), _matrix(obj, "D", (m, m)),
        )
    except PassivityError as exc:
        raise ModelFileError(str(exc)) from exc


def parse_ph(obj) -> PHRealization:
    _check_keys(obj, PH_KEYS, "pH file")
    n, m = _int(obj, "n"), _int(obj, "m")
    shapes = {"J": (n, n), "R": (n, n), "G": (n, m), "K": (n, m), "S": (m, m), "N": (m, m)}
    return PHRealization(**{k: _matrix(obj, k, s) for k, s in shapes.items()})


def parse_matrix(obj) -> np.ndarray:
    """``A`` from a bare-matrix object or from any model schema."""
    if _schema(obj) == "matrix":
        _check_keys(obj, MATRIX_KEYS, "matrix file")
        n = _int(obj, "n")
        A = _matrix(obj, "A", (n, n))
        if not np.all(np.isfinite(A)):
            raise ModelFileError("'A' has non-finite entries")
        return A
    return np.array(parse_model(obj).A)


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"{path}: invalid JSON ({exc})") from exc


def load_model(path) -> StateSpaceModel:
    obj = read_json(path)
    try:
        return parse_model(obj)
    except ModelFileError as exc:
        raise ModelFileError(f"{path}: {exc}") from None


def load_matrix(path) -> np.ndarray:
    obj = read_json(path)
    try:
        return parse_matrix(obj)
    except ModelFileError as exc:
        raise ModelFileError(f"{path}: {exc}") from None


# ----------------------------------------------------------------- writing

def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        obj = int(obj)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj, ".17g")
        # Keep floats recognisable as floats after a round trip.
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(x, (list, tuple, dict, np.ndarray)) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level + 1) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(x, indent, level + 1) for x in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits (non-finite as null)."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
