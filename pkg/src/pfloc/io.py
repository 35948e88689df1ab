"""JSON/CSV helpers shared by the CLI and the tests."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import StructuralError


def fmt(x: float) -> str:
    """Format a float with 17 significant digits (lossless for doubles)."""
    return format(float(x), ".17g")


def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise StructuralError(f"matrix must be square, got shape {a.shape}")
    return {"dim": int(a.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in a.ravel()]}


def matrix_from_json(obj: dict) -> np.ndarray:
    """Parse ``{"dim": n, "entries": [[re, im], ...]}`` (row-major)."""
    try:
        n = int(obj["dim"])
        raw = np.asarray(obj["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if n < 0 or raw.shape != (n * n, 2):
        raise ValueError(f"matrix JSON: expected {n * n} [re, im] pairs, got array of shape {raw.shape}")
    return (raw[:, 0] + 1j * raw[:, 1]).reshape(n, n)


def write_matrix(path, m) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(m)))


def read_matrix(path) -> np.ndarray:
    return matrix_from_json(json.loads(Path(path).read_text()))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()
