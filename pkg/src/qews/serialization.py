"""Shared file formats: JSON containers and CSV tables with 17 significant digits."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .fock_core import DensityMatrix

SCHEMA_VERSION = 1


def fmt(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    s = format(x, ".17g")
    return "0" if s == "-0" else s


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, complex):
        return f"[{fmt(obj.real)}, {fmt(obj.imag)}]"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 1) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def container(payload: dict, params: dict, seed, tool_version: str) -> dict:
    out = {"schema_version": SCHEMA_VERSION}
    out.update(payload)
    out["metadata"] = {"params": params, "seed": seed, "tool_version": tool_version}
    return out


def density_payload(rho: DensityMatrix) -> dict:
    flat = rho.entries.reshape(-1)
    return {
        "cutoff": rho.cutoff,
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def density_to_json(rho: DensityMatrix, params: dict | None = None, seed=None, tool_version: str = "") -> str:
    return dumps(container(density_payload(rho), params or {}, seed, tool_version))


def density_from_json(text: str) -> tuple[DensityMatrix, dict]:
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    n = int(doc["cutoff"]) + 1
    pairs = np.asarray(doc["entries"], dtype=float)
    if pairs.shape != (n * n, 2):
        raise ValueError(f"expected {n * n} entries for cutoff {n - 1}, got {pairs.shape[0]}")
    rho = DensityMatrix((pairs[:, 0] + 1j * pairs[:, 1]).reshape(n, n))
    return rho, doc.get("metadata", {})


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else (str(int(v)) if isinstance(v, (int, np.integer)) else fmt(v))
                        for v in row])


def read_csv(path) -> tuple[list, np.ndarray]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], np.asarray(rows[1:], dtype=float)
