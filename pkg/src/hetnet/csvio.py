"""CSV and sidecar JSON input/output with round-trip-exact number formatting."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import PropagationSample

__all__ = [
    "format_number",
    "write_table",
    "read_table",
    "write_samples",
    "read_samples",
    "sidecar_path",
]

SAMPLE_HEADER = ("y", "t", "tier", "rep")


def format_number(x) -> str:
    """17 significant digits for floats (lossless), plain digits for integers."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def _render(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_number(v) for v in row])
    return buf.getvalue()


def write_table(path, header: Sequence[str], rows) -> None:
    Path(path).write_text(_render(header, rows), encoding="utf-8")


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Header and a float array of shape ``(rows, columns)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader if row]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))


def sidecar_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def write_samples(path, samples: Sequence[PropagationSample], meta: dict) -> None:
    """Write replications as ``y,t,tier,rep`` rows plus a ``.meta.json`` sidecar."""
    rows = []
    for rep, s in enumerate(samples):
        rows.extend(zip(s.y.tolist(), s.t.tolist(), s.tier.tolist(), [rep] * len(s)))
    Path(path).write_text(_render(SAMPLE_HEADER, rows), encoding="utf-8")
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_samples(path, s_max: float | None = None) -> tuple[list[PropagationSample], dict]:
    """Inverse of :func:`write_samples`.

    ``s_max`` and the replication count come from the sidecar when present;
    an explicit ``s_max`` overrides it.
    """
    header, data = read_table(path)
    if tuple(header) != SAMPLE_HEADER:
        raise ValueError(f"expected header {','.join(SAMPLE_HEADER)}, got {','.join(header)}")
    side = sidecar_path(path)
    meta = json.loads(side.read_text(encoding="utf-8")) if side.exists() else {}
    if s_max is None:
        s_max = meta.get("s_max")
    if s_max is None:
        raise ValueError("s_max unknown: no sidecar and none given")
    reps = int(meta.get("replications", int(data[:, 3].max()) + 1 if len(data) else 1))
    samples = []
    for rep in range(reps):
        sel = data[:, 3] == rep
        d = data[sel]
        samples.append(PropagationSample(
            d[:, 0], d[:, 1], d[:, 2].astype(np.int64), np.full(len(d), np.nan), None,
            float(s_max), {"rep": rep},
        ))
    return samples, meta
