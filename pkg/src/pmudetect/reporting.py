"""Byte-stable JSON and CSV writers for run artifacts."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np


def format_float(x: float) -> str:
    """17 significant digits: exact round-trip and identical bytes every run."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        markers = {} if self.check_circular else None
        encoder = json.encoder._make_iterencode(  # type: ignore[attr-defined]
            markers, self.default, json.encoder.encode_basestring, self.indent,
            lambda x: format_float(x), self.key_separator, self.item_separator,
            self.sort_keys, self.skipkeys, _one_shot)
        return encoder(o, 0)


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), cls=_Encoder, indent=2) + "\n"


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(dumps_json(obj))


def config_hash(config_echo: dict) -> str:
    canonical = json.dumps(_plain(config_echo), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if value is None:
        return ""
    return str(value)


def write_csv_report(path: str | Path, header: Sequence[str], rows: Iterable[Sequence],
                     *, cfg_hash: str | None = None, seed: int | None = None) -> None:
    """Write an RFC-4180 CSV, preceded by a ``#`` comment naming the run."""
    buffer = io.StringIO()
    if cfg_hash is not None:
        buffer.write(f"# config_sha256={cfg_hash} seed={seed}\r\n")
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    Path(path).write_text(buffer.getvalue(), newline="")
