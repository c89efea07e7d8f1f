"""Dataset schema, CSV ingestion, merging and the reproducible working sample."""

from __future__ import annotations

import csv
import enum
import json
import math
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import numpy.typing as npt

from pmudetect.errors import (
    EmptyFile,
    FractionOutOfRange,
    HeaderMismatch,
    MissingMarkerColumn,
    SchemaMismatch,
    UnknownLabel,
)

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

N_FEATURES = 128
NONFINITE_TOKENS = {"inf": math.inf, "+inf": math.inf, "infinity": math.inf,
                    "+infinity": math.inf, "-inf": -math.inf,
                    "-infinity": -math.inf, "nan": math.nan}


class ClassLabel(enum.IntEnum):
    """Target classes with a fixed alphabetical integer encoding."""

    ATTACK = 0
    NATURAL = 1
    NO_EVENT = 2

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def parse(cls, text: str) -> ClassLabel:
        """Map a textual marker to a label, case- and whitespace-insensitive.

        ``"NoEvents"``, ``"no event"`` and ``"No_Event"`` all map to NO_EVENT.
        """
        key = re.sub(r"[^a-z]", "", text.strip().lower())
        try:
            return _ALIASES[key]
        except KeyError:
            raise UnknownLabel(f"unrecognised marker value {text!r}") from None


_DISPLAY = {ClassLabel.ATTACK: "Attack", ClassLabel.NATURAL: "Natural",
            ClassLabel.NO_EVENT: "NoEvent"}
_ALIASES = {"attack": ClassLabel.ATTACK, "natural": ClassLabel.NATURAL,
            "noevent": ClassLabel.NO_EVENT, "noevents": ClassLabel.NO_EVENT}
N_CLASSES = len(ClassLabel)


@dataclass(frozen=True)
class MeasurementTable:
    """Rows of numeric PMU/relay features with a class label per row.

    ``values`` may hold non-finite entries until :func:`drop_nonfinite`
    has been applied. ``provenance`` records the source-file index of
    each row. Arrays are made read-only on construction.
    """

    feature_names: tuple[str, ...]
    values: FloatArray
    labels: IntArray
    provenance: IntArray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if values.ndim != 2:
            values = values.reshape(len(labels), -1)
        if self.provenance is None:
            provenance = np.zeros(len(labels), dtype=np.int64)
        else:
            provenance = np.array(self.provenance, dtype=np.int64, copy=True).reshape(-1)
        names = tuple(self.feature_names)
        if len(set(names)) != len(names):
            raise SchemaMismatch("duplicate feature names")
        if values.shape[1] != len(names):
            raise SchemaMismatch(
                f"{values.shape[1]} value columns but {len(names)} feature names")
        if values.shape[0] != len(labels) or len(provenance) != len(labels):
            raise SchemaMismatch("values, labels and provenance lengths differ")
        if len(labels) and (labels.min() < 0 or labels.max() >= N_CLASSES):
            raise UnknownLabel("label codes must be in {0, 1, 2}")
        for arr in (values, labels, provenance):
            arr.setflags(write=False)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "provenance", provenance)

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.labels, minlength=N_CLASSES)
        return {label.display: int(counts[label]) for label in ClassLabel}

    def take(self, rows: Sequence[int] | npt.NDArray[np.integer]) -> MeasurementTable:
        """Return the table restricted to ``rows`` (in the given order)."""
        rows = np.asarray(rows, dtype=np.int64)
        return MeasurementTable(self.feature_names, self.values[rows],
                                self.labels[rows], self.provenance[rows])

    def select_features(self, names: Sequence[str]) -> MeasurementTable:
        index = {name: i for i, name in enumerate(self.feature_names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise SchemaMismatch(f"unknown features: {missing[:5]}")
        cols = [index[n] for n in names]
        return MeasurementTable(tuple(names), self.values[:, cols], self.labels,
                                self.provenance)

    def with_values(self, values: FloatArray) -> MeasurementTable:
        return MeasurementTable(self.feature_names, values, self.labels, self.provenance)


@dataclass(frozen=True)
class SampleSpec:
    fraction: float
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.fraction <= 1.0):
            raise FractionOutOfRange(f"fraction must be in (0, 1], got {self.fraction}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def load_scenario_map(path: str | Path) -> dict[int, ClassLabel]:
    """Read a JSON map of class name -> list of numeric scenario ids."""
    raw = json.loads(Path(path).read_text())
    mapping: dict[int, ClassLabel] = {}
    for name, ids in raw.items():
        label = ClassLabel.parse(name)
        for scenario in ids:
            mapping[int(scenario)] = label
    return mapping


def _parse_cell(text: str) -> float:
    token = text.strip()
    try:
        return float(token)
    except ValueError:
        pass
    # anything unparseable (including the named infinity tokens) becomes a flag
    return NONFINITE_TOKENS.get(token.lower(), math.nan)


def _parse_marker(text: str, scenario_map: Mapping[int, ClassLabel] | None) -> int:
    token = text.strip()
    try:
        return int(ClassLabel.parse(token))
    except UnknownLabel:
        if scenario_map is None:
            raise
    try:
        code = int(float(token))
    except ValueError:
        raise UnknownLabel(f"unrecognised marker value {text!r}") from None
    if code not in scenario_map:
        raise UnknownLabel(f"scenario id {code} missing from scenario map")
    return int(scenario_map[code])


def _data_lines(handle) -> list[str]:
    return [line for line in handle if not line.startswith("#")]


def load_csv(
    path: str | Path,
    schema: Sequence[str] | None = None,
    *,
    scenario_map: Mapping[int, ClassLabel] | None = None,
    source_index: int = 0,
) -> MeasurementTable:
    """Load one CSV file into a :class:`MeasurementTable`.

    The marker column is the one named ``marker`` (case-insensitive) or,
    failing that, the last column. Lines starting with ``#`` are ignored.
    Feature cells that do not parse as numbers are stored as non-finite
    values rather than raising.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        rows = list(csv.reader(_data_lines(handle)))
    rows = [r for r in rows if r]
    if not rows:
        raise EmptyFile(f"{path}: no header row")
    header = [h.strip() for h in rows[0]]
    lowered = [h.lower() for h in header]
    if "marker" in lowered:
        marker_col = lowered.index("marker")
    elif header and header[-1] and len(header) >= 2:
        marker_col = len(header) - 1
    else:
        raise MissingMarkerColumn(f"{path}: cannot identify marker column")
    feature_cols = [i for i in range(len(header)) if i != marker_col]
    names = tuple(header[i] for i in feature_cols)
    if schema is not None and tuple(schema) != names:
        raise HeaderMismatch(f"{path}: header does not match expected feature names")

    body = rows[1:]
    values = np.empty((len(body), len(feature_cols)), dtype=np.float64)
    labels = np.empty(len(body), dtype=np.int64)
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise SchemaMismatch(f"{path}: row {r + 1} has {len(row)} cells, "
                                 f"expected {len(header)}")
        values[r] = [_parse_cell(row[i]) for i in feature_cols]
        labels[r] = _parse_marker(row[marker_col], scenario_map)
    return MeasurementTable(names, values, labels,
                            np.full(len(body), source_index, dtype=np.int64))


def _format_value(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return repr(float(x))


def write_csv(table: MeasurementTable, path: str | Path) -> None:
    """Write ``table`` in the input dialect; finite values round-trip exactly."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\r\n")
        writer.writerow([*table.feature_names, "marker"])
        for row, label in zip(table.values.tolist(), table.labels.tolist()):
            writer.writerow([*map(_format_value, row), ClassLabel(label).display])


def merge(tables: Sequence[MeasurementTable]) -> MeasurementTable:
    """Concatenate tables in order; provenance becomes the list position."""
    if not tables:
        raise SchemaMismatch("nothing to merge")
    names = tables[0].feature_names
    for t in tables[1:]:
        if t.feature_names != names:
            raise SchemaMismatch("tables have different feature names")
    if len(tables) == 1:
        return tables[0]
    return MeasurementTable(
        names,
        np.concatenate([t.values for t in tables]),
        np.concatenate([t.labels for t in tables]),
        np.concatenate([np.full(t.n_rows, i, dtype=np.int64)
                        for i, t in enumerate(tables)]),
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_sample(table: MeasurementTable, spec: SampleSpec) -> MeasurementTable:
    """Draw a seeded sample without replacement.

    With ``spec.stratified`` each class ``c`` contributes
    ``round(fraction * count(c))`` rows; otherwise ``round(fraction * n)``
    rows are drawn uniformly. The result is shuffled with the same seed.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    if spec.stratified:
        chosen = []
        for code in range(N_CLASSES):
            members = np.flatnonzero(table.labels == code)
            take = _round_half_up(spec.fraction * len(members))
            chosen.append(rng.permutation(members)[:take])
        rows = np.concatenate(chosen)
    else:
        take = _round_half_up(spec.fraction * table.n_rows)
        rows = rng.permutation(table.n_rows)[:take]
    return table.take(rng.permutation(rows))


def read_feature_matrix(path: str | Path, names: Sequence[str],
                        ) -> tuple[FloatArray, IntArray | None]:
    """Pull the named feature columns (and the marker, if present) from a CSV.

    Used at prediction time, where the file may carry extra columns or no
    marker at all.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        rows = [r for r in csv.reader(_data_lines(handle)) if r]
    if not rows:
        raise EmptyFile(f"{path}: no header row")
    header = [h.strip() for h in rows[0]]
    position = {name: i for i, name in enumerate(header)}
    missing = [n for n in names if n not in position]
    if missing:
        raise HeaderMismatch(f"{path}: missing model features {missing[:5]}")
    cols = [position[n] for n in names]
    values = np.array([[_parse_cell(row[c]) for c in cols] for row in rows[1:]],
                      dtype=np.float64).reshape(len(rows) - 1, len(cols))
    lowered = [h.lower() for h in header]
    labels = None
    if "marker" in lowered:
        m = lowered.index("marker")
        labels = np.array([ClassLabel.parse(row[m]) for row in rows[1:]], dtype=np.int64)
    return values, labels
