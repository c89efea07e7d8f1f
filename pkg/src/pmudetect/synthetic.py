"""Seeded stand-in for the 15-file PMU dataset, used by tests and demos.

The generated files share the real dataset's layout (128 named feature
columns plus ``marker``), include occasional ``Infinity`` cells, and make
the class depend on feature interactions so that tree ensembles have an
edge over linear models.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from pmudetect.data import ClassLabel, MeasurementTable, write_csv

_RELAY_FIELDS = [
    "PA1:VH", "PM1:V", "PA2:VH", "PM2:V", "PA3:VH", "PM3:V",
    "PA4:IH", "PM4:I", "PA5:IH", "PM5:I", "PA6:IH", "PM6:I",
    "PA7:VH", "PM7:V", "PA8:VH", "PM8:V", "PA9:VH", "PM9:V",
    "PA10:IH", "PM10:I", "PA11:IH", "PM11:I", "PA12:IH", "PM12:I",
    "PA:Z", "PA:ZH", "F", "DF", "S",
]


def pmu_feature_names() -> tuple[str, ...]:
    """The 128 column names of the public three-class PMU dataset."""
    names = [f"R{r}-{field}" for r in range(1, 5) for field in _RELAY_FIELDS]
    names += [f"control_panel_log{i}" for i in range(1, 5)]
    names += [f"relay{i}_log" for i in range(1, 5)]
    names += [f"snort_log{i}" for i in range(1, 5)]
    return tuple(names)


def make_table(n_rows: int, seed: int = 0,
               class_weights: tuple[float, float, float] = (0.70, 0.22, 0.08),
               inf_rate: float = 0.002) -> MeasurementTable:
    rng = np.random.default_rng(seed)
    names = pmu_feature_names()
    d = len(names)
    labels = rng.choice(3, size=n_rows, p=np.asarray(class_weights) / sum(class_weights))
    scale = np.where([("PM" in n and ":V" in n) for n in names], 130000.0,
                     np.where([("PM" in n and ":I" in n) for n in names], 400.0, 50.0))
    X = rng.normal(size=(n_rows, d))
    a, b, c = X[:, 0], X[:, 1], X[:, 2]
    # attacks flip a sign interaction, natural faults sag a voltage block
    attack = labels == ClassLabel.ATTACK
    natural = labels == ClassLabel.NATURAL
    X[attack, 3] += 1.8 * np.sign(a[attack] * b[attack])
    X[attack, 4] += np.where(c[attack] > 0, 1.5, -1.5)
    X[natural, 5:20] -= 0.9
    X[natural, 20] += 2.0 * np.abs(a[natural])
    X[:, 6] += 0.6 * (labels == ClassLabel.NO_EVENT)
    X[:, 30:60] += 0.25 * X[:, [3]]
    X = X * scale
    logs = np.arange(d - 12, d)
    X[:, logs] = (rng.random((n_rows, 12)) < 0.05 + 0.1 * attack[:, None]).astype(float)
    mask = rng.random((n_rows, d)) < inf_rate / d
    X[mask] = np.inf
    return MeasurementTable(names, X, labels)


def write_dataset(directory: str | Path, n_files: int = 15, rows_per_file: int = 400,
                  seed: int = 0) -> list[Path]:
    """Write ``data1.csv`` .. ``data{n_files}.csv`` and return their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_files):
        path = directory / f"data{i + 1}.csv"
        write_csv(make_table(rows_per_file, seed=seed * 1000 + i), path)
        paths.append(path)
    return paths
