from __future__ import annotations

import numpy as np

from pmudetect.data import MeasurementTable
from pmudetect.errors import AllRowsRemoved


def drop_nonfinite(table: MeasurementTable) -> tuple[MeasurementTable, int]:
    """Remove every row holding a NaN or an infinity.

    Returns the filtered table and the number of rows removed.
    """
    keep = np.isfinite(table.values).all(axis=1)
    removed = int(table.n_rows - keep.sum())
    if removed == 0:
        return table, 0
    if not keep.any():
        raise AllRowsRemoved(f"all {table.n_rows} rows contain non-finite values")
    return table.take(np.flatnonzero(keep)), removed
