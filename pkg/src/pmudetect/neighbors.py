from __future__ import annotations

import numpy as np

from pmudetect.data import FloatArray

_CHUNK_ELEMENTS = 1 << 22


def euclidean_distances(queries: FloatArray, reference: FloatArray) -> FloatArray:
    """All-pairs Euclidean distances computed from explicit differences.

    The difference form (rather than the ``|a|^2 + |b|^2 - 2ab`` expansion)
    keeps distance ties exact, which the lowest-index tie rule relies on.
    """
    queries = np.asarray(queries, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    out = np.empty((len(queries), len(reference)))
    step = max(1, _CHUNK_ELEMENTS // max(1, reference.size))
    for start in range(0, len(queries), step):
        block = queries[start:start + step, None, :] - reference[None, :, :]
        out[start:start + step] = np.sqrt(np.einsum("ijk,ijk->ij", block, block))
    return out


def k_nearest(queries: FloatArray, reference: FloatArray, k: int,
              exclude_self: bool = False) -> np.ndarray:
    """Indices of the ``k`` nearest reference rows for every query row.

    Equal distances are resolved toward the lower reference index. With
    ``exclude_self`` the queries must be the reference rows themselves and
    each row is barred from its own neighbour list.
    """
    dist = euclidean_distances(queries, reference)
    if exclude_self:
        np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k]
