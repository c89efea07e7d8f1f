"""CART classification tree with exact midpoint split search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numba import njit

from pmudetect.data import N_CLASSES, FloatArray, IntArray

Criterion = Literal["gini", "entropy"]


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def entropy(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log(p)))


@dataclass(frozen=True)
class DecisionTree:
    feature: IntArray  # -1 marks a leaf
    threshold: FloatArray  # rows with x <= threshold go left
    left: IntArray
    right: IntArray
    counts: FloatArray  # (n_nodes, 3) training class counts per node

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):  # children always follow their parent
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X: FloatArray) -> IntArray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            n = node[active]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: FloatArray) -> IntArray:
        # argmax picks the lowest class code among tied leaf counts
        return np.argmax(self.counts[self.apply(X)], axis=1)

    def to_dict(self, node: int = 0) -> dict:
        if self.feature[node] < 0:
            return {"counts": [int(c) for c in self.counts[node]]}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }

    @classmethod
    def from_dict(cls, data: dict) -> DecisionTree:
        feature, threshold, left, right, counts = [], [], [], [], []

        def visit(d: dict) -> tuple[int, np.ndarray]:
            node = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            counts.append(None)
            if "counts" in d:
                c = np.asarray(d["counts"], dtype=np.float64)
            else:
                feature[node] = int(d["feature"])
                threshold[node] = float(d["threshold"])
                left[node], lc = visit(d["left"])
                right[node], rc = visit(d["right"])
                c = lc + rc
            counts[node] = c
            return node, c

        visit(data)
        return cls(np.array(feature, dtype=np.int64), np.array(threshold),
                   np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                   np.vstack(counts))


_GINI, _ENTROPY = 0, 1


@njit(cache=True)
def _next_u64(state):
    # splitmix64; state is a 1-element uint64 array
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _below(state, n):
    return np.int64((_next_u64(state) >> np.uint64(11)) % np.uint64(n))


@njit(cache=True)
def _impurity(counts, total, criterion):
    out = 0.0
    if criterion == _GINI:
        out = 1.0
        for c in range(counts.shape[0]):
            p = counts[c] / total
            out -= p * p
    else:
        for c in range(counts.shape[0]):
            if counts[c] > 0:
                p = counts[c] / total
                out -= p * np.log(p)
    return out


@njit(cache=True)
def _cosort(vals, labs, n):
    """Sort ``vals[:n]`` ascending in place, carrying ``labs`` along.

    Three-way quicksort, so long runs of equal values (binary log columns)
    stay linear; small ranges finish with insertion sort. The relative
    order of equal values is unspecified.
    """
    stack = np.empty(128, dtype=np.int64)
    top = 0
    lo, hi = 0, n - 1
    while True:
        while hi - lo > 16:
            a, b, c = vals[lo], vals[(lo + hi) >> 1], vals[hi]
            if a < b:
                pivot = b if b < c else (c if a < c else a)
            else:
                pivot = a if a < c else (c if b < c else b)
            lt, i, gt = lo, lo, hi
            while i <= gt:
                v = vals[i]
                if v < pivot:
                    vals[lt], vals[i] = vals[i], vals[lt]
                    labs[lt], labs[i] = labs[i], labs[lt]
                    lt += 1
                    i += 1
                elif v > pivot:
                    vals[gt], vals[i] = vals[i], vals[gt]
                    labs[gt], labs[i] = labs[i], labs[gt]
                    gt -= 1
                else:
                    i += 1
            # recurse into the smaller side later, loop on the larger one
            if lt - lo < hi - gt:
                stack[top], stack[top + 1] = gt + 1, hi
                hi = lt - 1
            else:
                stack[top], stack[top + 1] = lo, lt - 1
                lo = gt + 1
            top += 2
        for i in range(lo + 1, hi + 1):
            v = vals[i]
            lab = labs[i]
            j = i - 1
            while j >= lo and vals[j] > v:
                vals[j + 1] = vals[j]
                labs[j + 1] = labs[j]
                j -= 1
            vals[j + 1] = v
            labs[j + 1] = lab
        if top == 0:
            break
        top -= 2
        lo, hi = stack[top], stack[top + 1]


@njit(cache=True, nogil=True)
def _grow(XT, y, n_classes, criterion, max_depth, mtry, min_samples_split, seed):
    n_features, n = XT.shape
    capacity = 2 * n + 1
    feature = np.full(capacity, -1, dtype=np.int64)
    threshold = np.zeros(capacity)
    left = np.full(capacity, -1, dtype=np.int64)
    right = np.full(capacity, -1, dtype=np.int64)
    counts = np.zeros((capacity, n_classes))
    state = np.array([seed], dtype=np.uint64)

    idx = np.arange(n)
    for i in range(n):
        counts[0, y[i]] += 1.0
    n_nodes = 1
    st_node = np.empty(capacity, dtype=np.int64)
    st_start = np.empty(capacity, dtype=np.int64)
    st_end = np.empty(capacity, dtype=np.int64)
    st_depth = np.empty(capacity, dtype=np.int64)
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, n, 0
    top = 1

    perm = np.arange(n_features)
    vals = np.empty(n)
    labs = np.empty(n, dtype=np.int64)
    lc = np.empty(n_classes)
    rc = np.empty(n_classes)

    while top > 0:
        top -= 1
        node, start, end, depth = st_node[top], st_start[top], st_end[top], st_depth[top]
        m = end - start
        occupied = 0
        for c in range(n_classes):
            if counts[node, c] > 0:
                occupied += 1
        if occupied <= 1 or m < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        # Fisher-Yates shuffle of the candidate features
        for i in range(n_features):
            perm[i] = i
        for i in range(n_features - 1, 0, -1):
            j = _below(state, i + 1)
            perm[i], perm[j] = perm[j], perm[i]

        best_cost = np.inf
        best_f = -1
        best_t = 0.0
        for chunk in range(0, n_features, mtry):
            for q in range(chunk, min(chunk + mtry, n_features)):
                f = perm[q]
                for i in range(m):
                    row = idx[start + i]
                    vals[i] = XT[f, row]
                    labs[i] = y[row]
                _cosort(vals, labs, m)
                # left/right class counts, plus their sums of squares for gini
                sq_left = 0.0
                sq_right = 0.0
                for c in range(n_classes):
                    lc[c] = 0.0
                    rc[c] = counts[node, c]
                    sq_right += rc[c] * rc[c]
                for i in range(m - 1):
                    lab = labs[i]
                    sq_left += 2.0 * lc[lab] + 1.0
                    sq_right -= 2.0 * rc[lab] - 1.0
                    lc[lab] += 1.0
                    rc[lab] -= 1.0
                    lo = vals[i]
                    hi = vals[i + 1]
                    if not lo < hi:
                        continue
                    nl = i + 1.0
                    nr = m - nl
                    if criterion == _GINI:
                        # n * gini = n - sum(count^2) / n
                        cost = (nl - sq_left / nl + nr - sq_right / nr) / m
                    else:
                        cost = (nl * _impurity(lc, nl, criterion)
                                + nr * _impurity(rc, nr, criterion)) / m
                    if cost < best_cost:
                        best_cost = cost
                        best_f = f
                        t = 0.5 * (lo + hi)
                        if not t < hi:  # adjacent floats: midpoint rounds up onto hi
                            t = lo
                        best_t = t
            if best_f >= 0:
                break
        if best_f < 0:
            continue

        # partition idx[start:end] so rows with x <= t come first
        i, j = start, end - 1
        while i <= j:
            if XT[best_f, idx[i]] <= best_t:
                i += 1
            else:
                idx[i], idx[j] = idx[j], idx[i]
                j -= 1
        mid = i
        ln, rn = n_nodes, n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_t
        left[node] = ln
        right[node] = rn
        for k in range(start, mid):
            counts[ln, y[idx[k]]] += 1.0
        for k in range(mid, end):
            counts[rn, y[idx[k]]] += 1.0
        st_node[top], st_start[top], st_end[top], st_depth[top] = rn, mid, end, depth + 1
        top += 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = ln, start, mid, depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), counts[:n_nodes].copy())


def build_tree(X: FloatArray, y: IntArray, seed: int, *,
               criterion: Criterion = "gini", max_depth: int | None = None,
               max_features: int | None = None, min_samples_split: int = 2) -> DecisionTree:
    """Grow a tree on ``(X, y)``; node-level randomness comes from ``seed``.

    At each node ``max_features`` candidate features are drawn without
    replacement and every midpoint between consecutive distinct values is
    tried. If no candidate admits a split, further features are drawn until
    one does or all are exhausted. Ties in impurity keep the first candidate
    examined.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if criterion not in ("gini", "entropy"):
        raise ValueError(f"unknown criterion {criterion!r}")
    n_features = X.shape[1]
    mtry = n_features if max_features is None else max(1, min(max_features, n_features))
    code = _GINI if criterion == "gini" else _ENTROPY
    arrays = _grow(np.ascontiguousarray(X.T), y, N_CLASSES, code,
                   -1 if max_depth is None else int(max_depth), mtry,
                   int(min_samples_split), np.uint64(seed % 2**64))
    return DecisionTree(*arrays)
