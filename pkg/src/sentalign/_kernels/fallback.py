"""Pure-Python/numpy implementations of the hot kernels.

These mirror the compiled versions in ``_native.pyx`` operation for operation;
the compiled module is preferred at import time when available. Bin indices use
the same ``int((x - lo) * scale)`` arithmetic in both backends so assignments
agree bit for bit.
"""

from __future__ import annotations

import heapq
import math

import numpy as np


def histogram2d_pmf(
    x: np.ndarray,
    y: np.ndarray,
    bins: int,
    xlo: float,
    xscale: float,
    ylo: float,
    yscale: float,
) -> np.ndarray:
    """Joint pmf over a bins x bins grid; a zero scale collapses that axis."""
    n = x.shape[0]
    if xscale > 0.0:
        ix = ((x - xlo) * xscale).astype(np.int64)
        np.clip(ix, 0, bins - 1, out=ix)
    else:
        ix = np.zeros(n, dtype=np.int64)
    if yscale > 0.0:
        iy = ((y - ylo) * yscale).astype(np.int64)
        np.clip(iy, 0, bins - 1, out=iy)
    else:
        iy = np.zeros(n, dtype=np.int64)
    counts = np.zeros((bins, bins), dtype=np.float64)
    np.add.at(counts, (ix, iy), 1.0)
    return counts / n


def kl_divergence(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    total = 0.0
    for i in range(p.shape[0]):
        pi = p[i]
        if pi > 0.0:
            qi = q[i]
            if qi < eps:
                qi = eps
            total += pi * math.log(pi / qi)
    return total


def ann_gather(
    normals: np.ndarray,
    offsets: np.ndarray,
    children: np.ndarray,
    leaf_indptr: np.ndarray,
    leaf_items: np.ndarray,
    roots: np.ndarray,
    query: np.ndarray,
    search_k: int,
    n_items: int,
) -> np.ndarray:
    """Best-first candidate gathering across all trees of a projection forest.

    Node codes: >= 0 is an internal node, < 0 encodes leaf ``-(code + 1)``.
    Returns unique item rows in discovery order, stopping once ``search_k``
    distinct candidates have been collected or every leaf was visited.
    """
    seen = np.zeros(n_items, dtype=bool)
    out = np.empty(n_items, dtype=np.int64)
    out_n = 0
    counter = 0
    heap: list[tuple[float, int, int]] = []
    for root in roots:
        heapq.heappush(heap, (-math.inf, counter, int(root)))
        counter += 1
    while heap and out_n < search_k:
        neg_prio, _, code = heapq.heappop(heap)
        prio = -neg_prio
        if code < 0:
            leaf = -(code + 1)
            for item in leaf_items[leaf_indptr[leaf] : leaf_indptr[leaf + 1]]:
                if not seen[item]:
                    seen[item] = True
                    out[out_n] = item
                    out_n += 1
                    if out_n >= search_k:
                        break
            continue
        margin = float(np.dot(normals[code], query)) - offsets[code]
        heapq.heappush(heap, (-min(prio, -margin), counter, int(children[code, 0])))
        counter += 1
        heapq.heappush(heap, (-min(prio, margin), counter, int(children[code, 1])))
        counter += 1
    return out[:out_n].copy()
