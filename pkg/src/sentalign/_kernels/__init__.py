"""Kernel backend selection.

The compiled extension is used when it importable; setting the environment
variable ``SENTALIGN_PURE_PYTHON=1`` forces the numpy fallback. Both backends
implement the same three operations with identical semantics.
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback

if os.environ.get("SENTALIGN_PURE_PYTHON", "") == "1":
    _impl = fallback
    BACKEND = "python"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = fallback
        BACKEND = "python"


def histogram2d_pmf(x, y, bins, xlo, xscale, ylo, yscale):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _impl.histogram2d_pmf(x, y, int(bins), float(xlo), float(xscale), float(ylo), float(yscale))


def kl_divergence(p, q, eps):
    p = np.ascontiguousarray(p, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    return float(_impl.kl_divergence(p, q, float(eps)))


def ann_gather(normals, offsets, children, leaf_indptr, leaf_items, roots, query, search_k, n_items):
    query = np.ascontiguousarray(query, dtype=np.float64)
    return _impl.ann_gather(
        normals, offsets, children, leaf_indptr, leaf_items, roots, query, int(search_k), int(n_items)
    )
