"""Approximate nearest-neighbor retrieval with random-projection forests.

Each tree recursively splits the indexed rows by the sign of their projection
onto the difference of two sampled points, thresholded at the midpoint, until
nodes hold at most ``leaf_capacity`` items. Queries gather candidates from all
trees best-first (by margin distance) until ``search_k`` distinct rows are
collected, then rank them by exact double-precision cosine similarity. A
brute-force scorer over all rows serves as the exact oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError
from .matrix import EmbeddingMatrix


@dataclass
class AnnForest:
    items: EmbeddingMatrix
    n_trees: int
    leaf_capacity: int
    seed: int
    normals: np.ndarray
    offsets: np.ndarray
    children: np.ndarray
    leaf_indptr: np.ndarray
    leaf_items: np.ndarray
    roots: np.ndarray

    def tree_leaf_rows(self, tree: int) -> list[np.ndarray]:
        """All leaf item-row arrays of one tree, for structural audits."""
        out = []
        stack = [int(self.roots[tree])]
        while stack:
            code = stack.pop()
            if code < 0:
                leaf = -(code + 1)
                out.append(self.leaf_items[self.leaf_indptr[leaf] : self.leaf_indptr[leaf + 1]])
            else:
                stack.append(int(self.children[code, 0]))
                stack.append(int(self.children[code, 1]))
        return out


_MAX_DEPTH = 60


class _TreeBuilder:
    def __init__(self, data: np.ndarray, leaf_capacity: int, rng: np.random.Generator,
                 normals: list, offsets: list, children: list,
                 leaf_indptr: list, leaf_items: list):
        self.data = data
        self.leaf_capacity = leaf_capacity
        self.rng = rng
        self.normals = normals
        self.offsets = offsets
        self.children = children
        self.leaf_indptr = leaf_indptr
        self.leaf_items = leaf_items

    def _make_leaf(self, rows: np.ndarray) -> int:
        self.leaf_items.extend(rows.tolist())
        self.leaf_indptr.append(len(self.leaf_items))
        return -len(self.leaf_indptr) + 1  # leaf i encodes to -(i + 1)

    def build(self, rows: np.ndarray, depth: int = 0) -> int:
        if rows.shape[0] <= self.leaf_capacity or depth >= _MAX_DEPTH:
            return self._make_leaf(rows)
        picks = self.rng.choice(rows.shape[0], size=2, replace=False)
        a, b = self.data[rows[picks[0]]], self.data[rows[picks[1]]]
        normal = a - b
        split_ok = bool(normal.any())
        if split_ok:
            offset = float(normal @ ((a + b) / 2.0))
            proj = self.data[rows] @ normal
            mask = proj < offset
            left_rows, right_rows = rows[mask], rows[~mask]
            split_ok = left_rows.size > 0 and right_rows.size > 0
        if not split_ok:
            # Degenerate hyperplane: fall back to an order-based halving.
            half = rows.shape[0] // 2
            normal = np.zeros(self.data.shape[1])
            offset = 0.0
            left_rows, right_rows = rows[:half], rows[half:]
        node = len(self.normals)
        self.normals.append(normal)
        self.offsets.append(offset)
        self.children.append([0, 0])
        self.children[node][0] = self.build(left_rows, depth + 1)
        self.children[node][1] = self.build(right_rows, depth + 1)
        return node


def build_index(
    matrix: EmbeddingMatrix, n_trees: int = 10, leaf_capacity: int = 32, seed: int = 0
) -> AnnForest:
    """Build a deterministic projection forest over the matrix rows."""
    if matrix.rows < 1:
        raise ValidationError("cannot index an empty matrix")
    if n_trees < 1 or leaf_capacity < 1:
        raise ValidationError("n_trees and leaf_capacity must be >= 1")
    data = np.ascontiguousarray(matrix.data, dtype=np.float64)
    normals: list[np.ndarray] = []
    offsets: list[float] = []
    children: list[list[int]] = []
    leaf_indptr: list[int] = [0]
    leaf_items: list[int] = []
    roots = []
    all_rows = np.arange(matrix.rows, dtype=np.int64)
    for tree in range(n_trees):
        rng = np.random.default_rng([seed, tree])
        builder = _TreeBuilder(data, leaf_capacity, rng, normals, offsets, children,
                               leaf_indptr, leaf_items)
        roots.append(builder.build(all_rows))
    return AnnForest(
        items=matrix,
        n_trees=n_trees,
        leaf_capacity=leaf_capacity,
        seed=seed,
        normals=np.ascontiguousarray(
            np.vstack(normals) if normals else np.zeros((0, matrix.dim))
        ),
        offsets=np.ascontiguousarray(offsets, dtype=np.float64),
        children=np.ascontiguousarray(children if children else np.zeros((0, 2)), dtype=np.int32),
        leaf_indptr=np.ascontiguousarray(leaf_indptr, dtype=np.int64),
        leaf_items=np.ascontiguousarray(leaf_items, dtype=np.int64),
        roots=np.ascontiguousarray(roots, dtype=np.int32),
    )


def _rank_by_cosine(
    matrix: EmbeddingMatrix, rows: np.ndarray, vector: np.ndarray, k: int
) -> list[tuple[str, float]]:
    vectors = matrix.data[rows]
    qnorm = float(np.linalg.norm(vector))
    norms = np.linalg.norm(vectors, axis=1)
    denom = norms * qnorm
    sims = np.where(denom > 0.0, vectors @ vector / np.where(denom == 0.0, 1.0, denom), 0.0)
    ids = np.array([matrix.index[r] for r in rows])
    order = np.lexsort((ids, -sims))[: min(k, rows.shape[0])]
    return [(str(ids[i]), float(sims[i])) for i in order]


def query(
    index: AnnForest, vector: np.ndarray, k: int, search_k: int | None = None
) -> list[tuple[str, float]]:
    """Top-k (item id, cosine similarity), descending, ties by ascending id.

    Candidates are gathered from all trees until at least ``search_k`` distinct
    rows are collected (default 50 * k * n_trees); with ``search_k`` at or above
    the item count, results are exact.
    """
    vector = np.asarray(vector, dtype=np.float64).reshape(-1)
    if vector.shape[0] != index.items.dim:
        raise ValidationError(
            f"query dim {vector.shape[0]} does not match index dim {index.items.dim}"
        )
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if search_k is None:
        search_k = 50 * k * index.n_trees
    candidates = _kernels.ann_gather(
        index.normals,
        index.offsets,
        index.children,
        index.leaf_indptr,
        index.leaf_items,
        index.roots,
        vector,
        search_k,
        index.items.rows,
    )
    return _rank_by_cosine(index.items, candidates, vector, k)


def brute_force_knn(matrix: EmbeddingMatrix, vector: np.ndarray, k: int) -> list[tuple[str, float]]:
    """Exact top-k by cosine over every row; the testing oracle for query()."""
    vector = np.asarray(vector, dtype=np.float64).reshape(-1)
    if vector.shape[0] != matrix.dim:
        raise ValidationError(
            f"query dim {vector.shape[0]} does not match matrix dim {matrix.dim}"
        )
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    return _rank_by_cosine(matrix, np.arange(matrix.rows, dtype=np.int64), vector, k)
