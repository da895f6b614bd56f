"""Clusterability of an embedding space via spatial histograms.

The measurement pipeline projects a matrix onto its two most informative
principal directions, bins the projection into an equal-width grid to form an
empirical joint pmf, and compares that pmf against the pmfs of uniformly
generated reference sets (same row count, drawn over the data's per-dimension
bounding box in the original space, each run through the same projection and
binning independently). The smoothed KL divergence of data against each
reference is summarized by its mean and population standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .compose import principal_directions
from .errors import ValidationError
from .matrix import EmbeddingMatrix

# Denominator floor for the smoothed divergence; applied to reference cells only.
KL_EPSILON = 1e-10


@dataclass
class SpatialHistogramReport:
    kl_mean: float
    kl_std: float
    bins_per_axis: int
    reference_sets: int
    method: str

    def __post_init__(self) -> None:
        if self.kl_mean < 0 or self.kl_std < 0:
            raise ValidationError("KL summary statistics must be non-negative")
        if self.reference_sets < 1:
            raise ValidationError("reference_sets must be >= 1")


def pca_project(matrix: EmbeddingMatrix, components: int) -> EmbeddingMatrix:
    """Mean-center rows and project onto the top principal directions."""
    if components < 1 or components > matrix.dim:
        raise ValidationError(
            f"components must be in [1, {matrix.dim}], got {components}"
        )
    if matrix.rows < components:
        raise ValidationError(
            f"need at least {components} rows for {components} components, got {matrix.rows}"
        )
    dirs, _ = principal_directions(matrix.data, components)
    projected = (matrix.data - matrix.data.mean(axis=0)) @ dirs
    return EmbeddingMatrix(
        data=projected, method=f"{matrix.method}+pca{components}", index=list(matrix.index)
    )


def _pmf_over_own_box(points: np.ndarray, bins_per_axis: int) -> np.ndarray:
    """Flat pmf of 2-D points over their own bounding box, max edge inclusive."""
    scales = []
    lows = []
    for axis in range(2):
        lo = float(points[:, axis].min())
        hi = float(points[:, axis].max())
        lows.append(lo)
        scales.append(bins_per_axis / (hi - lo) if hi > lo else 0.0)
    pmf = _kernels.histogram2d_pmf(
        points[:, 0], points[:, 1], bins_per_axis, lows[0], scales[0], lows[1], scales[1]
    )
    return pmf.ravel()


def spatial_histogram(points: EmbeddingMatrix, bins_per_axis: int) -> np.ndarray:
    """Empirical joint pmf over a bins x bins grid spanning the data's box.

    Returns a flat array of bins_per_axis**2 cell masses summing to 1. A
    degenerate axis (zero range) collapses into a single row or column.
    """
    if points.dim != 2:
        raise ValidationError(f"spatial histogram needs 2-D points, got dim {points.dim}")
    if points.rows < 1:
        raise ValidationError("spatial histogram needs at least one point")
    if bins_per_axis < 1:
        raise ValidationError(f"bins_per_axis must be >= 1, got {bins_per_axis}")
    return _pmf_over_own_box(points.data, bins_per_axis)


def kl_divergence(p: np.ndarray, q: np.ndarray, epsilon: float) -> float:
    """Smoothed divergence sum(p * ln(p / max(q, epsilon))), with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValidationError(f"pmf shapes differ: {p.shape} vs {q.shape}")
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    for name, pmf in (("p", p), ("q", q)):
        if abs(float(pmf.sum()) - 1.0) > 1e-9:
            raise ValidationError(f"{name} does not sum to 1 (got {pmf.sum()!r})")
    return _kernels.kl_divergence(p, q, epsilon)


def _project_to_plane(data: np.ndarray) -> np.ndarray:
    dirs, _ = principal_directions(data, 2)
    return (data - data.mean(axis=0)) @ dirs


def clusterability(
    matrix: EmbeddingMatrix,
    bins_per_axis: int = 20,
    reference_sets: int = 500,
    seed: int = 0,
) -> SpatialHistogramReport:
    """Mean and population std of KL(data pmf, reference pmf) over uniform references.

    Reference set j is seeded with ``seed + j``, drawn uniformly over the
    data's per-dimension bounding box with the data's row count and original
    dimensionality, and measured by the identical projection-and-binning
    pipeline. Larger means indicate stronger divergence from uniformity.
    """
    if matrix.rows < 3:
        raise ValidationError(f"clusterability needs at least 3 rows, got {matrix.rows}")
    if matrix.dim < 2:
        raise ValidationError("clusterability needs dimensionality >= 2")
    if reference_sets < 1:
        raise ValidationError(f"reference_sets must be >= 1, got {reference_sets}")

    data_pmf = _pmf_over_own_box(_project_to_plane(matrix.data), bins_per_axis)
    lo = matrix.data.min(axis=0)
    hi = matrix.data.max(axis=0)
    divergences = np.empty(reference_sets)
    for j in range(reference_sets):
        rng = np.random.default_rng(seed + j)
        reference = rng.uniform(lo, hi, size=matrix.data.shape)
        ref_pmf = _pmf_over_own_box(_project_to_plane(reference), bins_per_axis)
        divergences[j] = _kernels.kl_divergence(data_pmf, ref_pmf, KL_EPSILON)
    return SpatialHistogramReport(
        kl_mean=float(divergences.mean()),
        kl_std=float(divergences.std()),
        bins_per_axis=bins_per_axis,
        reference_sets=reference_sets,
        method=matrix.method,
    )
