"""Retrieval metrics, correlation, and result-table assembly.

Hits@k counts a query as a hit only when the exact triple key is retrieved; a
relation-level variant (any retrieved key with the same relation) is available
for analysis but never enters the headline tables.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .align import LinearMap, project
from .annindex import AnnForest, query
from .clusterability import SpatialHistogramReport
from .errors import CorrelationUndefinedError, ValidationError
from .matrix import EmbeddingMatrix


@dataclass
class EvalReport:
    method: str
    embedding_dim: int
    hits_at_5: float
    hits_at_10: float
    avg_similarity: float
    n_test: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.hits_at_5 <= 1.0 or not 0.0 <= self.hits_at_10 <= 1.0:
            raise ValidationError("hits rates must lie in [0, 1]")
        if self.hits_at_10 < self.hits_at_5:
            raise ValidationError("hits@10 cannot be below hits@5")
        if not -1.0 - 1e-9 <= self.avg_similarity <= 1.0 + 1e-9:
            raise ValidationError("average similarity must lie in [-1, 1]")
        if self.n_test < 1:
            raise ValidationError("n_test must be >= 1")


def hits_at_k(ranked: list[tuple[str, list[str]]], k: int) -> float:
    """Fraction of queries whose true key appears in the first min(k, len) retrieved."""
    if not ranked:
        raise ValidationError("hits@k needs at least one query")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    hits = sum(1 for true_key, retrieved in ranked if true_key in retrieved[:k])
    return hits / len(ranked)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(a @ b / denom)


def evaluate_alignment(
    linear_map: LinearMap,
    test_sentences: EmbeddingMatrix,
    test_truth: list[tuple[int | str, str]],
    candidates: EmbeddingMatrix,
    index: AnnForest,
    relation_level: bool = False,
) -> EvalReport:
    """Project test sentences, retrieve top-10 triples, and score the retrieval.

    ``test_truth`` pairs each sentence id with its true triple key; every truth
    key must be present in the candidate matrix (which the index was built
    over). The average similarity is the mean cosine between each projected
    sentence and its true triple's embedding.
    """
    if not test_truth:
        raise ValidationError("evaluation needs at least one test pair")
    for _, key in test_truth:
        try:
            candidates.position_of(key)
        except ValidationError:
            raise ValidationError(f"truth triple key {key!r} absent from candidates") from None

    projected = project(linear_map, test_sentences)
    ranked: list[tuple[str, list[str]]] = []
    similarities = []
    for sentence_id, key in test_truth:
        row = projected.row_of(str(sentence_id))
        retrieved = [item for item, _ in query(index, row, k=10)]
        ranked.append((key, retrieved))
        similarities.append(_cosine(row, candidates.row_of(key)))

    if relation_level:
        relation_of = lambda key: key.split("|")[1]
        ranked = [
            (relation_of(true_key), [relation_of(r) for r in retrieved])
            for true_key, retrieved in ranked
        ]
    return EvalReport(
        method=test_sentences.method + ("+relation" if relation_level else ""),
        embedding_dim=test_sentences.dim,
        hits_at_5=hits_at_k(ranked, 5),
        hits_at_10=hits_at_k(ranked, 10),
        avg_similarity=float(np.mean(similarities)),
        n_test=len(test_truth),
    )


def pearson_correlation(x: list[float] | np.ndarray, y: list[float] | np.ndarray) -> float:
    """Pearson product-moment correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError(f"inputs must be equal-length 1-D, got {x.shape} and {y.shape}")
    if x.shape[0] < 2:
        raise ValidationError("correlation needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise CorrelationUndefinedError("an input has zero variance")
    return float((dx * dy).sum() / (sx * sy))


def format_text_table(headers: list[str], rows: list[list[str]]) -> str:
    """Fixed-width plain-text table with a separator under the header."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def write_clusterability_table(
    reports: list[SpatialHistogramReport], csv_path: str | Path, text_path: str | Path | None = None
) -> None:
    headers = ["method", "kl_mean", "kl_std", "bins", "reference_sets"]
    rows = [
        [r.method, _fmt(r.kl_mean), _fmt(r.kl_std), str(r.bins_per_axis), str(r.reference_sets)]
        for r in reports
    ]
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        writer.writerows(rows)
    if text_path is not None:
        Path(text_path).write_text(format_text_table(headers, rows), encoding="utf-8")


def write_alignment_table(
    reports: list[EvalReport], csv_path: str | Path, text_path: str | Path | None = None
) -> None:
    headers = ["method", "dim", "hits_at_5", "hits_at_10", "avg_similarity", "n_test"]
    rows = [
        [
            r.method,
            str(r.embedding_dim),
            _fmt(r.hits_at_5),
            _fmt(r.hits_at_10),
            _fmt(r.avg_similarity),
            str(r.n_test),
        ]
        for r in reports
    ]
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        writer.writerows(rows)
    if text_path is not None:
        Path(text_path).write_text(format_text_table(headers, rows), encoding="utf-8")
