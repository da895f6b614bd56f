"""Sentence embedding composition from word vectors.

Four native strategies are provided: arithmetic mean of word vectors, a
column-wise discrete cosine transform keeping coefficients 0..K, a windowed-QR
re-weighting scheme ("gem-glove"), and a uniform random baseline. Matrices
produced elsewhere are ingested through the shared binary format.

Out-of-vocabulary policy: tokens absent from the table are skipped; a sentence
with no in-vocabulary tokens is excluded from the output entirely (its id does
not appear in the index) and the exclusion count is logged. Callers that need
the excluded ids can diff the output index against their sentence ids.
"""

from __future__ import annotations

import logging

import numpy as np

from .corpus import AnnotatedSentence, WordVectorTable
from .errors import ValidationError
from .matrix import EmbeddingMatrix, load_matrix

logger = logging.getLogger(__name__)


def principal_directions(data: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k principal directions and eigenvalues of the sample covariance.

    Directions are columns ordered by descending variance, with the sign fixed
    so each direction's first non-negligible coordinate is positive.
    """
    data = np.asarray(data, dtype=np.float64)
    n, d = data.shape
    if not 0 <= k <= d:
        raise ValidationError(f"component count must be in [0, {d}], got {k}")
    centered = data - data.mean(axis=0)
    if n > 1:
        cov = centered.T @ centered / (n - 1)
    else:
        cov = np.zeros((d, d))
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = slice(None, None, -1)
    eigvals = np.ascontiguousarray(eigvals[order][:k])
    dirs = np.ascontiguousarray(eigvecs[:, order][:, :k])
    for j in range(dirs.shape[1]):
        nonzero = np.nonzero(np.abs(dirs[:, j]) > 1e-12)[0]
        if nonzero.size and dirs[nonzero[0], j] < 0:
            dirs[:, j] = -dirs[:, j]
    return dirs, eigvals


def _invocab_matrix(sentence: AnnotatedSentence, table: WordVectorTable) -> np.ndarray | None:
    vectors = [table[t] for t in sentence.tokens if t in table]
    if not vectors:
        return None
    return np.vstack(vectors)


def _collect(
    sentences: list[AnnotatedSentence],
    table: WordVectorTable,
    per_sentence,
    out_dim: int,
    method: str,
) -> EmbeddingMatrix:
    rows = []
    index = []
    excluded = 0
    for s in sentences:
        words = _invocab_matrix(s, table)
        if words is None:
            excluded += 1
            continue
        rows.append(per_sentence(words))
        index.append(str(s.id))
    if excluded:
        logger.warning(
            "%s: excluded %d sentence(s) with no in-vocabulary tokens", method, excluded
        )
    data = np.vstack(rows) if rows else np.zeros((0, out_dim))
    return EmbeddingMatrix(data=data, method=method, index=index)


def compose_mean(sentences: list[AnnotatedSentence], table: WordVectorTable) -> EmbeddingMatrix:
    """Row i is the mean of sentence i's in-vocabulary word vectors."""
    return _collect(sentences, table, lambda w: w.mean(axis=0), table.dim, "glove-mean")


def _dct_basis(n_words: int, k_max: int) -> np.ndarray:
    """Rows 0..k_max of the orthonormal type-II cosine basis for n_words points."""
    ks = np.arange(min(k_max + 1, n_words), dtype=np.float64)[:, None]
    ns = np.arange(n_words, dtype=np.float64)[None, :]
    basis = np.sqrt(2.0 / n_words) * np.cos(np.pi / n_words * (ns + 0.5) * ks)
    basis[0, :] = np.sqrt(1.0 / n_words)
    if k_max + 1 > n_words:
        basis = np.vstack([basis, np.zeros((k_max + 1 - n_words, n_words))])
    return basis


def compose_dct(
    sentences: list[AnnotatedSentence], table: WordVectorTable, k_max: int
) -> EmbeddingMatrix:
    """Concatenated cosine-transform coefficients 0..k_max of each word-vector column.

    Output layout is coefficient major: the first table.dim entries are
    coefficient 0 for every column, the next table.dim are coefficient 1, and
    so on, giving dim (k_max + 1) * table.dim. Coefficients beyond the sentence
    length are zero.
    """
    if not 0 <= k_max <= 6:
        raise ValidationError(f"dct coefficient order must be in [0, 6], got {k_max}")

    def per_sentence(words: np.ndarray) -> np.ndarray:
        return (_dct_basis(words.shape[0], k_max) @ words).reshape(-1)

    return _collect(
        sentences, table, per_sentence, (k_max + 1) * table.dim, f"glove-dct-{k_max}"
    )


def _gem_word_weight(window_matrix: np.ndarray) -> float:
    """Weight of the window's last word from a QR factorization of its context.

    The window matrix has one column per word, ending with the word being
    weighted. The weight combines three quantities read off the last column of
    R (signs normalized so the diagonal of R is non-negative): its norm
    (novelty), the last diagonal entry over the window length (significance),
    and exp(-norm / window length) (uniqueness). All constants live here so the
    scheme can be revised in one place.
    """
    m = window_matrix.shape[1]
    _, r = np.linalg.qr(window_matrix)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    r = r * signs[:, None]
    last = r[:, -1]
    novelty = float(np.linalg.norm(last))
    significance = float(r[-1, -1]) / m
    uniqueness = float(np.exp(-novelty / m))
    return novelty + significance + uniqueness


def compose_gem(
    sentences: list[AnnotatedSentence],
    table: WordVectorTable,
    window: int = 7,
    top_components: int = 1,
) -> EmbeddingMatrix:
    """Weighted word-vector sums with windowed-QR weights, then common-component removal.

    Each word is weighted by ``_gem_word_weight`` applied to the matrix of up
    to ``window`` preceding in-vocabulary word vectors plus its own vector as
    the last column. With ``top_components > 0`` the top principal directions
    of the composed matrix are removed afterwards.
    """
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    if top_components < 0:
        raise ValidationError(f"top_components must be >= 0, got {top_components}")

    def per_sentence(words: np.ndarray) -> np.ndarray:
        out = np.zeros(words.shape[1])
        for n in range(words.shape[0]):
            start = max(0, n - window)
            weight = _gem_word_weight(words[start : n + 1].T)
            out += weight * words[n]
        return out

    matrix = _collect(sentences, table, per_sentence, table.dim, "gem-glove")
    if top_components > 0 and matrix.rows > 0:
        matrix = EmbeddingMatrix(
            data=remove_common_components(matrix, top_components).data,
            method="gem-glove",
            index=matrix.index,
        )
    return matrix


def compose_random(sentences: list[AnnotatedSentence], dim: int, seed: int) -> EmbeddingMatrix:
    """Uniform random rows on [-1, 1]^dim, one per sentence, seeded."""
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    data = rng.uniform(-1.0, 1.0, (len(sentences), dim))
    return EmbeddingMatrix(data=data, method="random", index=[str(s.id) for s in sentences])


def ingest_external(path) -> EmbeddingMatrix:
    """Load an externally produced matrix from the binary format."""
    return load_matrix(path)


def remove_common_components(matrix: EmbeddingMatrix, k: int) -> EmbeddingMatrix:
    """Subtract each centered row's projection onto the matrix's top-k directions.

    The column mean is added back after deflation, so k = 0 returns the input
    values unchanged.
    """
    if k < 0 or k >= matrix.dim:
        raise ValidationError(f"k must be in [0, dim), got {k} with dim {matrix.dim}")
    if k == 0:
        return EmbeddingMatrix(data=matrix.data.copy(), method=matrix.method, index=list(matrix.index))
    if matrix.rows < 2:
        raise ValidationError("component removal needs at least 2 rows")
    mu = matrix.data.mean(axis=0)
    centered = matrix.data - mu
    dirs, _ = principal_directions(matrix.data, k)
    deflated = centered - (centered @ dirs) @ dirs.T
    return EmbeddingMatrix(data=deflated + mu, method=matrix.method, index=list(matrix.index))
