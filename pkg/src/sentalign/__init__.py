"""Sentence embedding composition, graph embeddings, clusterability, and alignment."""

__version__ = "0.1.0"

from .align import LinearMap, TrainConfig, normalize, orthogonalize, project, train_alignment
from .annindex import AnnForest, brute_force_knn, build_index, query
from .clusterability import (
    SpatialHistogramReport,
    clusterability,
    kl_divergence,
    pca_project,
    spatial_histogram,
)
from .compose import (
    compose_dct,
    compose_gem,
    compose_mean,
    compose_random,
    ingest_external,
    remove_common_components,
)
from .corpus import (
    AnnotatedSentence,
    EntityMention,
    SplitAssignment,
    Triple,
    WordVectorTable,
    load_corpus,
    load_triples,
    load_word_vectors,
    pair_sentences_with_triples,
    stratified_split,
)
from .evaluation import EvalReport, evaluate_alignment, hits_at_k, pearson_correlation
from .kgembed import KgEmbedding, concat_triples, score_triple, train_transe
from .matrix import EmbeddingMatrix, load_matrix, save_matrix

__all__ = [
    "AnnForest",
    "AnnotatedSentence",
    "EmbeddingMatrix",
    "EntityMention",
    "EvalReport",
    "KgEmbedding",
    "LinearMap",
    "SpatialHistogramReport",
    "SplitAssignment",
    "TrainConfig",
    "Triple",
    "WordVectorTable",
    "brute_force_knn",
    "build_index",
    "clusterability",
    "compose_dct",
    "compose_gem",
    "compose_mean",
    "compose_random",
    "concat_triples",
    "evaluate_alignment",
    "hits_at_k",
    "ingest_external",
    "kl_divergence",
    "load_corpus",
    "load_matrix",
    "load_triples",
    "load_word_vectors",
    "normalize",
    "orthogonalize",
    "pair_sentences_with_triples",
    "pca_project",
    "pearson_correlation",
    "project",
    "query",
    "remove_common_components",
    "save_matrix",
    "score_triple",
    "spatial_histogram",
    "stratified_split",
    "train_alignment",
    "train_transe",
]
