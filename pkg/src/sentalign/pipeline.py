"""End-to-end experiment orchestration.

Each stage persists its artifacts under the configured output directory so any
stage can be re-run in isolation from the files the previous stages left
behind:

    split.json                      train/valid/test sentence ids
    embeddings/<method>.embx        composed sentence embeddings
    embeddings/<method>.oov.txt     sentence ids excluded by the OOV policy
    kg/                             trained graph embedding + candidates.embx
    align/<method>/                 linear map, metadata, loss history
    table1.csv / table1.txt         clusterability per method
    table2.csv / table2.txt         retrieval metrics per method
    correlations.csv                cross-method correlation summary
    scatter_<method>.svg            2-D projection scatter (optional stage flag)
    manifest.json                   config echo, derived seeds, versions

Every stochastic stage derives its seed from the global seed with a fixed
offset, so one config value reproduces the whole run.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .align import normalize, save_linear_map, load_linear_map, train_alignment
from .annindex import build_index
from .clusterability import SpatialHistogramReport, clusterability, pca_project
from .compose import (
    compose_dct,
    compose_gem,
    compose_mean,
    compose_random,
)
from .config import PipelineConfig, config_as_dict
from .corpus import (
    load_corpus,
    load_triples,
    load_word_vectors,
    pair_sentences_with_triples,
    SplitAssignment,
    stratified_split,
)
from .errors import PipelineError, ValidationError
from .evaluation import (
    EvalReport,
    evaluate_alignment,
    pearson_correlation,
    write_alignment_table,
    write_clusterability_table,
)
from .errors import CorrelationUndefinedError
from .kgembed import concat_triples, load_kg_embedding, save_kg_embedding, train_transe
from .matrix import EmbeddingMatrix, load_matrix, save_matrix

_SEED_OFFSETS = {"split": 11, "random": 23, "kg": 37, "cluster": 53, "ann": 71}


def stage_seed(global_seed: int, stage: str) -> int:
    return global_seed * 1000 + _SEED_OFFSETS[stage]


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def _require_paths(config: PipelineConfig, *names: str) -> None:
    for name in names:
        value = getattr(config, name)
        if not value:
            raise ValidationError(f"config is missing paths.{name}")
        if not Path(value).exists():
            raise ValidationError(f"paths.{name} does not exist: {value}")


def _out(config: PipelineConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_split(config: PipelineConfig) -> SplitAssignment:
    """Stratified split of the corpus, persisted as split.json."""
    with _stage("split"):
        _require_paths(config, "corpus")
        sentences = load_corpus(config.corpus, lowercase=config.lowercase)
        split = stratified_split(
            sentences,
            test_fraction=config.test_fraction,
            valid_fraction_of_train=config.valid_fraction_of_train,
            seed=stage_seed(config.seed, "split"),
        )
        payload = {
            "train": sorted(split.train),
            "valid": sorted(split.valid),
            "test": sorted(split.test),
        }
        (_out(config) / "split.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return split


def load_split(config: PipelineConfig) -> SplitAssignment:
    """Load the persisted split, computing it first if this run lacks one."""
    path = Path(config.out_dir) / "split.json"
    if not path.exists():
        return run_split(config)
    payload = json.loads(path.read_text(encoding="utf-8"))
    return SplitAssignment(
        train=set(payload["train"]), valid=set(payload["valid"]), test=set(payload["test"])
    )


def run_compose(config: PipelineConfig, method: str) -> EmbeddingMatrix:
    """Compose sentence embeddings for one method and persist them."""
    with _stage(f"compose:{method}"):
        _require_paths(config, "corpus")
        sentences = load_corpus(config.corpus, lowercase=config.lowercase)
        if method == "random":
            matrix = compose_random(
                sentences, dim=config.random_dim, seed=stage_seed(config.seed, "random")
            )
        else:
            _require_paths(config, "word_vectors")
            table = load_word_vectors(config.word_vectors)
            if method == "glove-mean":
                matrix = compose_mean(sentences, table)
            elif method == "glove-dct":
                matrix = compose_dct(sentences, table, config.dct_k)
            elif method == "gem-glove":
                matrix = compose_gem(
                    sentences, table, window=config.gem_window,
                    top_components=config.gem_top_components,
                )
            else:
                raise ValidationError(f"unknown compose method {method!r}")
        emb_dir = _out(config) / "embeddings"
        emb_dir.mkdir(exist_ok=True)
        save_matrix(matrix, emb_dir / f"{method}.embx")
        kept = set(matrix.index)
        excluded = [str(s.id) for s in sentences if str(s.id) not in kept]
        (emb_dir / f"{method}.oov.txt").write_text(
            "".join(f"{i}\n" for i in excluded), encoding="utf-8"
        )
        return matrix


def _method_matrix(config: PipelineConfig, method: str) -> EmbeddingMatrix:
    return load_matrix(Path(config.out_dir) / "embeddings" / f"{method}.embx")


def run_train_kg(config: PipelineConfig) -> EmbeddingMatrix:
    """Train graph embeddings over the triple store; returns the candidate matrix."""
    with _stage("train-kg"):
        _require_paths(config, "triples")
        triples = load_triples(config.triples)
        kg = train_transe(
            triples,
            dim=config.kg_dim,
            epochs=config.kg_epochs,
            margin=config.kg_margin,
            learning_rate=config.kg_learning_rate,
            negatives_per_positive=config.kg_negatives,
            norm=config.kg_norm,
            seed=stage_seed(config.seed, "kg"),
            batch_size=config.kg_batch_size,
        )
        kg_dir = _out(config) / "kg"
        save_kg_embedding(kg, kg_dir)
        candidates = concat_triples(kg, triples)
        save_matrix(candidates, kg_dir / "candidates.embx")
        return candidates


def write_scatter_svg(points: np.ndarray, path: str | Path, max_points: int = 4000) -> None:
    """Minimal deterministic SVG scatter of 2-D points."""
    size, margin, radius = 420.0, 20.0, 2.0
    n = points.shape[0]
    stride = max(1, -(-n // max_points))
    sample = points[::stride]
    lo = sample.min(axis=0)
    hi = sample.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    scale = (size - 2 * margin) / span
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
        f'viewBox="0 0 {size:.0f} {size:.0f}">',
        f'<rect width="{size:.0f}" height="{size:.0f}" fill="white"/>',
    ]
    for x, y in sample:
        cx = margin + (x - lo[0]) * scale[0]
        cy = size - margin - (y - lo[1]) * scale[1]
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{radius}" fill="steelblue" fill-opacity="0.5"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def run_cluster(
    config: PipelineConfig, methods: list[str] | None = None, svg: bool | None = None
) -> list[SpatialHistogramReport]:
    """Clusterability of each method's train+valid rows; writes table1."""
    with _stage("cluster"):
        methods = methods or config.methods
        want_svg = config.svg if svg is None else svg
        split = load_split(config)
        pool = {str(i) for i in (split.train | split.valid)}
        reports = []
        out = _out(config)
        for method in methods:
            matrix = _method_matrix(config, method)
            keep = [i for i, item in enumerate(matrix.index) if item in pool]
            pooled = EmbeddingMatrix(
                data=matrix.data[keep], method=matrix.method,
                index=[matrix.index[i] for i in keep],
            )
            reports.append(
                clusterability(
                    pooled,
                    bins_per_axis=config.bins,
                    reference_sets=config.reference_sets,
                    seed=stage_seed(config.seed, "cluster"),
                )
            )
            if want_svg:
                projected = pca_project(pooled, 2)
                write_scatter_svg(projected.data, out / f"scatter_{method}.svg")
        write_clusterability_table(reports, out / "table1.csv", out / "table1.txt")
        return reports


def _normalized_pairs(config: PipelineConfig, method: str):
    """Shared setup for alignment training and evaluation.

    Returns the normalized source matrix, normalized candidate matrix, the
    corpus sentences, and the (sentence id, triple key) ground truth.
    """
    sentences = load_corpus(config.corpus, lowercase=config.lowercase)
    source = normalize(_method_matrix(config, method))
    candidates = normalize(load_matrix(Path(config.out_dir) / "kg" / "candidates.embx"))
    truth = [(sid, triple.key()) for sid, triple in pair_sentences_with_triples(sentences)]
    return source, candidates, truth


def run_align(config: PipelineConfig, method: str):
    """Train the linear map for one method and persist it."""
    with _stage(f"align:{method}"):
        _require_paths(config, "corpus")
        split = load_split(config)
        source, candidates, truth = _normalized_pairs(config, method)
        pairs = []
        for sid, key in truth:
            sid = str(sid)
            try:
                src_row = source.position_of(sid)
            except ValidationError:
                continue  # excluded by the OOV policy
            try:
                tgt_row = candidates.position_of(key)
            except ValidationError:
                raise ValidationError(
                    f"triple {key!r} from the corpus is not covered by the graph embedding"
                ) from None
            pairs.append((src_row, tgt_row))
        linear_map = train_alignment(source, candidates, pairs, split, config.train_config())
        save_linear_map(linear_map, _out(config) / "align" / method)
        return linear_map


def run_evaluate(config: PipelineConfig, methods: list[str] | None = None,
                 relation_level: bool = False) -> list[EvalReport]:
    """Evaluate trained maps on the test split; writes table2 and correlations."""
    with _stage("evaluate"):
        methods = methods or config.methods
        split = load_split(config)
        test_ids = {str(i) for i in split.test}
        reports = []
        out = _out(config)
        for method in methods:
            linear_map = load_linear_map(out / "align" / method)
            source, candidates, truth = _normalized_pairs(config, method)
            index = build_index(
                candidates, n_trees=10, leaf_capacity=32, seed=stage_seed(config.seed, "ann")
            )
            in_source = set(source.index)
            test_truth = [
                (sid, key) for sid, key in truth
                if str(sid) in test_ids and str(sid) in in_source
            ]
            reports.append(
                evaluate_alignment(
                    linear_map, source, test_truth, candidates, index,
                    relation_level=relation_level,
                )
            )
        write_alignment_table(reports, out / "table2.csv", out / "table2.txt")
        return reports


def _write_correlations(
    cluster_reports: list[SpatialHistogramReport],
    eval_reports: list[EvalReport],
    path: Path,
) -> None:
    kl = [r.kl_mean for r in cluster_reports]
    dims = [float(r.embedding_dim) for r in eval_reports]
    h5 = [r.hits_at_5 for r in eval_reports]
    h10 = [r.hits_at_10 for r in eval_reports]
    sims = [r.avg_similarity for r in eval_reports]
    rows = []
    for name, x, y in (
        ("kl_mean_vs_hits_at_5", kl, h5),
        ("kl_mean_vs_hits_at_10", kl, h10),
        ("kl_mean_vs_dim", kl, dims),
        ("avg_similarity_vs_hits_at_5", sims, h5),
        ("avg_similarity_vs_hits_at_10", sims, h10),
    ):
        try:
            rows.append((name, pearson_correlation(x, y)))
        except (CorrelationUndefinedError, ValidationError):
            continue
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("pair,pearson_rho\n")
        for name, rho in rows:
            fh.write(f"{name},{rho:.6f}\n")


def run_full_experiment(config: PipelineConfig) -> Path:
    """Split, compose, train, measure, align, and evaluate; returns the report dir.

    Reruns with an identical config produce byte-identical CSV outputs.
    """
    _require_paths(config, "corpus", "triples")
    if any(m != "random" for m in config.methods):
        _require_paths(config, "word_vectors")
    out = _out(config)
    completed = []

    run_split(config)
    completed.append("split")
    for method in config.methods:
        run_compose(config, method)
        completed.append(f"compose:{method}")
    run_train_kg(config)
    completed.append("train-kg")
    cluster_reports = run_cluster(config, svg=True)
    completed.append("cluster")
    for method in config.methods:
        run_align(config, method)
        completed.append(f"align:{method}")
    eval_reports = run_evaluate(config)
    completed.append("evaluate")
    if len(eval_reports) >= 2:
        _write_correlations(cluster_reports, eval_reports, out / "correlations.csv")
        completed.append("correlations")

    manifest = {
        "config": config_as_dict(config),
        "stage_seeds": {name: stage_seed(config.seed, name) for name in _SEED_OFFSETS},
        "stages_completed": completed,
        "versions": {
            "sentalign": __version__,
            "numpy": np.__version__,
            "kernel_backend": _kernels.BACKEND,
        },
        "outputs": sorted(
            str(p.relative_to(out)) for p in out.rglob("*") if p.is_file() and p.name != "manifest.json"
        ),
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out
