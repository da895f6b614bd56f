"""Translation-based knowledge graph embeddings (TransE) and triple concatenation.

Training minimizes the margin ranking loss max(0, margin + ||h + r - t|| -
||h' + r - t'||) with uniform negative sampling that corrupts the head or tail
with equal probability, using plain minibatch SGD. Entity vectors are
renormalized to the unit sphere after every epoch; relation vectors are
normalized once at initialization. Everything is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Triple
from .errors import UnknownIdError, ValidationError
from .matrix import EmbeddingMatrix, load_matrix, save_matrix

_NORMS = ("L1", "L2")


@dataclass
class KgEmbedding:
    dim: int
    entity_vectors: dict[str, np.ndarray]
    relation_vectors: dict[str, np.ndarray]
    seed: int
    epochs: int
    margin: float
    learning_rate: float
    norm: str = "L2"
    probe_history: list[float] = field(default_factory=list)

    def entity(self, entity_id: str) -> np.ndarray:
        try:
            return self.entity_vectors[entity_id]
        except KeyError:
            raise UnknownIdError("entity", entity_id) from None

    def relation(self, relation_id: str) -> np.ndarray:
        try:
            return self.relation_vectors[relation_id]
        except KeyError:
            raise UnknownIdError("relation", relation_id) from None


def _distance(diff: np.ndarray, norm: str) -> np.ndarray:
    if norm == "L1":
        return np.abs(diff).sum(axis=-1)
    return np.sqrt((diff * diff).sum(axis=-1))


def score_triple(kg: KgEmbedding, triple: Triple, norm: str = "L2") -> float:
    """Negated distance ||h + r - t|| under the chosen norm; higher is more plausible."""
    if norm not in _NORMS:
        raise ValidationError(f"norm must be one of {_NORMS}, got {norm!r}")
    diff = kg.entity(triple.h) + kg.relation(triple.r) - kg.entity(triple.t)
    return -float(_distance(diff, norm))


def _margin_loss(
    entities: np.ndarray,
    relations: np.ndarray,
    pos: np.ndarray,
    neg_h: np.ndarray,
    neg_t: np.ndarray,
    margin: float,
    norm: str,
) -> float:
    d_pos = entities[pos[:, 0]] + relations[pos[:, 1]] - entities[pos[:, 2]]
    d_neg = entities[neg_h] + relations[pos[:, 1]] - entities[neg_t]
    raw = margin + _distance(d_pos, norm) - _distance(d_neg, norm)
    return float(np.maximum(raw, 0.0).mean())


def train_transe(
    triples: list[Triple],
    dim: int,
    epochs: int,
    margin: float = 1.0,
    learning_rate: float = 0.01,
    negatives_per_positive: int = 1,
    norm: str = "L2",
    seed: int = 0,
    batch_size: int = 128,
) -> KgEmbedding:
    """Train entity and relation vectors over a triple store.

    Initialization is uniform in [-6/sqrt(dim), 6/sqrt(dim)] per coordinate.
    The returned embedding records the margin loss on a fixed probe batch
    (fixed triples, fixed corruptions) at initialization and after every epoch.
    """
    if not triples:
        raise ValidationError("triple list is empty")
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    if margin <= 0 or learning_rate <= 0:
        raise ValidationError("margin and learning_rate must be > 0")
    if negatives_per_positive < 1:
        raise ValidationError("negatives_per_positive must be >= 1")
    if norm not in _NORMS:
        raise ValidationError(f"norm must be one of {_NORMS}, got {norm!r}")

    entity_ids = sorted({t.h for t in triples} | {t.t for t in triples})
    relation_ids = sorted({t.r for t in triples})
    ent_pos = {e: i for i, e in enumerate(entity_ids)}
    rel_pos = {r: i for i, r in enumerate(relation_ids)}
    coded = np.array(
        [(ent_pos[t.h], rel_pos[t.r], ent_pos[t.t]) for t in triples], dtype=np.int64
    )
    n_ent, n_tr = len(entity_ids), len(coded)

    rng = np.random.default_rng(seed)
    bound = 6.0 / np.sqrt(dim)
    entities = rng.uniform(-bound, bound, (n_ent, dim))
    relations = rng.uniform(-bound, bound, (len(relation_ids), dim))
    relations /= np.linalg.norm(relations, axis=1, keepdims=True)
    entities /= np.linalg.norm(entities, axis=1, keepdims=True)

    # Fixed probe batch: first triples with corruptions drawn once.
    probe_rng = np.random.default_rng([seed, 1])
    probe = coded[: min(256, n_tr)]
    p_side = probe_rng.integers(0, 2, len(probe))
    p_cand = probe_rng.integers(0, n_ent, len(probe))
    probe_h = np.where(p_side == 0, p_cand, probe[:, 0])
    probe_t = np.where(p_side == 1, p_cand, probe[:, 2])
    probe_h = np.where((p_side == 0) & (probe_h == probe[:, 0]), (probe_h + 1) % n_ent, probe_h)
    probe_t = np.where((p_side == 1) & (probe_t == probe[:, 2]), (probe_t + 1) % n_ent, probe_t)

    probe_history = [_margin_loss(entities, relations, probe, probe_h, probe_t, margin, norm)]

    for _ in range(epochs):
        order = rng.permutation(n_tr)
        for start in range(0, n_tr, batch_size):
            idx = order[start : start + batch_size]
            h = np.repeat(coded[idx, 0], negatives_per_positive)
            r = np.repeat(coded[idx, 1], negatives_per_positive)
            t = np.repeat(coded[idx, 2], negatives_per_positive)
            bn = len(h)
            side = rng.integers(0, 2, bn)
            cand = rng.integers(0, n_ent, bn)
            hc = np.where(side == 0, cand, h)
            tc = np.where(side == 1, cand, t)
            hc = np.where((side == 0) & (hc == h), (hc + 1) % n_ent, hc)
            tc = np.where((side == 1) & (tc == t), (tc + 1) % n_ent, tc)

            d_pos = entities[h] + relations[r] - entities[t]
            d_neg = entities[hc] + relations[r] - entities[tc]
            s_pos = _distance(d_pos, norm)
            s_neg = _distance(d_neg, norm)
            violated = (margin + s_pos - s_neg) > 0
            if not violated.any():
                continue
            scale = violated / bn
            if norm == "L1":
                g_pos = np.sign(d_pos) * scale[:, None]
                g_neg = np.sign(d_neg) * scale[:, None]
            else:
                g_pos = d_pos * (scale / np.maximum(s_pos, 1e-12))[:, None]
                g_neg = d_neg * (scale / np.maximum(s_neg, 1e-12))[:, None]

            lr = learning_rate
            np.add.at(entities, h, -lr * g_pos)
            np.add.at(entities, t, lr * g_pos)
            np.add.at(relations, r, -lr * g_pos)
            np.add.at(entities, hc, lr * g_neg)
            np.add.at(entities, tc, -lr * g_neg)
            np.add.at(relations, r, lr * g_neg)
        entities /= np.linalg.norm(entities, axis=1, keepdims=True)
        probe_history.append(
            _margin_loss(entities, relations, probe, probe_h, probe_t, margin, norm)
        )

    return KgEmbedding(
        dim=dim,
        entity_vectors={e: entities[i].copy() for e, i in ent_pos.items()},
        relation_vectors={r: relations[i].copy() for r, i in rel_pos.items()},
        seed=seed,
        epochs=epochs,
        margin=margin,
        learning_rate=learning_rate,
        norm=norm,
        probe_history=probe_history,
    )


def concat_triples(kg: KgEmbedding, triples: list[Triple]) -> EmbeddingMatrix:
    """One row [h : r : t] per distinct triple, keyed by the triple's canonical key."""
    rows = []
    index = []
    seen = set()
    for triple in triples:
        key = triple.key()
        if key in seen:
            continue
        seen.add(key)
        rows.append(np.concatenate([kg.entity(triple.h), kg.relation(triple.r), kg.entity(triple.t)]))
        index.append(key)
    data = np.vstack(rows) if rows else np.zeros((0, 3 * kg.dim))
    return EmbeddingMatrix(data=data, method="transe-concat", index=index)


def save_kg_embedding(kg: KgEmbedding, directory: str | Path) -> None:
    """Persist as two binary matrices plus a plain-text metadata sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ent_ids = sorted(kg.entity_vectors)
    rel_ids = sorted(kg.relation_vectors)
    save_matrix(
        EmbeddingMatrix(
            data=np.vstack([kg.entity_vectors[e] for e in ent_ids]),
            method="transe-entities",
            index=ent_ids,
        ),
        directory / "entities.embx",
    )
    save_matrix(
        EmbeddingMatrix(
            data=np.vstack([kg.relation_vectors[r] for r in rel_ids]),
            method="transe-relations",
            index=rel_ids,
        ),
        directory / "relations.embx",
    )
    with open(directory / "metadata.txt", "w", encoding="utf-8") as fh:
        fh.write(f"dim {kg.dim}\n")
        fh.write(f"seed {kg.seed}\n")
        fh.write(f"epochs {kg.epochs}\n")
        fh.write(f"margin {kg.margin!r}\n")
        fh.write(f"learning_rate {kg.learning_rate!r}\n")
        fh.write(f"norm {kg.norm}\n")


def load_kg_embedding(directory: str | Path) -> KgEmbedding:
    directory = Path(directory)
    entities = load_matrix(directory / "entities.embx")
    relations = load_matrix(directory / "relations.embx")
    meta: dict[str, str] = {}
    with open(directory / "metadata.txt", "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                key, value = line.split(None, 1)
                meta[key] = value.strip()
    return KgEmbedding(
        dim=int(meta["dim"]),
        entity_vectors={e: entities.data[i] for i, e in enumerate(entities.index)},
        relation_vectors={r: relations.data[i] for i, r in enumerate(relations.index)},
        seed=int(meta["seed"]),
        epochs=int(meta["epochs"]),
        margin=float(meta["margin"]),
        learning_rate=float(meta["learning_rate"]),
        norm=meta.get("norm", "L2"),
    )
