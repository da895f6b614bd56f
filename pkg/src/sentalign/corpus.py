"""Loaders for word vectors, annotated corpora, and triple stores, plus splits.

File formats:
  - word vectors: one ``token v1 ... vd`` line per token, whitespace separated
  - corpus: JSON lines with fields ``sentence``, ``head`` {``mid``, ``text``},
    ``tail`` {``mid``, ``text``}, ``relation``
  - triples: tab-separated ``h<TAB>r<TAB>t``, one per line

All loaded values are plain immutable-by-convention dataclasses; loading is
single threaded and deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateTokenError,
    ParseError,
    ValidationError,
)


@dataclass
class WordVectorTable:
    """Token to dense-vector lookup with a single fixed dimensionality."""

    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValidationError(f"word vector dim must be >= 1, got {self.dim}")
        for token, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise ValidationError(
                    f"vector for {token!r} has shape {vec.shape}, expected ({self.dim},)"
                )

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[token]

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass
class EntityMention:
    text: str
    mid: str


@dataclass
class AnnotatedSentence:
    """A tokenized sentence with annotated head/tail entities and a relation."""

    id: int
    tokens: list[str]
    head: EntityMention
    tail: EntityMention
    relation: str

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValidationError(f"sentence {self.id}: token list is empty")
        if not self.head.mid or not self.tail.mid:
            raise ValidationError(f"sentence {self.id}: entity kb identifiers must be non-empty")
        if not self.relation:
            raise ValidationError(f"sentence {self.id}: relation label must be non-empty")


@dataclass(frozen=True)
class Triple:
    h: str
    r: str
    t: str

    def __post_init__(self) -> None:
        if not (self.h and self.r and self.t):
            raise ValidationError(f"triple fields must be non-empty, got {(self.h, self.r, self.t)}")

    def key(self) -> str:
        return f"{self.h}|{self.r}|{self.t}"

    @staticmethod
    def from_key(key: str) -> "Triple":
        parts = key.split("|")
        if len(parts) != 3:
            raise ValidationError(f"not a triple key: {key!r}")
        return Triple(*parts)


@dataclass
class SplitAssignment:
    """Disjoint train/valid/test sentence-id sets covering a corpus."""

    train: set[int]
    valid: set[int]
    test: set[int]

    def __post_init__(self) -> None:
        if self.train & self.valid or self.train & self.test or self.valid & self.test:
            raise ValidationError("split sets must be pairwise disjoint")


def load_word_vectors(path: str | Path) -> WordVectorTable:
    """Parse a text word-vector file into a WordVectorTable.

    Every line must have the same number of vector components; later
    duplicates of a token are rejected rather than silently overwritten.
    """
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ParseError(
                    f"expected 'token v1 ... vd', got {len(parts)} field(s)",
                    path=str(path),
                    line=line_no,
                )
            token = parts[0]
            try:
                values = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"non-numeric vector component ({exc})", path=str(path), line=line_no)
            if dim is None:
                dim = values.shape[0]
            elif values.shape[0] != dim:
                raise DimensionMismatchError(
                    f"vector has {values.shape[0]} components, expected {dim}",
                    path=str(path),
                    line=line_no,
                )
            if token in vectors:
                raise DuplicateTokenError(f"duplicate token {token!r}", path=str(path), line=line_no)
            vectors[token] = values
    if dim is None:
        raise ParseError("file contains no vectors", path=str(path))
    return WordVectorTable(dim=dim, vectors=vectors)


_CORPUS_FIELDS = ("sentence", "head", "tail", "relation")


def load_corpus(path: str | Path, lowercase: bool = False) -> list[AnnotatedSentence]:
    """Load a JSONL corpus; ids are assigned 0..n-1 in file order.

    Tokens come from whitespace-splitting the ``sentence`` field; the only
    normalization applied here is lowercasing when ``lowercase`` is set.
    """
    sentences: list[AnnotatedSentence] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", path=str(path), line=line_no)
            for fname in _CORPUS_FIELDS:
                if fname not in record:
                    raise ParseError(f"missing field {fname!r}", path=str(path), line=line_no)
            for side in ("head", "tail"):
                ent = record[side]
                if not isinstance(ent, dict) or "mid" not in ent or "text" not in ent:
                    raise ParseError(
                        f"field {side!r} must be an object with 'mid' and 'text'",
                        path=str(path),
                        line=line_no,
                    )
            tokens = str(record["sentence"]).split()
            if lowercase:
                tokens = [t.lower() for t in tokens]
            try:
                sentences.append(
                    AnnotatedSentence(
                        id=len(sentences),
                        tokens=tokens,
                        head=EntityMention(text=record["head"]["text"], mid=record["head"]["mid"]),
                        tail=EntityMention(text=record["tail"]["text"], mid=record["tail"]["mid"]),
                        relation=str(record["relation"]),
                    )
                )
            except ValidationError as exc:
                raise ParseError(str(exc), path=str(path), line=line_no)
    return sentences


def save_corpus(sentences: list[AnnotatedSentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            record = {
                "sentence": " ".join(s.tokens),
                "head": {"mid": s.head.mid, "text": s.head.text},
                "tail": {"mid": s.tail.mid, "text": s.tail.text},
                "relation": s.relation,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_triples(path: str | Path) -> list[Triple]:
    triples: list[Triple] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(
                    f"expected 3 tab-separated fields, got {len(parts)}",
                    path=str(path),
                    line=line_no,
                )
            try:
                triples.append(Triple(*parts))
            except ValidationError as exc:
                raise ParseError(str(exc), path=str(path), line=line_no)
    return triples


def save_triples(triples: list[Triple], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write(f"{t.h}\t{t.r}\t{t.t}\n")


def stratified_split(
    sentences: list[AnnotatedSentence],
    test_fraction: float,
    valid_fraction_of_train: float,
    seed: int,
) -> SplitAssignment:
    """Partition sentence ids into train/valid/test, stratified by relation.

    Within each relation label, the test set receives floor(test_fraction *
    count) sentences, capped so at least one sentence of every relation stays
    in train; the validation set then receives floor(valid_fraction_of_train *
    remaining). Selection is a deterministic function of the seed.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if not 0.0 <= valid_fraction_of_train < 1.0:
        raise ValidationError(
            f"valid_fraction_of_train must be in [0, 1), got {valid_fraction_of_train}"
        )
    by_relation: dict[str, list[int]] = {}
    for s in sentences:
        by_relation.setdefault(s.relation, []).append(s.id)

    rng = np.random.default_rng(seed)
    train: set[int] = set()
    valid: set[int] = set()
    test: set[int] = set()
    for relation in sorted(by_relation):
        ids = np.array(sorted(by_relation[relation]), dtype=np.int64)
        ids = ids[rng.permutation(len(ids))]
        n_test = min(int(test_fraction * len(ids)), len(ids) - 1)
        remaining = len(ids) - n_test
        n_valid = int(valid_fraction_of_train * remaining)
        test.update(ids[:n_test].tolist())
        valid.update(ids[n_test : n_test + n_valid].tolist())
        train.update(ids[n_test + n_valid :].tolist())
    return SplitAssignment(train=train, valid=valid, test=test)


def pair_sentences_with_triples(sentences: list[AnnotatedSentence]) -> list[tuple[int, Triple]]:
    """One (sentence id, triple) pair per sentence, from its annotations."""
    return [(s.id, Triple(h=s.head.mid, r=s.relation, t=s.tail.mid)) for s in sentences]
