"""Dense embedding matrices and their binary on-disk format.

An EmbeddingMatrix is the currency passed between pipeline stages: a row-major
matrix of embeddings, a method label saying how it was produced, and an index
mapping each row to the id of the item it embeds (a sentence id rendered as a
string, or a triple key like ``"h|r|t"``).

The binary format (``EMBX1``) is, in order: the 5 magic bytes ``EMBX1``, the
method label as a u32-LE length followed by UTF-8 bytes, the row count (u64 LE),
the dimensionality (u64 LE), ``rows * dim`` float32-LE values row-major, and one
u32-LE length-prefixed UTF-8 string per row for the index. Values are stored in
float32; in-memory matrices are float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MatrixFormatError, ValidationError

MAGIC = b"EMBX1"


@dataclass
class EmbeddingMatrix:
    data: np.ndarray
    method: str
    index: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValidationError(f"embedding data must be 2-D, got shape {self.data.shape}")
        if not self.method:
            raise ValidationError("method label must be non-empty")
        self.index = [str(i) for i in self.index]
        if len(self.index) != self.data.shape[0]:
            raise ValidationError(
                f"index length {len(self.index)} does not match row count {self.data.shape[0]}"
            )
        if len(set(self.index)) != len(self.index):
            raise ValidationError("index contains duplicate item ids")
        if self.data.size and not np.isfinite(self.data).all():
            raise ValidationError("embedding data contains non-finite values")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row_of(self, item_id: str) -> np.ndarray:
        return self.data[self.position_of(item_id)]

    def position_of(self, item_id: str) -> int:
        if not hasattr(self, "_positions"):
            self._positions = {item: i for i, item in enumerate(self.index)}
        try:
            return self._positions[str(item_id)]
        except KeyError:
            raise ValidationError(f"item id {item_id!r} not present in matrix index") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return (
            self.method == other.method
            and self.index == other.index
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )


def save_matrix(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write a matrix in the EMBX1 binary format (float32 storage)."""
    label = matrix.method.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(label)))
        fh.write(label)
        fh.write(struct.pack("<QQ", matrix.rows, matrix.dim))
        fh.write(np.ascontiguousarray(matrix.data, dtype="<f4").tobytes())
        for item in matrix.index:
            raw = item.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)


def load_matrix(path: str | Path) -> EmbeddingMatrix:
    """Read an EMBX1 file back into an EmbeddingMatrix."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) or blob[: len(MAGIC)] != MAGIC:
        raise MatrixFormatError(f"{path}: bad magic bytes (not an EMBX1 file)")
    pos = len(MAGIC)

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise MatrixFormatError(f"{path}: truncated while reading {what}")
        out = blob[pos : pos + n]
        pos += n
        return out

    (label_len,) = struct.unpack("<I", take(4, "label length"))
    try:
        method = take(label_len, "method label").decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MatrixFormatError(f"{path}: method label is not valid UTF-8") from exc
    rows, dim = struct.unpack("<QQ", take(16, "shape header"))
    data = np.frombuffer(take(rows * dim * 4, "matrix values"), dtype="<f4")
    data = data.reshape(rows, dim).astype(np.float64)
    index = []
    for i in range(rows):
        (id_len,) = struct.unpack("<I", take(4, f"index entry {i} length"))
        index.append(take(id_len, f"index entry {i}").decode("utf-8"))
    if pos != len(blob):
        raise MatrixFormatError(f"{path}: {len(blob) - pos} trailing bytes after index")
    return EmbeddingMatrix(data=data, method=method, index=index)
