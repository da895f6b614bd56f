"""Linear alignment of a source embedding space onto a target space.

The map W (target dim x source dim) minimizes the mean squared pair error
mean_i ||W s_i - t_i||^2 with Adam plus decoupled weight decay, and is snapped
back to the nearest semi-orthogonal matrix after every batch. Inputs are
expected to be normalized with :func:`normalize` first (unit rows, column mean
removed, unit rows again). Early stopping watches the validation loss and the
returned weights are those of the best validation epoch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import SplitAssignment
from .errors import DivergenceError, RankDeficiencyError, ValidationError
from .matrix import EmbeddingMatrix, load_matrix, save_matrix

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8
# Per-epoch multiplicative decay: lr_e = lr0 / (1 + _LR_DECAY * epoch).
_LR_DECAY = 0.05


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 512
    max_epochs: int = 100
    patience: int = 10
    weight_decay: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValidationError("learning_rate, batch_size and max_epochs must be positive")
        if self.patience < 1 or self.patience > self.max_epochs:
            raise ValidationError("patience must be in [1, max_epochs]")
        if self.weight_decay < 0:
            raise ValidationError("weight_decay must be >= 0")


@dataclass
class LinearMap:
    weights: np.ndarray
    source_method: str
    target_method: str
    loss_history: list[tuple[float, float]] = field(default_factory=list)
    stopped_epoch: int = 0
    gram_deviation: float = 0.0

    @property
    def source_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def target_dim(self) -> int:
        return self.weights.shape[0]


def normalize(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Unit-scale rows, remove the column mean, then unit-scale rows again.

    Zero rows pass through the scaling steps unchanged.
    """
    if matrix.rows < 1:
        raise ValidationError("normalize needs at least one row")

    def unit_rows(data: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(data, axis=1, keepdims=True)
        return data / np.where(norms == 0.0, 1.0, norms)

    data = unit_rows(matrix.data)
    data = data - data.mean(axis=0)
    data = unit_rows(data)
    return EmbeddingMatrix(data=data, method=matrix.method, index=list(matrix.index))


def orthogonalize(weights: np.ndarray) -> np.ndarray:
    """Nearest semi-orthogonal matrix in Frobenius norm (U V^T from the SVD)."""
    weights = np.asarray(weights, dtype=np.float64)
    u, s, vt = np.linalg.svd(weights, full_matrices=False)
    if s.min() < 1e-12:
        raise RankDeficiencyError(
            f"matrix is numerically rank deficient (smallest singular value {s.min():.3e})"
        )
    return u @ vt


def alignment_loss_and_grad(
    weights: np.ndarray, source_rows: np.ndarray, target_rows: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean squared pair error and its analytic gradient with respect to W."""
    errors = source_rows @ weights.T - target_rows
    loss = float(np.mean(np.sum(errors * errors, axis=1)))
    grad = (2.0 / source_rows.shape[0]) * errors.T @ source_rows
    return loss, grad


def initial_weights(d_t: int, d_s: int, seed: int) -> np.ndarray:
    """Seeded uniform initialization projected onto the semi-orthogonal manifold."""
    rng = np.random.default_rng(seed)
    return orthogonalize(rng.uniform(-1.0 / np.sqrt(d_s), 1.0 / np.sqrt(d_s), (d_t, d_s)))


def _gram_deviation(weights: np.ndarray) -> float:
    d_t, d_s = weights.shape
    if d_t <= d_s:
        gram = weights @ weights.T
    else:
        gram = weights.T @ weights
    return float(np.abs(gram - np.eye(gram.shape[0])).max())


def train_alignment(
    source: EmbeddingMatrix,
    target: EmbeddingMatrix,
    pairs: list[tuple[int, int]],
    split: SplitAssignment,
    config: TrainConfig,
) -> LinearMap:
    """Learn W from (source row, target row) pairs, honoring the corpus split.

    A pair belongs to the training or validation set according to which split
    set contains the source row's item id; pairs outside both (the test set)
    are ignored here. Returns the weights from the best validation epoch.
    """
    for src_row, tgt_row in pairs:
        if not (0 <= src_row < source.rows and 0 <= tgt_row < target.rows):
            raise ValidationError(f"pair ({src_row}, {tgt_row}) is out of range")
    train_ids = {str(i) for i in split.train}
    valid_ids = {str(i) for i in split.valid}
    train_pairs = [(s, t) for s, t in pairs if source.index[s] in train_ids]
    valid_pairs = [(s, t) for s, t in pairs if source.index[s] in valid_ids]
    if not train_pairs:
        raise ValidationError("no training pairs after applying the split")

    s_train = source.data[[p[0] for p in train_pairs]]
    t_train = target.data[[p[1] for p in train_pairs]]
    if valid_pairs:
        s_valid = source.data[[p[0] for p in valid_pairs]]
        t_valid = target.data[[p[1] for p in valid_pairs]]
    else:
        # Without validation pairs, validate on the training set.
        s_valid, t_valid = s_train, t_train

    d_s, d_t = source.dim, target.dim
    rng = np.random.default_rng([config.seed, 1])  # batch shuffles; init draws use the bare seed
    weights = initial_weights(d_t, d_s, config.seed)

    m = np.zeros_like(weights)
    v = np.zeros_like(weights)
    step = 0
    history: list[tuple[float, float]] = []
    best_loss = np.inf
    best_weights = weights.copy()
    epochs_since_best = 0
    max_gram_dev = 0.0
    n_train = len(train_pairs)
    stopped_epoch = 0

    for epoch in range(config.max_epochs):
        lr = config.learning_rate / (1.0 + _LR_DECAY * epoch)
        order = rng.permutation(n_train)
        batch_losses = []
        for start in range(0, n_train, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grad = alignment_loss_and_grad(weights, s_train[idx], t_train[idx])
            if not np.isfinite(loss):
                raise DivergenceError(epoch)
            batch_losses.append(loss)
            step += 1
            m = _ADAM_BETA1 * m + (1 - _ADAM_BETA1) * grad
            v = _ADAM_BETA2 * v + (1 - _ADAM_BETA2) * grad * grad
            m_hat = m / (1 - _ADAM_BETA1**step)
            v_hat = v / (1 - _ADAM_BETA2**step)
            weights = (
                weights
                - lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)
                - lr * config.weight_decay * weights
            )
            try:
                weights = orthogonalize(weights)
            except (np.linalg.LinAlgError, RankDeficiencyError) as exc:
                raise DivergenceError(epoch) from exc
            max_gram_dev = max(max_gram_dev, _gram_deviation(weights))

        val_loss = float(np.mean(np.sum((s_valid @ weights.T - t_valid) ** 2, axis=1)))
        if not np.isfinite(val_loss):
            raise DivergenceError(epoch)
        history.append((float(np.mean(batch_losses)), val_loss))
        stopped_epoch = epoch
        if val_loss < best_loss:
            best_loss = val_loss
            best_weights = weights.copy()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= config.patience:
                break

    return LinearMap(
        weights=best_weights,
        source_method=source.method,
        target_method=target.method,
        loss_history=history,
        stopped_epoch=stopped_epoch,
        gram_deviation=max_gram_dev,
    )


def project(linear_map: LinearMap, matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Apply W to every row; the method label gains an ``+aligned`` suffix."""
    if matrix.dim != linear_map.source_dim:
        raise ValidationError(
            f"matrix dim {matrix.dim} does not match map source dim {linear_map.source_dim}"
        )
    return EmbeddingMatrix(
        data=matrix.data @ linear_map.weights.T,
        method=f"{matrix.method}+aligned",
        index=list(matrix.index),
    )


def save_linear_map(linear_map: LinearMap, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_matrix(
        EmbeddingMatrix(
            data=linear_map.weights,
            method=f"{linear_map.source_method}->{linear_map.target_method}",
            index=[str(i) for i in range(linear_map.target_dim)],
        ),
        directory / "weights.embx",
    )
    with open(directory / "metadata.txt", "w", encoding="utf-8") as fh:
        fh.write(f"source_method {linear_map.source_method}\n")
        fh.write(f"target_method {linear_map.target_method}\n")
        fh.write(f"stopped_epoch {linear_map.stopped_epoch}\n")
        fh.write(f"gram_deviation {linear_map.gram_deviation!r}\n")
    with open(directory / "loss_history.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "valid_loss"])
        for epoch, (train_loss, valid_loss) in enumerate(linear_map.loss_history):
            writer.writerow([epoch, repr(train_loss), repr(valid_loss)])


def load_linear_map(directory: str | Path) -> LinearMap:
    directory = Path(directory)
    weights = load_matrix(directory / "weights.embx")
    meta: dict[str, str] = {}
    with open(directory / "metadata.txt", "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                key, value = line.split(None, 1)
                meta[key] = value.strip()
    history: list[tuple[float, float]] = []
    history_path = directory / "loss_history.csv"
    if history_path.exists():
        with open(history_path, "r", encoding="utf-8", newline="") as fh:
            for row in list(csv.DictReader(fh)):
                history.append((float(row["train_loss"]), float(row["valid_loss"])))
    return LinearMap(
        weights=weights.data,
        source_method=meta["source_method"],
        target_method=meta["target_method"],
        loss_history=history,
        stopped_epoch=int(meta["stopped_epoch"]),
        gram_deviation=float(meta["gram_deviation"]),
    )
