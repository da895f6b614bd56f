"""Experiment configuration: a flat key = value file with dotted sections.

Unknown keys are rejected so config typos fail loudly. Values have fixed types
per key; paths are resolved relative to the config file's directory. Defaults
follow the reference experimental setup (25 percent test split, 35 percent of
the remainder for validation, Adam at 0.001 with batch 512 for 100 epochs and
patience 10, 20 histogram bins, 500 reference sets, 300-dim graph embeddings).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .align import TrainConfig
from .errors import ConfigError, ValidationError

COMPOSE_METHODS = ("glove-mean", "glove-dct", "gem-glove", "random")


@dataclass
class PipelineConfig:
    seed: int = 7
    word_vectors: str = ""
    corpus: str = ""
    triples: str = ""
    out_dir: str = "out"
    lowercase: bool = False
    test_fraction: float = 0.25
    valid_fraction_of_train: float = 0.35
    methods: list[str] = field(default_factory=lambda: list(COMPOSE_METHODS))
    dct_k: int = 0
    gem_window: int = 7
    gem_top_components: int = 1
    random_dim: int = 300
    kg_dim: int = 300
    kg_epochs: int = 100
    kg_margin: float = 1.0
    kg_learning_rate: float = 0.01
    kg_negatives: int = 1
    kg_norm: str = "L2"
    kg_batch_size: int = 128
    align_learning_rate: float = 0.001
    align_batch_size: int = 512
    align_max_epochs: int = 100
    align_patience: int = 10
    align_weight_decay: float = 0.01
    bins: int = 20
    reference_sets: int = 500
    svg: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"split.test_fraction must be in (0, 1), got {self.test_fraction}")
        if not 0.0 <= self.valid_fraction_of_train < 1.0:
            raise ConfigError(
                f"split.valid_fraction_of_train must be in [0, 1), got {self.valid_fraction_of_train}"
            )
        for method in self.methods:
            if method not in COMPOSE_METHODS:
                raise ConfigError(
                    f"unknown compose method {method!r}; valid methods: {', '.join(COMPOSE_METHODS)}"
                )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.align_learning_rate,
            batch_size=self.align_batch_size,
            max_epochs=self.align_max_epochs,
            patience=self.align_patience,
            weight_decay=self.align_weight_decay,
            seed=self.seed,
        )


# config key -> (attribute, type tag)
_SCHEMA: dict[str, tuple[str, str]] = {
    "seed": ("seed", "int"),
    "paths.word_vectors": ("word_vectors", "path"),
    "paths.corpus": ("corpus", "path"),
    "paths.triples": ("triples", "path"),
    "paths.out_dir": ("out_dir", "path"),
    "corpus.lowercase": ("lowercase", "bool"),
    "split.test_fraction": ("test_fraction", "float"),
    "split.valid_fraction_of_train": ("valid_fraction_of_train", "float"),
    "compose.methods": ("methods", "list"),
    "compose.dct_k": ("dct_k", "int"),
    "compose.gem_window": ("gem_window", "int"),
    "compose.gem_top_components": ("gem_top_components", "int"),
    "compose.random_dim": ("random_dim", "int"),
    "kg.dim": ("kg_dim", "int"),
    "kg.epochs": ("kg_epochs", "int"),
    "kg.margin": ("kg_margin", "float"),
    "kg.learning_rate": ("kg_learning_rate", "float"),
    "kg.negatives_per_positive": ("kg_negatives", "int"),
    "kg.norm": ("kg_norm", "str"),
    "kg.batch_size": ("kg_batch_size", "int"),
    "align.learning_rate": ("align_learning_rate", "float"),
    "align.batch_size": ("align_batch_size", "int"),
    "align.max_epochs": ("align_max_epochs", "int"),
    "align.patience": ("align_patience", "int"),
    "align.weight_decay": ("align_weight_decay", "float"),
    "cluster.bins": ("bins", "int"),
    "cluster.reference_sets": ("reference_sets", "int"),
    "cluster.svg": ("svg", "bool"),
}


def _convert(key: str, raw: str, kind: str, base_dir: Path) -> object:
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "list":
            return [part.strip() for part in raw.split(",") if part.strip()]
        if kind == "path":
            return str((base_dir / raw).resolve()) if raw else raw
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None


def parse_config_text(text: str, base_dir: str | Path = ".", overrides: list[str] | None = None) -> PipelineConfig:
    base_dir = Path(base_dir)
    values: dict[str, object] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {stripped!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {line_no}: unknown config key {key!r}")
        attr, kind = _SCHEMA[key]
        values[attr] = _convert(key, raw, kind, base_dir)
    for override in overrides or []:
        if "=" not in override:
            raise ConfigError(f"override must look like key=value, got {override!r}")
        key, raw = override.split("=", 1)
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key in override: {key!r}")
        attr, kind = _SCHEMA[key]
        values[attr] = _convert(key, raw, kind, base_dir)
    try:
        return PipelineConfig(**values)
    except (ValidationError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path: str | Path, overrides: list[str] | None = None) -> PipelineConfig:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), path.parent, overrides)


def config_as_dict(config: PipelineConfig) -> dict[str, object]:
    """Flat attribute snapshot, for run manifests."""
    return {f.name: getattr(config, f.name) for f in fields(config)}
