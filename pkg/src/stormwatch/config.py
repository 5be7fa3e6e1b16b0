"""Pipeline configuration and deterministic per-stage seed derivation.

One seeded config drives every stage; there is no wall-clock seeding
anywhere. Stage RNGs are derived from the master seed by hashing the stage
name, so adding a stage never perturbs another stage's randomness.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import yaml


@dataclass
class PipelineConfig:
    seed: int
    workdir: str = "work"
    corpus_path: Optional[str] = None
    embeddings_path: Optional[str] = None  # seeded table when unset
    lexicon_path: Optional[str] = None     # shipped default when unset
    selection_encoder_path: Optional[str] = None  # seeded default when unset
    holdout_path: Optional[str] = None     # ids kept out of pools, used by predict

    embedding_dim: int = 300
    hidden_dim: int = 300

    slpa_iterations: int = 100
    slpa_threshold: float = 0.2
    pool_by: str = "category"  # or "keyword"

    pertinent_target: int = 20
    annotation_allow_supersede: bool = False

    epochs: int = 10
    learning_rate: float = 1e-4
    batch_size: int = 32
    decision_threshold: float = 0.5
    use_contexts: bool = True
    use_replies: bool = True

    bootstrap_start: float = 0.9
    bootstrap_step: float = 0.1
    bootstrap_floor: float = 0.5
    bootstrap_min_selected: int = 100
    dropout_rate: float = 0.2

    def __post_init__(self) -> None:
        if self.seed is None:
            raise ValueError("seed is mandatory; wall-clock seeding is not supported")
        self.seed = int(self.seed)
        if not (0 < self.slpa_threshold <= 0.5):
            raise ValueError("slpa_threshold must be in (0, 0.5]")
        if self.slpa_iterations < 1:
            raise ValueError("slpa_iterations must be >= 1")
        if not (0.0 <= self.dropout_rate <= 1.0):
            raise ValueError("dropout_rate must be in [0, 1]")
        for name in ("decision_threshold", "bootstrap_start", "bootstrap_step",
                     "bootstrap_floor"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")
        if self.pool_by not in ("category", "keyword"):
            raise ValueError("pool_by must be 'category' or 'keyword'")
        if self.embedding_dim <= 0 or self.hidden_dim <= 0:
            raise ValueError("dims must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    PATH_FIELDS = ("workdir", "corpus_path", "embeddings_path", "lexicon_path",
                   "selection_encoder_path", "holdout_path")

    def config_hash(self) -> str:
        """Digest of the computation parameters.

        Filesystem locations are excluded: input content is captured by the
        per-stage manifests' file hashes, so relocating a workdir or its
        inputs does not change the hash.
        """
        doc = {k: v for k, v in self.to_dict().items() if k not in self.PATH_FIELDS}
        blob = json.dumps(doc, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def load_config(path: str | Path, **overrides) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ValueError("config file must contain a mapping")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in raw:
        raise ValueError("config must set a seed")
    known = {f for f in PipelineConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return PipelineConfig(**raw)


def save_config(config: PipelineConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


def derive_seed(base: int, *labels) -> int:
    """Stable 63-bit stage seed from the master seed and a label path."""
    text = ":".join([str(base), *map(str, labels)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
