from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from sklearn.utils.validation import check_is_fitted

from ..validation import ConfigurationError, check_task

DEFAULT_ENCODER = "bert-base-cased"
MAX_LENGTH_BY_TASK = {"connective": 400, "argument": 250}
ENCODER_POSITION_LIMIT = 512


@dataclass
class ClassifierConfig:
    """Training hyperparameters for one token classifier.

    ``batch_size``, ``weight_decay``, ``warmup_ratio`` and ``max_grad_norm``
    mirror the Hugging Face ``Trainer`` defaults.
    """

    task: str = "connective"
    max_subtoken_length: int | None = None
    learning_rate: float = 5e-5
    adam_epsilon: float = 1e-8
    epochs: int = 3
    n_runs: int = 4
    encoder_name: str = DEFAULT_ENCODER
    seed: int = 42
    batch_size: int = 8
    weight_decay: float = 0.0
    warmup_ratio: float = 0.0
    max_grad_norm: float = 1.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        check_task(self.task)
        if self.max_subtoken_length is None:
            self.max_subtoken_length = MAX_LENGTH_BY_TASK[self.task]
        self.validate()

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.n_runs < 1:
            raise ConfigurationError(f"n_runs must be >= 1, got {self.n_runs}")
        if not 3 <= self.max_subtoken_length <= ENCODER_POSITION_LIMIT:
            raise ConfigurationError(
                f"max_subtoken_length must be in [3, {ENCODER_POSITION_LIMIT}], got {self.max_subtoken_length}"
            )
        if self.learning_rate <= 0 or self.adam_epsilon <= 0:
            raise ConfigurationError("learning_rate and adam_epsilon must be positive")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ClassifierConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


class TokenClassifierMixin:
    """Shared surface of token classifiers.

    ``predict(X, segments=None)`` maps a list of word sequences to a list of
    label lists, one label per word. ``segments`` optionally carries the
    :class:`~disclabel.labeling.Segment` each sequence was cut from; backends
    that do not need it ignore it.
    """

    _estimator_type = "token_classifier"

    def segment_bounds(self, words) -> list[tuple[int, int]]:
        """Chunks ``predict`` will process independently (the whole input by default)."""
        return [(0, len(words))]

    def predict_tags(self, words, segment=None) -> list[str]:
        return self.predict([words], segments=None if segment is None else [segment])[0]

    def __sklearn_is_fitted__(self) -> bool:
        return hasattr(self, "labels_")

    def _check_fitted(self) -> None:
        check_is_fitted(self)
