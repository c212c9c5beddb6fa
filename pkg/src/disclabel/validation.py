"""Input checks shared by the estimators."""
from __future__ import annotations

from typing import Sequence

from .labeling import LABELS_BY_TASK, TagSequence


class ConfigurationError(ValueError):
    """Invalid hyperparameters, or models that do not fit together."""


def check_task(task: str) -> tuple[str, ...]:
    if task not in LABELS_BY_TASK:
        raise ConfigurationError(f"task must be one of {sorted(LABELS_BY_TASK)}, got {task!r}")
    return LABELS_BY_TASK[task]


def check_word_sequences(X, allow_empty_items: bool = False) -> list[list[str]]:
    """Coerce ``X`` to a list of word lists, rejecting bare strings."""
    if isinstance(X, str):
        raise TypeError("expected a list of word sequences, got a string")
    out = []
    for k, words in enumerate(X):
        if isinstance(words, str):
            raise TypeError(f"sequence {k} is a string; pass a list of words")
        words = [str(w) for w in words]
        if not words and not allow_empty_items:
            raise ValueError(f"sequence {k} is empty")
        out.append(words)
    return out


def check_tag_sequences(X: Sequence[Sequence[str]], y, labels: Sequence[str]) -> list[list[str]]:
    """Validate gold tags against ``X`` and the label vocabulary."""
    if len(X) != len(y):
        raise ValueError(f"{len(X)} word sequences but {len(y)} tag sequences")
    vocab = set(labels)
    out = []
    for k, (words, tags) in enumerate(zip(X, y)):
        tags = list(tags.tags) if isinstance(tags, TagSequence) else [str(t) for t in tags]
        if len(tags) != len(words):
            raise ValueError(f"instance {k}: {len(words)} words but {len(tags)} tags")
        bad = set(tags) - vocab
        if bad:
            raise ValueError(f"instance {k}: labels {sorted(bad)} not in vocabulary {list(labels)}")
        out.append(tags)
    return out


def check_segments(segments, X) -> list | None:
    if segments is None:
        return None
    segments = list(segments)
    if len(segments) != len(X):
        raise ValueError(f"{len(X)} word sequences but {len(segments)} segments")
    for k, (seg, words) in enumerate(zip(segments, X)):
        if seg is not None and len(seg) != len(words):
            raise ValueError(f"instance {k}: segment covers {len(seg)} tokens but {len(words)} words given")
    return segments


def check_vocabulary(model, expected: Sequence[str], role: str) -> None:
    labels = tuple(getattr(model, "labels_", ()))
    if labels != tuple(expected):
        raise ConfigurationError(f"{role} model has label vocabulary {list(labels)}, expected {list(expected)}")
