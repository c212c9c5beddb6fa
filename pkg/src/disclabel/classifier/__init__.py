"""Token classification backends."""
from .alignment import AlignmentMap, align_subtokens, chunk_bounds
from .base import ClassifierConfig, TokenClassifierMixin
from .baseline import (
    DEFAULT_LEXICON,
    CenterArgumentClassifier,
    GoldTagClassifier,
    LexiconConnectiveClassifier,
    baseline_argument_classifier,
    baseline_connective_classifier,
)
from .transformer import TransformerTokenClassifier, build_tiny_encoder, pretrain_masked_lm


def train(config: ClassifierConfig, instances, **overrides) -> TransformerTokenClassifier:
    """Fine-tune a classifier on ``(words, tags)`` pairs."""
    instances = list(instances)
    if not instances:
        raise ValueError("cannot train on an empty instance list")
    X = [list(words) for words, _ in instances]
    y = [tags for _, tags in instances]
    return TransformerTokenClassifier.from_config(config, **overrides).fit(X, y)


def predict(classifier, words, segment=None) -> list[str]:
    """Labels for one word sequence."""
    if not words:
        raise ValueError("cannot label an empty word sequence")
    return classifier.predict_tags(list(words), segment)


__all__ = [
    "AlignmentMap",
    "CenterArgumentClassifier",
    "ClassifierConfig",
    "DEFAULT_LEXICON",
    "GoldTagClassifier",
    "LexiconConnectiveClassifier",
    "TokenClassifierMixin",
    "TransformerTokenClassifier",
    "align_subtokens",
    "baseline_argument_classifier",
    "baseline_connective_classifier",
    "build_tiny_encoder",
    "chunk_bounds",
    "predict",
    "pretrain_masked_lm",
    "train",
]
