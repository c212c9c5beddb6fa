"""Explicit discourse relation labelling with token classifiers.

Connectives are identified per paragraph, then the two arguments of each
connective are extracted from a fixed window around it. Predictions are scored
by exact match against gold relations.
"""
from .corpus import (
    Document,
    Relation,
    SpanStats,
    Token,
    TokenSpan,
    compute_span_stats,
    document_from_text,
    load_conll_corpus,
    load_documents,
    load_relations,
    save_documents,
    save_relations,
    segment_paragraphs,
    tokenize,
)
from .evaluation import ScoreReport, evaluate, match_relations, score
from .labeling import ArgTag, ConnTag, Segment, TagSequence
from .pipeline import ExplicitRelationLabeler, PredictedRelation, label_document, label_text

__version__ = "0.1.0"

__all__ = [
    "ArgTag",
    "ConnTag",
    "Document",
    "ExplicitRelationLabeler",
    "PredictedRelation",
    "Relation",
    "ScoreReport",
    "Segment",
    "SpanStats",
    "TagSequence",
    "Token",
    "TokenSpan",
    "compute_span_stats",
    "document_from_text",
    "evaluate",
    "label_document",
    "label_text",
    "load_conll_corpus",
    "load_documents",
    "load_relations",
    "match_relations",
    "save_documents",
    "save_relations",
    "score",
    "segment_paragraphs",
    "tokenize",
]
