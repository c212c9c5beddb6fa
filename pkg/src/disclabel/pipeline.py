"""Two-step labeller: find connectives per paragraph, then extract the arguments of each.

Every predicted connective anchors exactly one relation, so relations whose
arguments overlap never need to be disentangled afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .corpus import Document, Relation, TokenSpan, document_from_text, relation_to_record, tokenize
from .labeling import (
    ARG_LABELS,
    CONN_LABELS,
    ArgTag,
    Segment,
    argument_instances,
    connective_instances,
    decode_argument_tags,
    decode_connective_tags,
    extract_window,
    paragraph_segments,
)
from .validation import ConfigurationError, check_vocabulary


@dataclass(frozen=True)
class PredictedRelation(Relation):
    provenance: dict = field(default_factory=dict, compare=False, hash=False)
    char_spans: dict | None = field(default=None, compare=False, hash=False)

    def to_record(self) -> dict:
        record = relation_to_record(self)
        record["provenance"] = self.provenance
        if self.char_spans is not None:
            record["char_spans"] = self.char_spans
        return record


def _model_id(model) -> str:
    meta = getattr(model, "training_metadata_", None)
    if meta:
        return f"{type(model).__name__}:{meta.get('config_hash')}:seed{meta.get('seed')}"
    return type(model).__name__


def _words(document: Document, seg: Segment) -> list[str]:
    return [t.text for t in document.tokens[seg.lo:seg.hi]]


class ExplicitRelationLabeler(BaseEstimator):
    """Labels explicit discourse relations in tokenised documents.

    Parameters
    ----------
    connective_model, argument_model :
        Token classifiers for the connective and argument label sets. If they
        are already fitted, :meth:`predict` can be called without :meth:`fit`.
    window_size : int
        Tokens of context given to the argument model around each connective.
    drop_empty_arguments : bool
        Discard predicted relations with an empty Arg1 or Arg2.
    """

    def __init__(self, connective_model=None, argument_model=None, window_size=100, drop_empty_arguments=True):
        self.connective_model = connective_model
        self.argument_model = argument_model
        self.window_size = window_size
        self.drop_empty_arguments = drop_empty_arguments

    def fit(self, documents, relations):
        """Train both classifiers from gold relations.

        The connective model sees one instance per paragraph, the argument
        model one window per gold connective.
        """
        self._check_params()
        conn = connective_instances(documents, relations)
        args = argument_instances(documents, relations, self.window_size)
        by_id = {d.doc_id: d for d in documents}
        self.connective_model_ = clone(self.connective_model).fit(
            [_words(by_id[s.segment.doc_id], s.segment) for s in conn], conn
        )
        self.argument_model_ = clone(self.argument_model).fit(
            [_words(by_id[s.segment.doc_id], s.segment) for s in args], args
        )
        return self

    def _check_params(self):
        if self.connective_model is None or self.argument_model is None:
            raise ConfigurationError("both connective_model and argument_model are required")
        if self.window_size < 1:
            raise ConfigurationError(f"window_size must be >= 1, got {self.window_size}")

    def _models(self):
        if hasattr(self, "connective_model_"):
            conn, arg = self.connective_model_, self.argument_model_
        else:
            self._check_params()
            conn, arg = self.connective_model, self.argument_model
            check_is_fitted(conn)
            check_is_fitted(arg)
        check_vocabulary(conn, CONN_LABELS, "connective")
        check_vocabulary(arg, ARG_LABELS, "argument")
        return conn, arg

    def label_document(self, document: Document) -> list[PredictedRelation]:
        conn_model, arg_model = self._models()
        if not len(document):
            return []
        paragraphs = paragraph_segments(document)
        para_words = [_words(document, p) for p in paragraphs]
        para_tags = conn_model.predict(para_words, segments=paragraphs)

        anchors: list[tuple[int, TokenSpan]] = []
        for k, (seg, words, tags) in enumerate(zip(paragraphs, para_words, para_tags)):
            # Runs never merge across the chunks the model labelled separately.
            for start, end in conn_model.segment_bounds(words):
                for span in decode_connective_tags(tags[start:end], offset=seg.lo + start):
                    anchors.append((k, span))
        if not anchors:
            return []

        windows = [extract_window(document, span, self.window_size) for _, span in anchors]
        window_tags = arg_model.predict([_words(document, w) for w in windows], segments=windows)

        model_ids = {"connective": _model_id(conn_model), "argument": _model_id(arg_model)}
        out = []
        for n, ((k, conn), window, tags) in enumerate(zip(anchors, windows, window_tags)):
            tags = list(tags)
            for i in conn.restrict(window.lo, window.hi):
                tags[i - window.lo] = ArgTag.NONE.value
            arg1, arg2 = decode_argument_tags(tags, window)
            if self.drop_empty_arguments and not (arg1 and arg2):
                continue
            assert not (conn.as_set() & (arg1.as_set() | arg2.as_set()))
            out.append(
                PredictedRelation(
                    f"{document.doc_id}-{n}",
                    document.doc_id,
                    conn,
                    arg1,
                    arg2,
                    provenance={"paragraph": k, "window": [window.lo, window.hi], "models": model_ids},
                )
            )
        return out

    def predict(self, documents) -> list[PredictedRelation]:
        out = []
        for doc in documents:
            out.extend(self.label_document(doc))
        return out


def label_document(document: Document, labeler: ExplicitRelationLabeler) -> list[PredictedRelation]:
    return labeler.label_document(document)


def label_text(raw_text: str, labeler: ExplicitRelationLabeler, tokenizer=tokenize, doc_id: str = "text") -> list[PredictedRelation]:
    """Label raw text; each relation also carries character ranges of its components."""
    if not raw_text.strip():
        return []
    document = document_from_text(raw_text, doc_id, tokenizer)
    out = []
    for rel in labeler.label_document(document):
        spans = {
            name: [list(r) for r in document.char_ranges(span)]
            for name, span in (("connective", rel.connective), ("arg1", rel.arg1), ("arg2", rel.arg2))
        }
        out.append(PredictedRelation(rel.relation_id, rel.doc_id, rel.connective, rel.arg1, rel.arg2,
                                     provenance=rel.provenance, char_spans=spans))
    return out
