"""Conversion between relations and per-token tag sequences.

Connectives are tagged over paragraphs with a three-label scheme that keeps
single-token connectives (``CONN``) apart from tokens of multi-token ones
(``MWCONN``), so adjacent single-token connectives decode to separate relations.
Arguments are tagged IOB2-style inside a fixed-size window anchored on the first
token of the connective.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .corpus import Document, Relation, TokenSpan


class EncodingConflictError(ValueError):
    pass


class ConnTag(str, Enum):
    NONE = "NONE"
    CONN = "CONN"
    MWCONN = "MWCONN"

    def __str__(self):
        return self.value


class ArgTag(str, Enum):
    NONE = "NONE"
    ARG1_B = "ARG1-B"
    ARG1_I = "ARG1-I"
    ARG2_B = "ARG2-B"
    ARG2_I = "ARG2-I"

    def __str__(self):
        return self.value


# Vocabulary order doubles as the argmax tie-break order.
CONN_LABELS: tuple[str, ...] = tuple(t.value for t in ConnTag)
ARG_LABELS: tuple[str, ...] = tuple(t.value for t in ArgTag)
LABELS_BY_TASK = {"connective": CONN_LABELS, "argument": ARG_LABELS}


@dataclass(frozen=True)
class Segment:
    """A half-open token range ``[lo, hi)`` of one document.

    ``center`` is set for argument windows (the connective's first token) and
    ``None`` for paragraph segments.
    """

    doc_id: str
    lo: int
    hi: int
    center: int | None = None

    def __len__(self) -> int:
        return self.hi - self.lo

    def words(self, document: Document) -> list[str]:
        return [t.text for t in document.tokens[self.lo:self.hi]]

    def to_ref(self) -> dict:
        ref = {"doc_id": self.doc_id, "lo": self.lo, "hi": self.hi}
        if self.center is not None:
            ref["center"] = self.center
        return ref

    @classmethod
    def from_ref(cls, ref: dict) -> "Segment":
        return cls(ref["doc_id"], int(ref["lo"]), int(ref["hi"]), ref.get("center"))


Window = Segment


@dataclass(frozen=True)
class TagSequence:
    segment: Segment
    tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(str(t) for t in self.tags))
        if len(self.tags) != len(self.segment):
            raise ValueError(f"{len(self.tags)} tags for a segment of {len(self.segment)} tokens")

    def __len__(self) -> int:
        return len(self.tags)


def paragraph_segments(document: Document) -> list[Segment]:
    return [Segment(document.doc_id, lo, hi) for lo, hi in document.paragraphs()]


# --------------------------------------------------------------------------- connectives

def encode_connective_tags(paragraph: Segment, relations: Iterable[Relation]) -> TagSequence:
    """Tag the connectives of ``relations`` that fall inside ``paragraph``.

    Relations sharing an identical connective span count as one connective.
    Two different connectives claiming the same token raise
    :class:`EncodingConflictError`.
    """
    tags = [ConnTag.NONE] * len(paragraph)
    owner: dict[int, tuple[TokenSpan, str]] = {}
    for rel in relations:
        if rel.doc_id != paragraph.doc_id:
            continue
        label = ConnTag.CONN if len(rel.connective) == 1 else ConnTag.MWCONN
        for i in rel.connective:
            if not paragraph.lo <= i < paragraph.hi:
                continue
            if i in owner and owner[i][0] != rel.connective:
                raise EncodingConflictError(
                    f"token {i} of {paragraph.doc_id} is claimed by the connectives of "
                    f"relations {owner[i][1]} and {rel.relation_id}"
                )
            owner[i] = (rel.connective, rel.relation_id)
            tags[i - paragraph.lo] = label
    return TagSequence(paragraph, tuple(tags))


def decode_connective_tags(tags: Sequence[str] | TagSequence, offset: int | None = None) -> list[TokenSpan]:
    """Connective spans from a connective tag sequence.

    Every ``CONN`` token is its own connective; every maximal run of ``MWCONN``
    tokens is one connective. Indices are shifted by the segment start when a
    :class:`TagSequence` is given, or by ``offset``.
    """
    if isinstance(tags, TagSequence):
        offset = tags.segment.lo if offset is None else offset
        tags = tags.tags
    offset = offset or 0
    spans: list[TokenSpan] = []
    run: list[int] = []
    for i, tag in enumerate(tags):
        tag = str(tag)
        if tag == ConnTag.MWCONN.value:
            run.append(offset + i)
            continue
        if run:
            spans.append(TokenSpan.of(run))
            run = []
        if tag == ConnTag.CONN.value:
            spans.append(TokenSpan.of([offset + i]))
    if run:
        spans.append(TokenSpan.of(run))
    return spans


# --------------------------------------------------------------------------- arguments

def extract_window(document: Document, connective: TokenSpan, window_size: int = 100) -> Segment:
    """Window of at most ``window_size`` tokens around the connective's first token.

    Half the window (rounded down) lies left of the anchor; the anchor and the
    rest lie to its right. The window is clipped, not shifted, at document edges.
    """
    if not connective:
        raise ValueError("cannot build a window around an empty connective")
    if window_size < 1:
        raise ValueError("window_size must be >= 1")
    center = connective.first
    if not 0 <= center < len(document):
        raise IndexError(f"connective index {center} outside {document.doc_id}")
    left = window_size // 2
    lo = max(0, center - left)
    hi = min(len(document), center + window_size - left)
    return Segment(document.doc_id, lo, hi, center)


def encode_argument_tags(window: Segment, relation: Relation) -> TagSequence:
    tags = [ArgTag.NONE] * len(window)
    for span, begin, inside in (
        (relation.arg1, ArgTag.ARG1_B, ArgTag.ARG1_I),
        (relation.arg2, ArgTag.ARG2_B, ArgTag.ARG2_I),
    ):
        in_window = span.restrict(window.lo, window.hi)
        for k, i in enumerate(in_window):
            tags[i - window.lo] = begin if k == 0 else inside
    for i in relation.connective.restrict(window.lo, window.hi):
        tags[i - window.lo] = ArgTag.NONE
    return TagSequence(window, tuple(tags))


def decode_argument_tags(tags: Sequence[str] | TagSequence, window: Segment | None = None) -> tuple[TokenSpan, TokenSpan]:
    """Union of ``ARGX-B``/``ARGX-I`` tokens per argument, in document coordinates."""
    if isinstance(tags, TagSequence):
        window = tags.segment if window is None else window
        tags = tags.tags
    lo = window.lo if window is not None else 0
    arg1, arg2 = [], []
    for i, tag in enumerate(tags):
        tag = str(tag)
        if tag.startswith("ARG1"):
            arg1.append(lo + i)
        elif tag.startswith("ARG2"):
            arg2.append(lo + i)
    return TokenSpan.of(arg1), TokenSpan.of(arg2)


# --------------------------------------------------------------------------- instances

def connective_instances(documents: Sequence[Document], relations: Sequence[Relation]) -> list[TagSequence]:
    """One gold-tagged instance per paragraph."""
    by_doc: dict[str, list[Relation]] = {}
    for rel in relations:
        by_doc.setdefault(rel.doc_id, []).append(rel)
    out = []
    for doc in documents:
        rels = by_doc.get(doc.doc_id, [])
        for seg in paragraph_segments(doc):
            out.append(encode_connective_tags(seg, rels))
    return out


def argument_instances(
    documents: Sequence[Document], relations: Sequence[Relation], window_size: int = 100
) -> list[TagSequence]:
    """One gold-tagged window per relation, anchored on its gold connective."""
    by_id = {d.doc_id: d for d in documents}
    out = []
    for rel in relations:
        window = extract_window(by_id[rel.doc_id], rel.connective, window_size)
        out.append(encode_argument_tags(window, rel))
    return out


def tag_sequence_record(seq: TagSequence, document: Document | None = None) -> dict:
    record = {"segment_ref": seq.segment.to_ref(), "tags": list(seq.tags)}
    if document is not None:
        record["words"] = seq.segment.words(document)
    return record


def save_tag_sequences(path: str | os.PathLike, sequences: Iterable[TagSequence], documents=None) -> int:
    by_id = {d.doc_id: d for d in documents} if documents is not None else {}
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for seq in sequences:
            record = tag_sequence_record(seq, by_id.get(seq.segment.doc_id))
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            n += 1
    return n


def load_tag_sequences(path: str | os.PathLike) -> list[tuple[list[str] | None, TagSequence]]:
    """Read instance records as ``(words, TagSequence)`` pairs; ``words`` is ``None`` if absent."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                seq = TagSequence(Segment.from_ref(record["segment_ref"]), tuple(record["tags"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad instance record ({exc})") from exc
            out.append((record.get("words"), seq))
    return out
