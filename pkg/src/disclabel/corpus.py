"""Data model, corpus ingestion, paragraph segmentation and span statistics.

Two on-disk layouts are understood:

* the CoNLL 2015/2016 shared-task layout: ``parses.json`` (a single JSON object
  mapping ``DocID`` to ``{"sentences": [{"words": [[text, {offsets}], ...]}]}``,
  or one such document per line) plus ``relations.json`` (one relation per line
  with ``TokenList`` entries that are either plain document token indices or
  ``[char_begin, char_end, doc_index, sent_index, sent_token_index]`` lists);
* the canonical JSON Lines layout written by :func:`save_documents` and
  :func:`save_relations`.
"""
from __future__ import annotations

import bisect
import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)


class CorpusError(Exception):
    """Base class for corpus ingestion failures."""


class CorpusFormatError(CorpusError):
    """Malformed input file; the message names the file and line."""


class CorpusValidationError(CorpusError):
    """A relation does not fit the document it refers to."""


@dataclass(frozen=True)
class Token:
    text: str
    char_begin: int
    char_end: int
    doc_index: int

    def __post_init__(self):
        if self.char_begin >= self.char_end:
            raise ValueError(
                f"token {self.doc_index} ({self.text!r}) has empty character range "
                f"[{self.char_begin}, {self.char_end})"
            )


@dataclass(frozen=True)
class TokenSpan:
    """A set of document token indices, kept sorted. May be discontinuous."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(set(int(i) for i in self.indices))))

    @classmethod
    def of(cls, indices: Iterable[int]) -> "TokenSpan":
        return cls(tuple(indices))

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, index) -> bool:
        return index in set(self.indices)

    def __bool__(self) -> bool:
        return bool(self.indices)

    @property
    def first(self) -> int:
        return self.indices[0]

    @property
    def last(self) -> int:
        return self.indices[-1]

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)

    def is_contiguous(self) -> bool:
        return not self.indices or self.last - self.first + 1 == len(self.indices)

    def runs(self) -> list[tuple[int, int]]:
        """Maximal contiguous runs as half-open ``(start, end)`` pairs."""
        out: list[tuple[int, int]] = []
        for i in self.indices:
            if out and out[-1][1] == i:
                out[-1] = (out[-1][0], i + 1)
            else:
                out.append((i, i + 1))
        return out

    def restrict(self, lo: int, hi: int) -> "TokenSpan":
        return TokenSpan(tuple(i for i in self.indices if lo <= i < hi))


@dataclass(frozen=True)
class Document:
    doc_id: str
    tokens: tuple[Token, ...]
    paragraph_breaks: tuple[int, ...] = (0,)
    source_text: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        breaks = tuple(sorted(set(self.paragraph_breaks)))
        if self.tokens and (not breaks or breaks[0] != 0):
            breaks = (0,) + breaks
        if not self.tokens:
            breaks = ()
        object.__setattr__(self, "paragraph_breaks", breaks)
        for b in breaks:
            if not 0 <= b < len(self.tokens):
                raise ValueError(f"{self.doc_id}: paragraph break {b} is not a token index")
        prev = -1
        for rank, tok in enumerate(self.tokens):
            if tok.doc_index != rank:
                raise ValueError(f"{self.doc_id}: token at position {rank} has doc_index {tok.doc_index}")
            if tok.char_begin <= prev:
                raise ValueError(f"{self.doc_id}: tokens are not ordered by character offset at {rank}")
            prev = tok.char_begin

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]

    def paragraphs(self) -> list[tuple[int, int]]:
        """Half-open token ranges of the paragraphs, in order."""
        bounds = list(self.paragraph_breaks) + [len(self.tokens)]
        return [(bounds[i], bounds[i + 1]) for i in range(len(self.paragraph_breaks))]

    def paragraph_of(self, index: int) -> int:
        if not 0 <= index < len(self.tokens):
            raise IndexError(index)
        return bisect.bisect_right(self.paragraph_breaks, index) - 1

    def char_ranges(self, span: TokenSpan) -> list[tuple[int, int]]:
        """Character ranges covering each contiguous run of ``span``."""
        return [
            (self.tokens[start].char_begin, self.tokens[end - 1].char_end) for start, end in span.runs()
        ]

    def surface(self, span: TokenSpan) -> str:
        return " ".join(self.tokens[i].text for i in span)


@dataclass(frozen=True)
class Relation:
    relation_id: str
    doc_id: str
    connective: TokenSpan
    arg1: TokenSpan
    arg2: TokenSpan
    sense: str | None = None

    def components(self) -> tuple[TokenSpan, TokenSpan, TokenSpan]:
        return self.connective, self.arg1, self.arg2

    def all_indices(self) -> frozenset[int]:
        return self.connective.as_set() | self.arg1.as_set() | self.arg2.as_set()

    def extent(self) -> tuple[int, int]:
        """First and last token index over all three components."""
        idx = self.all_indices()
        return min(idx), max(idx)


@dataclass
class SpanStats:
    thresholds: list[int]
    counts: list[int]
    total: int
    mean_span_length: float
    rows: list[tuple[int, int, float]] = field(default_factory=list)

    def __post_init__(self):
        if not self.rows:
            self.rows = [(t, c, 100.0 * c / self.total) for t, c in zip(self.thresholds, self.counts)]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "mean_span_length": self.mean_span_length,
            "rows": [{"threshold": t, "n_relations": c, "percentage": p} for t, c, p in self.rows],
        }

    def format_table(self) -> str:
        lines = [f"{'# of annotations':>18}  {'(%)':>8}  span length"]
        for t, c, p in self.rows:
            lines.append(f"{c:>18d}  {p:>7.2f}%  < {t}")
        lines.append(f"{'average':>18}  {'':>8}  {self.mean_span_length:.2f}")
        return "\n".join(lines)


# --------------------------------------------------------------------------- tokenisation

_TOKEN_RE = re.compile(r"\w+(?:[-'.]\w+)*|[^\w\s]")


def tokenize(text: str) -> list[Token]:
    """Rule-based word tokenizer keeping character offsets."""
    return [Token(m.group(), m.start(), m.end(), i) for i, m in enumerate(_TOKEN_RE.finditer(text))]


def segment_paragraphs(source_text: str, tokens: Sequence[Token]) -> tuple[int, ...]:
    """Paragraph break indices: a new paragraph starts at any token preceded by a blank line."""
    if not tokens:
        return ()
    breaks = [0]
    for prev, tok in zip(tokens, tokens[1:]):
        gap = source_text[prev.char_end:tok.char_begin]
        if gap.count("\n") >= 2:
            breaks.append(tok.doc_index)
    return tuple(breaks)


def document_from_text(text: str, doc_id: str = "doc", tokenizer=tokenize) -> Document:
    tokens = tokenizer(text)
    return Document(doc_id, tuple(tokens), segment_paragraphs(text, tokens), text)


def validate_relation(rel: Relation, doc: Document) -> None:
    n = len(doc)
    for name, span in zip(("Connective", "Arg1", "Arg2"), rel.components()):
        if not span:
            raise CorpusValidationError(f"relation {rel.relation_id}: empty {name}")
        if span.first < 0 or span.last >= n:
            raise CorpusValidationError(
                f"relation {rel.relation_id}: {name} token index out of range for {doc.doc_id} ({n} tokens)"
            )


def is_disjoint(rel: Relation) -> bool:
    c, a1, a2 = (s.as_set() for s in rel.components())
    return not (c & a1 or c & a2 or a1 & a2)


# --------------------------------------------------------------------------- reading

def _iter_json_lines(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc


def _read_json_records(path: Path) -> Iterator[tuple[int, dict]]:
    """Records from a JSONL file, or from a single JSON object keyed by DocID."""
    with open(path, encoding="utf-8") as fh:
        head = fh.read(1 << 16)
    stripped = head.lstrip()
    if stripped.startswith("{"):
        try:
            with open(path, encoding="utf-8") as fh:
                whole = json.load(fh)
        except json.JSONDecodeError:
            whole = None
        if isinstance(whole, dict) and whole and all(
            isinstance(v, dict) and "sentences" in v for v in whole.values()
        ):
            for doc_id, payload in whole.items():
                yield 1, dict(payload, DocID=doc_id)
            return
    yield from _iter_json_lines(path)


def _document_from_record(record: dict, raw_text: str | None, where: str) -> Document:
    if "tokens" in record:  # canonical layout
        try:
            tokens = tuple(Token(t[0], int(t[1]), int(t[2]), i) for i, t in enumerate(record["tokens"]))
            doc_id = str(record["doc_id"])
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"{where}: bad canonical document record ({exc})") from exc
        text = record.get("text", raw_text or "")
        breaks = record.get("paragraph_breaks")
        if breaks is None:
            breaks = segment_paragraphs(text, tokens) if text else (0,)
        return Document(doc_id, tokens, tuple(breaks), text)
    try:
        doc_id = str(record.get("DocID") or record["doc_id"])
        words = [w for sent in record["sentences"] for w in sent["words"]]
        tokens = tuple(
            Token(w[0], int(w[1]["CharacterOffsetBegin"]), int(w[1]["CharacterOffsetEnd"]), i)
            for i, w in enumerate(words)
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"{where}: bad CoNLL document record ({exc})") from exc
    text = raw_text or ""
    breaks = segment_paragraphs(text, tokens) if text else (0,)
    return Document(doc_id, tokens, breaks, text)


def _token_indices(token_list) -> list[int]:
    out = []
    for item in token_list:
        out.append(int(item[2]) if isinstance(item, (list, tuple)) else int(item))
    return out


def _relation_from_record(record: dict, where: str) -> Relation:
    try:
        if "connective" in record:  # canonical layout
            return Relation(
                str(record["relation_id"]),
                str(record["doc_id"]),
                TokenSpan.of(record["connective"]),
                TokenSpan.of(record["arg1"]),
                TokenSpan.of(record["arg2"]),
                record.get("sense"),
            )
        sense = record.get("Sense")
        if isinstance(sense, list):
            sense = sense[0] if sense else None
        return Relation(
            str(record["ID"]),
            str(record["DocID"]),
            TokenSpan.of(_token_indices(record["Connective"]["TokenList"])),
            TokenSpan.of(_token_indices(record["Arg1"]["TokenList"])),
            TokenSpan.of(_token_indices(record["Arg2"]["TokenList"])),
            sense,
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"{where}: bad relation record ({exc})") from exc


def load_documents(path: str | os.PathLike, raw_dir: str | os.PathLike | None = None) -> list[Document]:
    path = Path(path)
    docs = []
    for lineno, record in _read_json_records(path):
        raw = None
        doc_id = record.get("DocID") or record.get("doc_id")
        if raw_dir is not None and doc_id is not None:
            raw_path = Path(raw_dir) / str(doc_id)
            if raw_path.exists():
                raw = raw_path.read_text(encoding="utf-8", errors="replace")
        docs.append(_document_from_record(record, raw, f"{path}:{lineno}"))
    return docs


def load_relations(
    path: str | os.PathLike,
    documents: Sequence[Document] | None = None,
    explicit_only: bool = True,
) -> list[Relation]:
    """Read relations; when ``documents`` is given each relation is validated against them.

    Relations whose components overlap are skipped with a warning.
    """
    path = Path(path)
    by_id = {d.doc_id: d for d in documents} if documents is not None else None
    relations = []
    seen: set[str] = set()
    for lineno, record in _iter_json_lines(path):
        if explicit_only and record.get("Type", "Explicit") != "Explicit":
            continue
        rel = _relation_from_record(record, f"{path}:{lineno}")
        if rel.relation_id in seen:
            raise CorpusValidationError(f"relation {rel.relation_id}: duplicate relation id ({path}:{lineno})")
        seen.add(rel.relation_id)
        if by_id is not None:
            doc = by_id.get(rel.doc_id)
            if doc is None:
                raise CorpusValidationError(f"relation {rel.relation_id}: unknown doc_id {rel.doc_id!r}")
            validate_relation(rel, doc)
        if not is_disjoint(rel):
            logger.warning("relation %s: overlapping components, skipped", rel.relation_id)
            continue
        relations.append(rel)
    return relations


def load_conll_corpus(
    documents_file: str | os.PathLike,
    relations_file: str | os.PathLike,
    raw_dir: str | os.PathLike | None = None,
    explicit_only: bool = True,
) -> tuple[list[Document], list[Relation]]:
    documents = load_documents(documents_file, raw_dir=raw_dir)
    return documents, load_relations(relations_file, documents, explicit_only=explicit_only)


# --------------------------------------------------------------------------- writing

def document_to_record(doc: Document) -> dict:
    return {
        "doc_id": doc.doc_id,
        "text": doc.source_text,
        "tokens": [[t.text, t.char_begin, t.char_end] for t in doc.tokens],
        "paragraph_breaks": list(doc.paragraph_breaks),
    }


def relation_to_record(rel: Relation) -> dict:
    record = {
        "relation_id": rel.relation_id,
        "doc_id": rel.doc_id,
        "connective": list(rel.connective),
        "arg1": list(rel.arg1),
        "arg2": list(rel.arg2),
    }
    if rel.sense is not None:
        record["sense"] = rel.sense
    return record


def write_jsonl(path: str | os.PathLike, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False))
            fh.write("\n")


def save_documents(path, documents: Iterable[Document]) -> None:
    write_jsonl(path, (document_to_record(d) for d in documents))


def save_relations(path, relations: Iterable[Relation]) -> None:
    write_jsonl(path, (r.to_record() if hasattr(r, "to_record") else relation_to_record(r) for r in relations))


# --------------------------------------------------------------------------- statistics

def span_length(rel: Relation) -> int:
    lo, hi = rel.extent()
    return hi - lo + 1


def compute_span_stats(
    relations: Sequence[Relation],
    documents: Sequence[Document] | None = None,
    thresholds: Sequence[int] = (25, 50, 75, 100, 250),
    length=span_length,
) -> SpanStats:
    """Histogram of relation span lengths (first to last token, inclusive).

    ``length`` may be swapped for :func:`union_length` to count only the tokens
    that belong to a component.
    """
    if not relations:
        raise ValueError("span statistics need at least one relation")
    lengths = [length(r) for r in relations]
    counts = [sum(1 for n in lengths if n < t) for t in thresholds]
    return SpanStats(list(thresholds), counts, len(lengths), sum(lengths) / len(lengths))


def union_length(rel: Relation) -> int:
    return len(rel.all_indices())


def same_paragraph_fraction(relations: Sequence[Relation], documents: Sequence[Document]) -> float:
    """Fraction of relations whose Arg1 and Arg2 tokens all sit in one paragraph."""
    if not relations:
        raise ValueError("no relations")
    by_id = {d.doc_id: d for d in documents}
    same = 0
    for rel in relations:
        doc = by_id[rel.doc_id]
        paras = {doc.paragraph_of(i) for i in (*rel.arg1, *rel.arg2)}
        same += len(paras) == 1
    return same / len(relations)
