"""Rule-generated corpora with known explicit relations.

Sentences are built from a handful of templates, each fixing where the
connective, Arg1 and Arg2 sit. The non-discursive ``and`` joining two noun
phrases is mixed in as a distractor, and optional long-range relations put Arg1
several sentences before the connective so that it can fall outside an
argument window.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Document, Relation, Token, TokenSpan

NOUNS = (
    "market", "company", "investor", "analyst", "bank", "trader", "manager", "board", "union",
    "economy", "court", "agency", "developer", "council", "buyer", "seller", "lender", "broker",
    "government", "factory", "airline", "retailer", "insurer", "committee",
)
VERBS = (
    "bought", "sold", "raised", "cut", "approved", "rejected", "reported", "expected", "opened",
    "closed", "delayed", "signed", "blocked", "questioned", "doubled", "reviewed", "ignored",
    "financed", "praised", "sued",
)
ADJECTIVES = ("new", "large", "small", "local", "foreign", "troubled", "profitable", "federal")
TAILS = ("last week", "in March", "on Monday", "this year", "after the vote", "by noon")

INTRA = (("because",), ("but",), ("while",), ("and",))
FRONTED = (("Although",), ("When",), ("Unless",))
INTER = (("However",), ("As", "a", "result"), ("At", "that", "time"), ("In", "addition"), ("Meanwhile",))


@dataclass
class _Builder:
    words: list
    relations: list

    def add(self, words) -> list[int]:
        start = len(self.words)
        self.words.extend(words)
        return list(range(start, len(self.words)))


def _clause(rng: random.Random) -> list[str]:
    words = ["the"]
    if rng.random() < 0.4:
        words.append(rng.choice(ADJECTIVES))
    words += [rng.choice(NOUNS), rng.choice(VERBS), "the", rng.choice(NOUNS)]
    if rng.random() < 0.5:
        words += rng.choice(TAILS).split()
    return words


def _np_and_sentence(rng: random.Random) -> list[str]:
    return ["the", rng.choice(NOUNS), "and", "the", rng.choice(NOUNS), rng.choice(VERBS),
            "the", rng.choice(NOUNS), "."]


def _cap(words: list[str]) -> list[str]:
    return [words[0].capitalize()] + words[1:] if words else words


def _sentence(rng: random.Random, b: _Builder, long_range_filler: int = 0) -> None:
    """Append one sentence (or sentence pair) and record its relation, if any."""
    kind = rng.random()
    if long_range_filler:
        a1 = b.add(_cap(_clause(rng)))
        b.add(["."])
        while long_range_filler > 0:
            n = len(b.words)
            b.add(_cap(_clause(rng)) + ["."])
            long_range_filler -= len(b.words) - n
        conn = b.add(["Meanwhile"])
        b.add([","])
        a2 = b.add(_clause(rng))
        b.add(["."])
        b.relations.append((conn, a1, a2))
    elif kind < 0.15:
        b.add(_cap(_clause(rng)) + ["."])
    elif kind < 0.3:
        b.add(_cap(_np_and_sentence(rng)))
    elif kind < 0.55:
        words = rng.choice(INTRA)
        a1 = b.add(_cap(_clause(rng)))
        if words[0] in ("but", "and"):
            b.add([","])
        conn = b.add(list(words))
        a2 = b.add(_clause(rng))
        b.add(["."])
        b.relations.append((conn, a1, a2))
    elif kind < 0.75:
        conn = b.add(list(rng.choice(FRONTED)))
        a2 = b.add(_clause(rng))
        b.add([","])
        a1 = b.add(_clause(rng))
        b.add(["."])
        b.relations.append((conn, a1, a2))
    else:
        a1 = b.add(_cap(_clause(rng)))
        b.add(["."])
        conn = b.add(list(rng.choice(INTER)))
        b.add([","])
        a2 = b.add(_clause(rng))
        b.add(["."])
        b.relations.append((conn, a1, a2))


def generate_corpus(
    n_paragraphs: int = 200,
    seed: int = 0,
    paragraphs_per_doc: int = 6,
    sentences_per_paragraph: tuple[int, int] = (2, 4),
    p_long_range: float = 0.0,
    long_range_distance: int = 60,
    doc_prefix: str = "syn",
) -> tuple[list[Document], list[Relation]]:
    """Documents and gold relations for ``n_paragraphs`` generated paragraphs.

    With probability ``p_long_range`` a paragraph ends in a relation whose Arg1
    lies about ``long_range_distance`` tokens before its connective.
    """
    rng = random.Random(seed)
    documents, relations = [], []
    para_count = 0
    d = 0
    while para_count < n_paragraphs:
        b = _Builder([], [])
        breaks = []
        for _ in range(min(paragraphs_per_doc, n_paragraphs - para_count)):
            breaks.append(len(b.words))
            for _ in range(rng.randint(*sentences_per_paragraph)):
                _sentence(rng, b)
            if rng.random() < p_long_range:
                _sentence(rng, b, long_range_filler=long_range_distance)
            para_count += 1
        doc_id = f"{doc_prefix}_{d:04d}"
        text_parts, tokens, pos = [], [], 0
        break_set = set(breaks[1:])
        for i, w in enumerate(b.words):
            sep = "" if i == 0 else ("\n\n" if i in break_set else " ")
            pos += len(sep)
            text_parts.append(sep + w)
            tokens.append(Token(w, pos, pos + len(w), i))
            pos += len(w)
        documents.append(Document(doc_id, tuple(tokens), tuple(breaks), "".join(text_parts)))
        for k, (conn, a1, a2) in enumerate(b.relations):
            relations.append(
                Relation(f"{doc_id}-r{k}", doc_id, TokenSpan.of(conn), TokenSpan.of(a1), TokenSpan.of(a2))
            )
        d += 1
    return documents, relations


def corpus_sentences(documents) -> list[list[str]]:
    """Paragraph word lists, e.g. for training a subword vocabulary."""
    return [[t.text for t in doc.tokens[lo:hi]] for doc in documents for lo, hi in doc.paragraphs()]
