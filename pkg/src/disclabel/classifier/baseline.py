"""Deterministic backends that need no training.

They make the pipeline and the scorer testable without a GPU and give a floor
to compare trained models against.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator

from ..labeling import ARG_LABELS, CONN_LABELS, ArgTag, ConnTag, LABELS_BY_TASK, TagSequence
from ..validation import check_segments, check_task, check_word_sequences
from .base import TokenClassifierMixin

# Explicit connective forms annotated in the PDTB (lowercased).
DEFAULT_LEXICON = (
    "accordingly", "additionally", "after", "afterward", "also", "alternatively", "although",
    "and", "as", "as a result", "as an alternative", "as if", "as long as", "as soon as",
    "as though", "as well", "at the same time", "at that time", "because", "before",
    "before and after", "besides", "but", "by comparison", "by contrast", "by then",
    "consequently", "conversely", "earlier", "either or", "else", "except", "finally",
    "for", "for example", "for instance", "further", "furthermore", "hence", "however",
    "if", "if and when", "if then", "in addition", "in contrast", "in fact", "in other words",
    "in particular", "in short", "in sum", "in the end", "in turn", "indeed", "insofar as",
    "instead", "later", "lest", "likewise", "meantime", "meanwhile", "moreover",
    "much as", "neither nor", "nevertheless", "next", "nonetheless", "nor", "now that",
    "on the contrary", "on the one hand", "on the other hand", "once", "or", "otherwise",
    "overall", "plus", "previously", "rather", "regardless", "separately", "similarly",
    "simultaneously", "since", "so", "so that", "specifically", "still", "then",
    "thereafter", "thereby", "therefore", "though", "thus", "till", "ultimately",
    "unless", "until", "when", "when and if", "whereas", "while", "yet",
)


class LexiconConnectiveClassifier(TokenClassifierMixin, BaseEstimator):
    """Longest-match lookup of lowercased words against a connective lexicon."""

    def __init__(self, lexicon=DEFAULT_LEXICON):
        self.lexicon = lexicon

    def fit(self, X=None, y=None):
        entries = [tuple(str(e).lower().split()) for e in self.lexicon]
        entries = [e for e in entries if e]
        if not entries:
            raise ValueError("lexicon must contain at least one connective")
        self.entries_ = frozenset(entries)
        self.max_words_ = max(len(e) for e in entries)
        self.labels_ = CONN_LABELS
        return self

    def _tag(self, words: list[str]) -> list[str]:
        lowered = [w.lower() for w in words]
        tags = [ConnTag.NONE.value] * len(words)
        i = 0
        while i < len(words):
            for k in range(min(self.max_words_, len(words) - i), 0, -1):
                if tuple(lowered[i:i + k]) in self.entries_:
                    label = ConnTag.CONN if k == 1 else ConnTag.MWCONN
                    tags[i:i + k] = [label.value] * k
                    i += k
                    break
            else:
                i += 1
        return tags

    def predict(self, X, segments=None):
        self._check_fitted()
        return [self._tag(words) for words in check_word_sequences(X)]


class CenterArgumentClassifier(TokenClassifierMixin, BaseEstimator):
    """Everything left of the window anchor is Arg1, everything right of it Arg2."""

    def fit(self, X=None, y=None):
        self.labels_ = ARG_LABELS
        return self

    def predict(self, X, segments=None):
        self._check_fitted()
        X = check_word_sequences(X)
        segments = check_segments(segments, X)
        if segments is None or any(s is None or s.center is None for s in segments):
            raise ValueError("CenterArgumentClassifier needs window segments with a center")
        out = []
        for words, seg in zip(X, segments):
            c = seg.center - seg.lo
            tags = []
            for i in range(len(words)):
                if i < c:
                    tags.append(ArgTag.ARG1_B if i == 0 else ArgTag.ARG1_I)
                elif i > c:
                    tags.append(ArgTag.ARG2_B if i == c + 1 else ArgTag.ARG2_I)
                else:
                    tags.append(ArgTag.NONE)
            out.append([t.value for t in tags])
        return out


class GoldTagClassifier(TokenClassifierMixin, BaseEstimator):
    """Replays gold tag sequences looked up by segment; unknown segments get all NONE.

    Used to measure what the pipeline can recover when both classifiers are perfect.
    """

    def __init__(self, task="connective", sequences=()):
        self.task = task
        self.sequences = sequences

    def fit(self, X=None, y=None):
        self.labels_ = check_task(self.task)
        self.table_ = {}
        for seq in self.sequences:
            if not isinstance(seq, TagSequence):
                raise TypeError("sequences must be TagSequence instances")
            self.table_[seq.segment] = list(seq.tags)
        return self

    def predict(self, X, segments=None):
        self._check_fitted()
        X = check_word_sequences(X)
        segments = check_segments(segments, X)
        if segments is None:
            raise ValueError("GoldTagClassifier needs the segments being labelled")
        none = LABELS_BY_TASK[self.task][0]
        return [list(self.table_.get(seg, [none] * len(words))) for words, seg in zip(X, segments)]


def baseline_connective_classifier(lexicon=DEFAULT_LEXICON) -> LexiconConnectiveClassifier:
    return LexiconConnectiveClassifier(lexicon).fit()


def baseline_argument_classifier() -> CenterArgumentClassifier:
    return CenterArgumentClassifier().fit()
