"""Word to subtoken alignment for first-subtoken labelling."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class AlignmentMap:
    """Where each word's label lives in the subtoken sequence.

    Positions exclude any special tokens the encoder adds.
    """

    first_subtoken: tuple[int, ...]
    label_mask: tuple[bool, ...]
    subtokens: tuple[str, ...] = ()

    @property
    def n_subtokens(self) -> int:
        return len(self.label_mask)

    def word_lengths(self) -> list[int]:
        bounds = list(self.first_subtoken) + [self.n_subtokens]
        return [bounds[i + 1] - bounds[i] for i in range(len(self.first_subtoken))]


def _split(subtokenizer, word: str) -> list[str]:
    if hasattr(subtokenizer, "tokenize"):
        return list(subtokenizer.tokenize(word))
    return list(subtokenizer(word))


def align_subtokens(words, subtokenizer) -> AlignmentMap:
    """Split each word separately and record the index of its first piece.

    ``subtokenizer`` is either a callable returning the pieces of one word or an
    object with a ``tokenize`` method (any Hugging Face tokenizer).
    """
    firsts, mask, pieces = [], [], []
    for k, word in enumerate(words):
        sub = _split(subtokenizer, word)
        if not sub:
            raise ValueError(f"word {k} ({word!r}) produced no subtokens; the tokenizer needs an unknown-token fallback")
        firsts.append(len(pieces))
        mask.extend([True] + [False] * (len(sub) - 1))
        pieces.extend(sub)
    return AlignmentMap(tuple(firsts), tuple(mask), tuple(pieces))


def chunk_bounds(word_lengths, budget: int) -> list[tuple[int, int]]:
    """Split words into consecutive non-overlapping chunks of at most ``budget`` subtokens.

    A single word longer than the budget gets a chunk of its own; the caller
    truncates its trailing pieces.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    bounds = []
    start, used = 0, 0
    for i, n in enumerate(word_lengths):
        if i > start and used + n > budget:
            bounds.append((start, i))
            start, used = i, 0
        used += n
    if start < len(word_lengths):
        bounds.append((start, len(word_lengths)))
    return bounds
