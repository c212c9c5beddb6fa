import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from strategies import make_document  # noqa: E402

from disclabel.corpus import Relation, TokenSpan  # noqa: E402

# Examples (1) and (2): one relation embedded in another, sharing a span in different roles.
WARSHAW = (
    "Although Dr. Warshaw points out that stress and anxiety have their positive uses , "
    "' stress perceived to be threatening implies a component of fear and anxiety that may "
    "contribute to burnout . ' He also noted that various work environments , such as night "
    "work , have their own stressors ."
).split()


@pytest.fixture
def warshaw():
    doc = make_document(WARSHAW, "wsj_warshaw")
    he = WARSHAW.index("He")
    also = he + 1
    end = len(WARSHAW) - 1  # final period excluded
    quote_start = WARSHAW.index("'") + 1
    quote_end = WARSHAW.index("'", quote_start)
    stress = WARSHAW.index("stress")
    uses = WARSHAW.index("uses")
    also_rel = Relation(
        "also", doc.doc_id, TokenSpan.of([also]), TokenSpan.of(range(0, quote_end)),
        TokenSpan.of([he, *range(also + 1, end)]),
    )
    although_rel = Relation(
        "although", doc.doc_id, TokenSpan.of([0]), TokenSpan.of(range(quote_start, quote_end - 1)),
        TokenSpan.of(range(stress, uses + 1)),
    )
    return doc, [also_rel, although_rel]


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    from disclabel.classifier import build_tiny_encoder
    from disclabel.synthetic import corpus_sentences, generate_corpus

    docs, _ = generate_corpus(40, seed=7)
    sentences = corpus_sentences(docs) + [WARSHAW]
    return build_tiny_encoder(tmp_path_factory.mktemp("enc"), sentences, vocab_size=300, hidden_size=32,
                              num_layers=1, num_heads=2, intermediate_size=64)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
