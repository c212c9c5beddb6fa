import itertools
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disclabel.corpus import Relation, TokenSpan
from disclabel.labeling import (
    ARG_LABELS,
    CONN_LABELS,
    EncodingConflictError,
    Segment,
    TagSequence,
    argument_instances,
    connective_instances,
    decode_argument_tags,
    decode_connective_tags,
    encode_argument_tags,
    encode_connective_tags,
    extract_window,
    load_tag_sequences,
    save_tag_sequences,
)

from strategies import brute_force_connectives, filler_document, make_document, random_relations

N, C, M = "NONE", "CONN", "MWCONN"


def rel(rid, conn, a1, a2, doc="d"):
    return Relation(rid, doc, TokenSpan.of(conn), TokenSpan.of(a1), TokenSpan.of(a2))


def test_label_set_sizes():
    assert CONN_LABELS == ("NONE", "CONN", "MWCONN")
    assert ARG_LABELS == ("NONE", "ARG1-B", "ARG1-I", "ARG2-B", "ARG2-I")


class TestConnectiveEncoding:
    def test_three_single_connectives(self):
        # "and then once": each token anchors its own relation
        words = "Typically , developers option property , and then once they get approvals , they buy it".split()
        doc = make_document(words)
        rels = [rel("and", [6], [0, 1, 2, 3, 4], [7, 8]), rel("then", [7], [0, 1, 2, 3, 4], [8, 9]),
                rel("once", [8], [14, 15], [9, 10, 11])]
        seq = encode_connective_tags(Segment("d", 0, len(doc)), rels)
        assert list(seq.tags[6:9]) == [C, C, C]
        assert decode_connective_tags(seq) == [TokenSpan.of([6]), TokenSpan.of([7]), TokenSpan.of([8])]

    def test_multiword_connective(self):
        words = "Consider the experience . At that time , tasks were assigned".split()
        seq = encode_connective_tags(Segment("d", 0, len(words)), [rel("r", [4, 5, 6], [0, 1, 2], [8, 9, 10])])
        assert list(seq.tags[4:7]) == [M, M, M]
        assert decode_connective_tags(seq) == [TokenSpan.of([4, 5, 6])]

    def test_no_relations(self):
        seq = encode_connective_tags(Segment("d", 0, 5), [])
        assert seq.tags == (N,) * 5

    def test_conflict_names_both(self):
        with pytest.raises(EncodingConflictError, match="r1.*r2"):
            encode_connective_tags(Segment("d", 0, 6), [rel("r1", [1, 2], [0], [3]), rel("r2", [2], [4], [5])])

    def test_identical_connective_is_not_a_conflict(self):
        seq = encode_connective_tags(Segment("d", 0, 6), [rel("r1", [2], [0], [3]), rel("r2", [2], [4], [5])])
        assert seq.tags[2] == C

    def test_paragraph_offset(self):
        seq = encode_connective_tags(Segment("d", 10, 15), [rel("r", [12], [10], [13]), rel("x", [3], [1], [4])])
        assert seq.tags == (N, N, C, N, N)
        assert decode_connective_tags(seq) == [TokenSpan.of([12])]


class TestConnectiveDecoding:
    def test_examples(self):
        assert decode_connective_tags([N, C, C, N]) == [TokenSpan.of([1]), TokenSpan.of([2])]
        assert decode_connective_tags([N, M, M, M]) == [TokenSpan.of([1, 2, 3])]
        assert decode_connective_tags([N, N, N]) == []

    def test_conn_breaks_mwconn_run(self):
        assert decode_connective_tags([M, C, M]) == [TokenSpan.of([0]), TokenSpan.of([1]), TokenSpan.of([2])]

    def test_exhaustive_up_to_length_4(self):
        for n in range(5):
            for tags in itertools.product((N, C, M), repeat=n):
                got = [s.indices for s in decode_connective_tags(tags)]
                assert got == brute_force_connectives(tags), tags


class TestWindow:
    def test_interior(self):
        w = extract_window(filler_document(1000), TokenSpan.of([500, 501]))
        assert (w.lo, w.hi, w.center) == (450, 550, 500)

    def test_left_edge_clipped(self):
        w = extract_window(filler_document(1000), TokenSpan.of([3]))
        assert (w.lo, w.hi) == (0, 53)
        assert w.hi - w.lo <= 100 and w.lo <= w.center < w.hi

    def test_short_document(self):
        w = extract_window(filler_document(40), TokenSpan.of([20]))
        assert (w.lo, w.hi) == (0, 40)

    def test_multiword_anchored_on_first_token(self):
        w = extract_window(filler_document(1000), TokenSpan.of([600, 601, 602]))
        assert w.center == 600

    def test_empty_connective(self):
        with pytest.raises(ValueError):
            extract_window(filler_document(10), TokenSpan())

    @settings(max_examples=300)
    @given(st.integers(1, 600), st.integers(0, 599), st.integers(1, 300))
    def test_bounds(self, n, c, size):
        c = c % n
        w = extract_window(filler_document(n), TokenSpan.of([c]), size)
        assert 0 <= w.lo <= w.center < w.hi <= n
        assert w.hi - w.lo <= size
        if c - size // 2 >= 0 and c + size - size // 2 <= n:
            assert w.hi - w.lo == size


class TestArgumentTags:
    def test_arg2_interrupted_by_connective(self, warshaw):
        doc, (also_rel, _) = warshaw
        window = extract_window(doc, also_rel.connective)
        seq = encode_argument_tags(window, also_rel)
        he = also_rel.connective.first - 1
        assert seq.tags[he - window.lo] == "ARG2-B"
        assert seq.tags[he + 1 - window.lo] == "NONE"
        assert seq.tags[he + 2 - window.lo] == "ARG2-I"
        assert decode_argument_tags(seq) == (also_rel.arg1.restrict(window.lo, window.hi),
                                             also_rel.arg2.restrict(window.lo, window.hi))

    def test_contiguous_relation(self):
        r = rel("r", [5], [1, 2, 3], [6, 7])
        seq = encode_argument_tags(extract_window(filler_document(10), r.connective), r)
        assert seq.tags == (N, "ARG1-B", "ARG1-I", "ARG1-I", N, N, "ARG2-B", "ARG2-I", N, N)

    def test_arg1_left_of_window_dropped(self):
        # a 91-token relation: Arg1 at its start, connective and Arg2 at its end
        r = rel("r", [80], range(0, 20), range(81, 91))
        doc = filler_document(200)
        window = extract_window(doc, r.connective)
        assert window.lo == 30
        seq = encode_argument_tags(window, r)
        assert not any(t.startswith("ARG1") for t in seq.tags)
        assert decode_argument_tags(seq) == (TokenSpan(), r.arg2)

    def test_decode_examples(self):
        w = Segment("d", 10, 14, 12)
        assert decode_argument_tags(["ARG1-B", "ARG1-I", N, "ARG2-B"], w) == (TokenSpan.of([10, 11]), TokenSpan.of([13]))
        assert decode_argument_tags([N] * 4, w) == (TokenSpan(), TokenSpan())

    def test_decode_tolerates_stray_inside_and_multiple_begins(self):
        w = Segment("d", 0, 5, 2)
        assert decode_argument_tags(["ARG1-I", "ARG1-B", N, "ARG1-B", "ARG2-I"], w) == (
            TokenSpan.of([0, 1, 3]), TokenSpan.of([4]))

    def test_one_begin_per_argument(self):
        rng = random.Random(0)
        for k in range(200):
            doc = filler_document(rng.randint(20, 300))
            for r in random_relations(rng, len(doc), 3):
                seq = encode_argument_tags(extract_window(doc, r.connective), r)
                for x in ("ARG1", "ARG2"):
                    tags = [t for t in seq.tags if t.startswith(x)]
                    if tags:
                        assert tags[0] == f"{x}-B" and tags.count(f"{x}-B") == 1


class TestInstances:
    def test_counts(self):
        doc = filler_document(30, breaks=(0, 10, 20))
        rels = [rel("a", [2], [0], [3]), rel("b", [12], [10], [13])]
        assert len(connective_instances([doc], rels)) == 3
        assert len(argument_instances([doc], rels)) == 2

    def test_jsonl_round_trip(self, tmp_path):
        doc = filler_document(30, breaks=(0, 10))
        rels = [rel("a", [2], [0], [3])]
        seqs = connective_instances([doc], rels) + argument_instances([doc], rels)
        save_tag_sequences(tmp_path / "i.jsonl", seqs, [doc])
        loaded = load_tag_sequences(tmp_path / "i.jsonl")
        assert [s for _, s in loaded] == seqs
        assert loaded[0][0] == doc.words[0:10]
        record = json.loads((tmp_path / "i.jsonl").read_text().splitlines()[-1])
        assert set(record) == {"segment_ref", "tags", "words"}

    def test_tag_sequence_length_checked(self):
        with pytest.raises(ValueError):
            TagSequence(Segment("d", 0, 3), ("NONE",))
