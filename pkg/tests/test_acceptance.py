"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary of a pytest run and directly
when the module is executed as a script. Criteria 7-9 need the licensed PDTB
and are skipped unless the environment points at it (see README).
"""
import itertools
import os
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from disclabel.classifier import GoldTagClassifier, TransformerTokenClassifier, build_tiny_encoder, pretrain_masked_lm  # noqa: E402
from disclabel.corpus import (  # noqa: E402
    compute_span_stats,
    load_conll_corpus,
    load_relations,
    same_paragraph_fraction,
    union_length,
)
from disclabel.evaluation import (  # noqa: E402
    COMPONENTS,
    aggregate_runs,
    evaluate,
    filter_arg2_first,
    filter_discontinuous,
    subset_report,
)
from disclabel.labeling import (  # noqa: E402
    Segment,
    argument_instances,
    connective_instances,
    decode_argument_tags,
    decode_connective_tags,
    encode_argument_tags,
    encode_connective_tags,
    extract_window,
)
from disclabel.pipeline import ExplicitRelationLabeler  # noqa: E402
from disclabel.synthetic import corpus_sentences, generate_corpus  # noqa: E402

from strategies import brute_force_connectives, filler_document, oracle_tp, perturb, random_gold, random_relations  # noqa: E402

RESULTS: list[str] = []


def record(number: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def record_skip(number: int, name: str, reason: str) -> None:
    line = f"criterion {number} [SKIP] {name}: {reason}"
    RESULTS.append(line)
    print(line)
    pytest.skip(reason)


# --------------------------------------------------------------------------- 1

def _breaks_avoiding(rng, n_tokens, relations):
    inside = {i for r in relations for i in r.connective.indices[1:]}
    candidates = [i for i in range(1, n_tokens) if i not in inside]
    return (0, *sorted(rng.sample(candidates, min(len(candidates), rng.randint(0, 4)))))


def test_criterion_1_label_round_trips():
    rng = random.Random(2024)
    n_rel = conn_ok = arg_ok = discontinuous = 0
    while n_rel < 1000:
        n_tokens = rng.randint(20, 400)
        rels = random_relations(rng, n_tokens, rng.randint(1, 6))
        doc = filler_document(n_tokens, breaks=_breaks_avoiding(rng, n_tokens, rels))
        decoded = []
        for lo, hi in doc.paragraphs():
            seq = encode_connective_tags(Segment("d", lo, hi), rels)
            decoded += decode_connective_tags(seq)
        gold_conns = sorted(r.connective.indices for r in rels)
        same_conns = sorted(s.indices for s in decoded) == gold_conns
        for r in rels:
            n_rel += 1
            conn_ok += same_conns
            discontinuous += not (r.arg1.is_contiguous() and r.arg2.is_contiguous())
            window = extract_window(doc, r.connective)
            expected = (r.arg1.restrict(window.lo, window.hi), r.arg2.restrict(window.lo, window.hi))
            arg_ok += decode_argument_tags(encode_argument_tags(window, r)) == expected
    record(1, "label round-trips", conn_ok == n_rel and arg_ok == n_rel,
           f"{n_rel} relations ({discontinuous} with a discontinuous argument), connectives {conn_ok}/{n_rel}, "
           f"arguments {arg_ok}/{n_rel}")


# --------------------------------------------------------------------------- 2

def test_criterion_2_connective_decoder_exhaustive():
    checked = mismatched = 0
    for n in range(7):
        for tags in itertools.product(("NONE", "CONN", "MWCONN"), repeat=n):
            checked += 1
            got = [s.indices for s in decode_connective_tags(tags)]
            mismatched += got != brute_force_connectives(tags)
    record(2, "connective decoder vs brute-force segmenter", mismatched == 0,
           f"{checked} tag strings of length <= 6, {mismatched} mismatches")


# --------------------------------------------------------------------------- 3

def test_criterion_3_scorer_matches_exhaustive_oracle():
    rng = random.Random(77)
    started = time.time()
    disagreements = 0
    for k in range(500):
        n = rng.randint(10, 120)
        doc_id = f"doc{k}"
        gold = random_gold(rng, n, rng.randint(0, 6), doc_id=doc_id)
        pred = perturb(rng, gold, n, doc_id=doc_id)
        report = evaluate(pred, gold)
        got = {c: report.components[c].tp for c in COMPONENTS}
        disagreements += got != oracle_tp(pred, gold)
        for c in COMPONENTS:
            s = report.components[c]
            assert s.fp == len(pred) - s.tp and s.fn == len(gold) - s.tp
    elapsed = time.time() - started
    record(3, "scorer vs exhaustive assignment oracle", disagreements == 0 and elapsed < 60,
           f"500 documents, {disagreements} disagreements, {elapsed:.1f}s")


# --------------------------------------------------------------------------- 4

def test_criterion_4_scorer_identities():
    rng = random.Random(4)
    gold = random_gold(rng, 200, 6)
    perfect = evaluate(gold, gold)
    empty = evaluate([], gold)
    perfect_ok = all(f"{perfect.f1(c):.2f}" == "100.00" for c in COMPONENTS)
    empty_ok = all(empty.f1(c) == 0 for c in COMPONENTS)
    violations = 0
    for _ in range(1000):
        n = rng.randint(10, 150)
        g = random_gold(rng, n, rng.randint(1, 6))
        r = evaluate(perturb(rng, g, n), g)
        violations += r.f1("Arg1+Arg2") > min(r.f1("Arg1"), r.f1("Arg2"))
    record(4, "scorer identities", perfect_ok and empty_ok and violations == 0,
           f"pred=gold all 100.00: {perfect_ok}, empty all 0: {empty_ok}, "
           f"Arg1+Arg2 > min(Arg1, Arg2) in {violations}/1000 perturbations")


# --------------------------------------------------------------------------- 5

def _covered(doc, rel, size=100):
    """Independent window check: lo = first - size//2, hi = first + size - size//2, clipped."""
    c = rel.connective.first
    lo, hi = max(0, c - size // 2), min(len(doc), c + size - size // 2)
    return all(lo <= i < hi for i in (*rel.arg1, *rel.arg2))


def test_criterion_5_oracle_closure():
    docs, gold = generate_corpus(300, seed=11, paragraphs_per_doc=8, p_long_range=0.25, long_range_distance=60)
    labeler = ExplicitRelationLabeler(
        GoldTagClassifier("connective", connective_instances(docs, gold)).fit(),
        GoldTagClassifier("argument", argument_instances(docs, gold)).fit(),
    )
    predicted = labeler.predict(docs)
    by_id = {d.doc_id: d for d in docs}
    fitting = {(r.doc_id, r.connective, r.arg1, r.arg2) for r in gold if _covered(by_id[r.doc_id], r)}
    exact = {(p.doc_id, p.connective, p.arg1, p.arg2) for p in predicted} & {
        (r.doc_id, r.connective, r.arg1, r.arg2) for r in gold}
    report = evaluate(predicted, gold)
    ceiling = report.components["Arg1+Arg2"].tp
    ok = exact == fitting and ceiling == len(fitting) and len(fitting) < len(gold)
    record(5, "oracle-closure pipeline ceiling", ok,
           f"{len(gold)} gold, {len(fitting)} fit their window, pipeline recovers {ceiling} exactly "
           f"(Arg1+Arg2 recall {100 * report.components['Arg1+Arg2'].recall:.2f}%)")


# --------------------------------------------------------------------------- 6

SMOKE_CORPUS = dict(paragraphs_per_doc=20, sentences_per_paragraph=(2, 6))


@pytest.mark.slow
def test_criterion_6_learnability(tmp_path):
    started = time.time()
    docs, rels = generate_corpus(200, seed=1, **SMOKE_CORPUS)
    test_docs, test_rels = generate_corpus(100, seed=2, doc_prefix="heldout", **SMOKE_CORPUS)
    # unlabelled text from a separate generator seed stands in for a pretrained checkpoint
    unlabelled, _ = generate_corpus(2000, seed=99, **SMOKE_CORPUS)
    sentences = corpus_sentences(unlabelled)
    encoder = build_tiny_encoder(tmp_path / "encoder", sentences, vocab_size=1000, hidden_size=128,
                                 num_layers=2, num_heads=4, intermediate_size=256)
    pretrain_masked_lm(encoder, sentences, epochs=12, learning_rate=1e-3, batch_size=16, seed=0)
    # a tiny encoder needs a larger step size than fine-tuning a full-size one
    labeler = ExplicitRelationLabeler(
        TransformerTokenClassifier(task="connective", encoder_name=str(encoder), epochs=3,
                                   learning_rate=1e-3, batch_size=4, warmup_ratio=0.1, seed=0),
        TransformerTokenClassifier(task="argument", encoder_name=str(encoder), epochs=3,
                                   learning_rate=1e-3, batch_size=4, warmup_ratio=0.1, seed=0),
    ).fit(docs, rels)
    report = evaluate(labeler.predict(test_docs), test_rels)
    elapsed = time.time() - started
    conn_f, both_f = report.components["Conn"].f1, report.components["Arg1+Arg2"].f1
    record(6, "learnability smoke test", conn_f >= 0.95 and both_f >= 0.80 and elapsed <= 600,
           f"Conn F {conn_f:.4f} (>= 0.95), Arg1+Arg2 F {both_f:.4f} (>= 0.80), {elapsed:.0f}s (<= 600)")


# --------------------------------------------------------------------------- 7-9

TABLE_1 = [6231, 12243, 13810, 14240, 14617]


def _pdtb(split):
    root = os.environ.get(f"DISCLABEL_PDTB_{split.upper()}")
    if not root:
        return None
    root = Path(root)
    return load_conll_corpus(root / "parses.json", root / "relations.json", raw_dir=root / "raw")


def test_criterion_7_span_statistics():
    corpus = _pdtb("train")
    if corpus is None:
        record_skip(7, "span statistics on PDTB train", "set DISCLABEL_PDTB_TRAIN to a CoNLL-format PDTB train split")
    docs, rels = corpus
    extent = compute_span_stats(rels, docs)
    union = compute_span_stats(rels, docs, length=union_length)
    same = 100 * same_paragraph_fraction(rels, docs)

    def matches(stats):
        return stats.counts == TABLE_1 and f"{stats.mean_span_length:.2f}" == "36.79"

    which = "extent" if matches(extent) else "union" if matches(union) else None
    record(7, "span statistics on PDTB train", which is not None and f"{same:.2f}" == "84.94",
           f"extent {extent.counts} mean {extent.mean_span_length:.2f}; union {union.counts} "
           f"mean {union.mean_span_length:.2f}; definition reproducing the table: {which}; same paragraph {same:.2f}%")


def _prediction_runs():
    paths = os.environ.get("DISCLABEL_PDTB_PREDICTIONS")
    return [load_relations(p, explicit_only=False) for p in paths.split(os.pathsep)] if paths else None


TABLE_2 = {"Conn": (96.77, 1.0), "Arg1": (60.12, 1.5), "Arg2": (80.50, 1.5), "Arg1+Arg2": (53.28, 1.5)}


def test_criterion_8_full_pipeline():
    corpus, runs = _pdtb("test"), _prediction_runs()
    if corpus is None or runs is None:
        record_skip(8, "full pipeline on PDTB test",
                    "set DISCLABEL_PDTB_TEST and DISCLABEL_PDTB_PREDICTIONS (one predictions file per seed)")
    _, gold = corpus
    report = aggregate_runs([evaluate(p, gold) for p in runs])
    scores = {c: report.f1(c) for c in COMPONENTS}
    ok = all(abs(scores[c] - target) <= tol for c, (target, tol) in TABLE_2.items())
    record(8, "full pipeline on PDTB test", ok,
           ", ".join(f"{c} {scores[c]:.2f} (target {t} +/- {tol})" for c, (t, tol) in TABLE_2.items()))


def test_criterion_9_subsets():
    corpus, runs = _pdtb("test"), _prediction_runs()
    if corpus is None or runs is None:
        record_skip(9, "subset analyses on PDTB test",
                    "set DISCLABEL_PDTB_TEST and DISCLABEL_PDTB_PREDICTIONS (one predictions file per seed)")
    _, gold = corpus
    discontinuous, arg2_first = filter_discontinuous(gold), filter_arg2_first(gold)
    f_arg2 = aggregate_runs([subset_report(p, gold, arg2_first) for p in runs]).f1("Arg1+Arg2")
    f_disc = aggregate_runs([subset_report(p, gold, discontinuous) for p in runs]).f1("Arg1+Arg2")
    ok = len(discontinuous) == 93 and abs(f_arg2 - 75.6) <= 3 and abs(f_disc - 14.7) <= 3
    record(9, "subset analyses on PDTB test", ok,
           f"discontinuous subset {len(discontinuous)} relations (93), Arg1+Arg2 F {f_disc:.2f} (14.7 +/- 3); "
           f"arg2-first Arg1+Arg2 F {f_arg2:.2f} (75.6 +/- 3)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
