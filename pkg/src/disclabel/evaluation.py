"""Exact-match scoring of predicted relations against gold, plus error analyses.

A predicted relation can only be aligned with a gold relation of the same
document whose connective has exactly the same tokens. Among such candidates
the alignment maximises, in order, full Arg1+Arg2 agreement, Arg2 agreement and
Arg1 agreement; any remaining ties are broken deterministically.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from statistics import mean, pstdev
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import Document, Relation, TokenSpan

COMPONENTS = ("Conn", "Arg1", "Arg2", "Arg1+Arg2")


class EvaluationError(ValueError):
    pass


@dataclass
class MatchResult:
    pairs: list[tuple[Relation, Relation]]
    unmatched_predicted: list[Relation]
    unmatched_gold: list[Relation]
    n_predicted: int = 0
    n_gold: int = 0

    def flags(self, pred: Relation, gold: Relation) -> dict[str, bool]:
        return component_flags(pred, gold)


def component_flags(pred: Relation, gold: Relation) -> dict[str, bool]:
    arg1 = pred.arg1 == gold.arg1
    arg2 = pred.arg2 == gold.arg2
    return {"Conn": pred.connective == gold.connective, "Arg1": arg1, "Arg2": arg2, "Arg1+Arg2": arg1 and arg2}


def _pair_weight(pred: Relation, gold: Relation, base: int) -> int:
    # base exceeds the number of pairs, so each level outweighs all lower ones combined
    f = component_flags(pred, gold)
    return base**3 + base**2 * f["Arg1+Arg2"] + base * f["Arg2"] + f["Arg1"]


def _check_ids(relations: Sequence[Relation], side: str) -> None:
    counts = Counter(r.relation_id for r in relations)
    dup = sorted(k for k, n in counts.items() if n > 1)
    if dup:
        raise EvaluationError(f"duplicate {side} relation ids: {dup[:10]}")


def match_relations(predicted: Sequence[Relation], gold: Sequence[Relation]) -> MatchResult:
    _check_ids(predicted, "predicted")
    _check_ids(gold, "gold")
    groups: dict[tuple, tuple[list, list]] = defaultdict(lambda: ([], []))
    for k, rel in enumerate(predicted):
        groups[(rel.doc_id, rel.connective)][0].append((k, rel))
    for k, rel in enumerate(gold):
        groups[(rel.doc_id, rel.connective)][1].append((k, rel))

    pairs = []
    matched_p, matched_g = set(), set()
    for preds, golds in groups.values():
        if not preds or not golds:
            continue
        if len(preds) == 1 and len(golds) == 1:
            chosen = [(0, 0)]
        else:
            base = min(len(preds), len(golds)) + 1
            w = np.array([[_pair_weight(p, g, base) for _, g in golds] for _, p in preds], dtype=np.int64)
            rows, cols = linear_sum_assignment(w, maximize=True)
            chosen = list(zip(rows, cols))
        for r, c in chosen:
            pk, p = preds[r]
            gk, g = golds[c]
            pairs.append((pk, gk, p, g))
            matched_p.add(pk)
            matched_g.add(gk)
    pairs.sort(key=lambda t: (t[1], t[0]))
    return MatchResult(
        [(p, g) for _, _, p, g in pairs],
        [r for k, r in enumerate(predicted) if k not in matched_p],
        [r for k, r in enumerate(gold) if k not in matched_g],
        len(predicted),
        len(gold),
    )


@dataclass
class ComponentScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self) -> dict:
        return {
            "precision": round(100 * self.precision, 2),
            "recall": round(100 * self.recall, 2),
            "f1": round(100 * self.f1, 2),
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


@dataclass
class ScoreReport:
    components: dict[str, ComponentScore]
    n_predicted: int = 0
    n_gold: int = 0
    runs: list["ScoreReport"] = field(default_factory=list)

    def f1(self, component: str) -> float:
        """F1 as a percentage; the mean over runs when several were scored."""
        if self.runs:
            return mean(r.f1(component) for r in self.runs)
        return 100 * self.components[component].f1

    def metric(self, component: str, name: str) -> float:
        if self.runs:
            return mean(r.metric(component, name) for r in self.runs)
        return 100 * getattr(self.components[component], name)

    def to_dict(self) -> dict:
        out = {
            "n_predicted": self.n_predicted,
            "n_gold": self.n_gold,
            "components": {c: s.to_dict() for c, s in self.components.items()},
        }
        if self.runs:
            out["runs"] = [r.to_dict() for r in self.runs]
            out["mean"] = {
                c: {m: round(self.metric(c, m), 2) for m in ("precision", "recall", "f1")} for c in COMPONENTS
            }
            out["stddev"] = {
                c: round(pstdev([r.f1(c) for r in self.runs]), 2) for c in COMPONENTS
            }
        return out

    def format_table(self, title: str | None = None) -> str:
        head = "".join(f"{c:>21}" for c in COMPONENTS)
        sub = "".join(f"{'P':>7}{'R':>7}{'F':>7}" for _ in COMPONENTS)
        row = "".join(
            f"{self.metric(c, 'precision'):>7.2f}{self.metric(c, 'recall'):>7.2f}{self.f1(c):>7.2f}"
            for c in COMPONENTS
        )
        lines = [title] if title else []
        lines += [head, sub, row]
        if self.runs:
            lines.append(f"(mean over {len(self.runs)} runs)")
        return "\n".join(lines)


def score(match: MatchResult) -> ScoreReport:
    tp = Counter()
    for pred, gold in match.pairs:
        for comp, ok in component_flags(pred, gold).items():
            tp[comp] += ok
    n_pred, n_gold = match.n_predicted, match.n_gold
    return ScoreReport(
        {c: ComponentScore(tp[c], n_pred - tp[c], n_gold - tp[c]) for c in COMPONENTS}, n_pred, n_gold
    )


def evaluate(predicted: Sequence[Relation], gold: Sequence[Relation]) -> ScoreReport:
    return score(match_relations(predicted, gold))


def aggregate_runs(reports: Sequence[ScoreReport]) -> ScoreReport:
    """Average several runs (seeds) at the level of final P/R/F."""
    if not reports:
        raise ValueError("no reports to aggregate")
    total = {c: ComponentScore(0, 0, 0) for c in COMPONENTS}
    for r in reports:
        for c in COMPONENTS:
            s = r.components[c]
            total[c] = ComponentScore(total[c].tp + s.tp, total[c].fp + s.fp, total[c].fn + s.fn)
    return ScoreReport(total, sum(r.n_predicted for r in reports), sum(r.n_gold for r in reports), list(reports))


# --------------------------------------------------------------------------- subsets

def filter_arg2_first(relations: Sequence[Relation], documents=None) -> list[Relation]:
    """Relations whose whole Arg2 precedes their whole Arg1."""
    return [r for r in relations if r.arg2 and r.arg1 and r.arg2.last < r.arg1.first]


def _longest_free_run(rel: Relation, lo: int, hi: int) -> int:
    used = rel.all_indices()
    best = run = 0
    for i in range(lo, hi):
        run = 0 if i in used else run + 1
        best = max(best, run)
    return best


def arg1_connective_gap(rel: Relation) -> tuple[int, int]:
    """Token range between the Arg1 extent and the connective (empty if they touch or interleave)."""
    a1, c = rel.arg1, rel.connective
    if a1.last < c.first:
        return a1.last + 1, c.first
    if c.last < a1.first:
        return c.last + 1, a1.first
    return 0, 0


def filter_discontinuous(relations: Sequence[Relation], documents=None, min_gap: int = 5) -> list[Relation]:
    """Relations with at least ``min_gap`` consecutive unrelated tokens between Arg1 and the connective."""
    out = []
    for rel in relations:
        lo, hi = arg1_connective_gap(rel)
        if hi - lo >= min_gap and _longest_free_run(rel, lo, hi) >= min_gap:
            out.append(rel)
    return out


def mean_extent(relations: Sequence[Relation]) -> float:
    if not relations:
        return 0.0
    return mean(r.extent()[1] - r.extent()[0] + 1 for r in relations)


def restrict_to(predicted: Sequence[Relation], gold_subset: Sequence[Relation], match: MatchResult) -> tuple[list, list]:
    """Gold subset and the predictions aligned to it, for subset scoring."""
    keep = {id(g) for g in gold_subset}
    preds = [p for p, g in match.pairs if id(g) in keep]
    return preds, list(gold_subset)


def subset_report(predicted: Sequence[Relation], gold: Sequence[Relation], gold_subset: Sequence[Relation]) -> ScoreReport:
    """Score only the gold relations of ``gold_subset`` and the predictions aligned with them.

    Predictions that align with no gold relation are not attributable to a
    subset and are left out.
    """
    match = match_relations(predicted, gold)
    preds, golds = restrict_to(predicted, gold_subset, match)
    return evaluate(preds, golds)


# --------------------------------------------------------------------------- error analysis

@dataclass
class NearMissReport:
    deltas: list[dict]
    histogram: dict[int, int]
    fraction_within: float
    within: int = 2

    def to_dict(self) -> dict:
        return {
            "n_mismatches": len(self.deltas),
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            f"fraction_symdiff_le_{self.within}": self.fraction_within,
            "side_counts": dict(Counter(d["side"] for d in self.deltas)),
        }


def boundary_delta(pred: TokenSpan, gold: TokenSpan) -> dict:
    sym = pred.as_set() ^ gold.as_set()
    if not pred or not gold:
        return {"symdiff": len(sym), "start_offset": None, "end_offset": None, "side": "empty"}
    start = pred.first - gold.first
    end = pred.last - gold.last
    if start and end:
        side = "both"
    elif start:
        side = "start"
    elif end:
        side = "end"
    else:
        side = "inside"
    return {"symdiff": len(sym), "start_offset": start, "end_offset": end, "side": side}


def near_miss_report(match: MatchResult, within: int = 2) -> NearMissReport:
    """Boundary errors of Arg1 among aligned pairs whose Arg1 differs."""
    deltas = []
    for pred, gold in match.pairs:
        if pred.arg1 != gold.arg1:
            d = boundary_delta(pred.arg1, gold.arg1)
            d["relation_id"] = gold.relation_id
            deltas.append(d)
    hist = Counter(d["symdiff"] for d in deltas)
    frac = sum(1 for d in deltas if d["symdiff"] <= within) / len(deltas) if deltas else 0.0
    return NearMissReport(deltas, dict(hist), frac, within)


@dataclass
class ConnectiveErrors:
    false_positives: list[tuple[str, int, list[str]]]
    false_negatives: list[tuple[str, int, list[str]]]

    @staticmethod
    def _rows(rows):
        total = sum(n for _, n, _ in rows)
        return [
            {"surface": s, "count": n, "share": round(100 * n / total, 2), "contexts": ctx}
            for s, n, ctx in rows
        ]

    def to_dict(self) -> dict:
        return {
            "false_positives": self._rows(self.false_positives),
            "false_negatives": self._rows(self.false_negatives),
        }


def _context(doc: Document | None, span: TokenSpan, width: int = 5) -> str:
    if doc is None:
        return ""
    lo, hi = max(0, span.first - width), min(len(doc), span.last + width + 1)
    return " ".join(f"[{t.text}]" if t.doc_index in span else t.text for t in doc.tokens[lo:hi])


def _group(relations: Sequence[Relation], by_id: dict[str, Document]):
    grouped: dict[str, list[str]] = defaultdict(list)
    for rel in relations:
        doc = by_id.get(rel.doc_id)
        surface = doc.surface(rel.connective).lower() if doc is not None else " ".join(map(str, rel.connective))
        grouped[surface].append(_context(doc, rel.connective))
    return sorted(((s, len(c), c) for s, c in grouped.items()), key=lambda t: (-t[1], t[0]))


def connective_error_report(match: MatchResult, documents: Sequence[Document] = ()) -> ConnectiveErrors:
    """Unaligned predicted (FP) and gold (FN) connectives grouped by lowercased surface form."""
    by_id = {d.doc_id: d for d in documents}
    return ConnectiveErrors(_group(match.unmatched_predicted, by_id), _group(match.unmatched_gold, by_id))
