"""Command-line workflows: prepare, train, predict, evaluate, stats.

Exit codes: 0 success, 2 usage, 3 malformed input file, 4 corpus or scoring
validation failure, 5 bad configuration or model directory, 6 missing input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
import time
from collections import Counter
from pathlib import Path

from . import __version__
from .corpus import (
    CorpusFormatError,
    CorpusValidationError,
    compute_span_stats,
    load_documents,
    load_relations,
    span_length,
    union_length,
    write_jsonl,
)
from .evaluation import (
    EvaluationError,
    aggregate_runs,
    connective_error_report,
    evaluate,
    filter_arg2_first,
    filter_discontinuous,
    match_relations,
    mean_extent,
    near_miss_report,
    subset_report,
)
from .labeling import EncodingConflictError, argument_instances, connective_instances, save_tag_sequences
from .validation import ConfigurationError

logger = logging.getLogger("disclabel")

EXIT_FORMAT, EXIT_VALIDATION, EXIT_CONFIG, EXIT_MISSING = 3, 4, 5, 6

PDTB_SPLITS = {"train": range(2, 22), "dev": range(22, 23), "test": range(23, 24)}
_WSJ_RE = re.compile(r"wsj_(\d\d)\d\d")


class ModelDirectoryError(ConfigurationError):
    pass


# --------------------------------------------------------------------------- helpers

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(path: Path, command: str, args: argparse.Namespace, inputs, outputs, started: float,
                   seeds=(), config=None) -> Path:
    inputs = [Path(p) for p in inputs if p is not None]
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": config if config is not None else {k: _jsonable(v) for k, v in vars(args).items() if k != "func"},
        "inputs": {str(p): _sha256(p) for p in inputs if p.is_file()},
        "seeds": list(seeds),
        "outputs": [str(p) for p in outputs],
        "wall_clock_seconds": round(time.time() - started, 3),
        "version": __version__,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _load_corpus(args):
    documents = load_documents(args.docs, args.raw_dir)
    relations = load_relations(args.relations, documents)
    return documents, relations


def pdtb_section(doc_id: str) -> int:
    m = _WSJ_RE.search(doc_id)
    if m is None:
        raise ConfigurationError(f"document {doc_id!r} has no wsj_SSxx id; --split pdtb cannot place it")
    return int(m.group(1))


def split_documents(documents, scheme: str) -> dict[str, list]:
    if scheme == "none":
        return {"all": list(documents)}
    out = {name: [] for name in PDTB_SPLITS}
    for doc in documents:
        section = pdtb_section(doc.doc_id)
        for name, sections in PDTB_SPLITS.items():
            if section in sections:
                out[name].append(doc)
    return out


def _load_model(path):
    from .classifier import TransformerTokenClassifier

    try:
        return TransformerTokenClassifier.load(path)
    except FileNotFoundError as exc:
        raise ModelDirectoryError(str(exc)) from exc


# --------------------------------------------------------------------------- commands

def cmd_prepare(args) -> int:
    started = time.time()
    documents, relations = _load_corpus(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = ("connective", "argument") if args.task == "both" else (args.task,)
    outputs, summary = [], {}
    for split, docs in split_documents(documents, args.split).items():
        ids = {d.doc_id for d in docs}
        rels = [r for r in relations if r.doc_id in ids]
        for task in tasks:
            if task == "connective":
                seqs = connective_instances(docs, rels)
            else:
                seqs = argument_instances(docs, rels, args.window_size)
            path = out_dir / f"{split}.{task}.jsonl"
            save_tag_sequences(path, seqs, docs)
            outputs.append(path)
            dist = Counter(t for s in seqs for t in s.tags)
            summary[f"{split}.{task}"] = {"instances": len(seqs), "labels": dict(sorted(dist.items()))}
            print(f"{split}.{task}: {len(seqs)} instances  " + "  ".join(f"{k}={v}" for k, v in sorted(dist.items())))
    write_manifest(out_dir / "manifest.json", "prepare", args, [args.docs, args.relations], outputs, started,
                   config={"task": args.task, "split": args.split, "window_size": args.window_size,
                           "summary": summary})
    return 0


def _config_from_args(args):
    from .classifier import ClassifierConfig

    data = json.loads(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
    for key in ("task", "encoder_name", "epochs", "learning_rate", "batch_size", "seed", "n_runs",
                "max_subtoken_length"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return ClassifierConfig.from_dict(data)


def cmd_config(args) -> int:
    from .classifier import ClassifierConfig

    text = json.dumps(ClassifierConfig(task=args.task).to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_train(args) -> int:
    from .classifier import TransformerTokenClassifier
    from .labeling import LABELS_BY_TASK, load_tag_sequences

    started = time.time()
    config = _config_from_args(args)
    loaded = load_tag_sequences(args.instances)
    if not loaded:
        raise ConfigurationError(f"{args.instances} holds no instances")
    if any(words is None for words, _ in loaded):
        raise ConfigurationError(f"{args.instances} lacks the words field; re-run prepare")
    vocab = set(LABELS_BY_TASK[config.task])
    stray = {t for _, s in loaded for t in s.tags} - vocab
    if stray:
        raise ConfigurationError(f"instances carry labels {sorted(stray)} outside the {config.task} vocabulary")
    X = [words for words, _ in loaded]
    y = [s for _, s in loaded]
    out_dir = Path(args.out)
    seeds = [config.seed + k for k in range(config.n_runs)]
    outputs = []
    for seed in seeds:
        clf = TransformerTokenClassifier.from_config(config, seed=seed, verbose=args.verbose).fit(X, y)
        path = clf.save(out_dir / f"seed{seed}")
        outputs.append(path)
        print(f"seed {seed}: final epoch loss {clf.training_metadata_['epoch_loss'][-1]:.4f} -> {path}")
    write_manifest(out_dir / "manifest.json", "train", args, [args.instances, args.config], outputs, started,
                   seeds=seeds, config=config.to_dict())
    return 0


def cmd_predict(args) -> int:
    from .classifier import baseline_argument_classifier, baseline_connective_classifier
    from .pipeline import ExplicitRelationLabeler, label_text

    started = time.time()
    if args.baseline:
        conn, arg = baseline_connective_classifier(), baseline_argument_classifier()
    else:
        if not (args.connective_model and args.argument_model):
            raise ConfigurationError("--connective-model and --argument-model are required unless --baseline is set")
        conn, arg = _load_model(args.connective_model), _load_model(args.argument_model)
    labeler = ExplicitRelationLabeler(conn, arg, window_size=args.window_size,
                                      drop_empty_arguments=not args.keep_empty)
    path = Path(args.input)
    if path.suffix == ".txt":
        relations = label_text(path.read_text(encoding="utf-8"), labeler, doc_id=path.stem)
    else:
        relations = labeler.predict(load_documents(path, args.raw_dir))
    out = Path(args.out)
    write_jsonl(out, (r.to_record() for r in relations))
    print(f"{len(relations)} relations -> {out}")
    write_manifest(out.with_name(out.name + ".manifest.json"), "predict", args,
                   [args.input, *(Path(p) / "model.safetensors" for p in (args.connective_model, args.argument_model) if p)],
                   [out], started)
    return 0


def _check_doc_ids(documents, gold, runs):
    known = {d.doc_id for d in documents}
    bad = sorted({r.doc_id for r in gold} - known)
    for _, rels in runs:
        bad += sorted({r.doc_id for r in rels} - known - set(bad))
    if bad:
        raise EvaluationError(f"doc_ids missing from the documents file: {', '.join(bad)}")


def cmd_evaluate(args) -> int:
    started = time.time()
    documents = load_documents(args.docs, args.raw_dir)
    runs = [(p, load_relations(p, explicit_only=False)) for p in args.pred]
    _check_doc_ids(documents, load_relations(args.gold), runs)
    gold = load_relations(args.gold, documents)

    if args.subset:
        chosen = filter_arg2_first(gold) if args.subset == "arg2-first" else filter_discontinuous(gold)
        reports = [subset_report(pred, gold, chosen) for _, pred in runs]
        title = f"{args.subset} subset: {len(chosen)} relations"
        if chosen:
            title += f", mean extent {mean_extent(chosen):.2f} tokens"
    else:
        reports = [evaluate(pred, gold) for _, pred in runs]
        title = f"all relations: {len(gold)} gold"
    report = reports[0] if len(reports) == 1 else aggregate_runs(reports)
    result = {"title": title, "gold": str(args.gold), "predictions": [str(p) for p, _ in runs], **report.to_dict()}

    if args.errors:
        result["errors"] = []
        for p, pred in runs:
            match = match_relations(pred, gold)
            result["errors"].append({
                "predictions": str(p),
                "near_miss_arg1": near_miss_report(match).to_dict(),
                "connectives": connective_error_report(match, documents).to_dict(),
            })

    table = report.format_table(title)
    print(table)
    if args.errors:
        first = result["errors"][0]
        nm = first["near_miss_arg1"]
        print(f"Arg1 boundary mismatches: {nm['n_mismatches']}, within 2 tokens: "
              f"{100 * nm['fraction_symdiff_le_2']:.2f}%")
        for kind in ("false_positives", "false_negatives"):
            rows = first["connectives"][kind][:10]
            print(f"connective {kind.replace('_', ' ')}: " + ", ".join(f"{r['surface']} {r['count']}" for r in rows))
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(result, indent=2), encoding="utf-8")
        out.with_suffix(".txt").write_text(table + "\n", encoding="utf-8")
        write_manifest(out.with_name(out.name + ".manifest.json"), "evaluate", args,
                       [args.gold, args.docs, *args.pred], [out, out.with_suffix(".txt")], started)
    return 0


def cmd_stats(args) -> int:
    from .corpus import same_paragraph_fraction

    documents, relations = _load_corpus(args)
    length = union_length if args.length == "union" else span_length
    stats = compute_span_stats(relations, documents, length=length)
    same = same_paragraph_fraction(relations, documents)
    arg2_first = len(filter_arg2_first(relations)) / len(relations)
    print(stats.format_table())
    print(f"Arg1 and Arg2 in one paragraph: {100 * same:.2f}%")
    print(f"Arg2 before Arg1: {100 * arg2_first:.2f}%")
    if args.json:
        payload = {**stats.to_dict(), "same_paragraph_pct": round(100 * same, 2),
                   "arg2_first_pct": round(100 * arg2_first, 2), "length": args.length}
        Path(args.json).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return 0


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="disclabel", description="Explicit discourse relation labelling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def corpus_args(p, relations=True):
        p.add_argument("--docs", required=True, type=Path, help="documents (JSONL or CoNLL parses.json)")
        if relations:
            p.add_argument("--relations", required=True, type=Path)
        p.add_argument("--raw-dir", type=Path, help="directory of raw text files named by doc id")

    p = sub.add_parser("prepare", help="write tagged training instances")
    corpus_args(p)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--task", choices=("connective", "argument", "both"), default="both")
    p.add_argument("--split", choices=("none", "pdtb"), default="none",
                   help="pdtb: WSJ sections 2-21 train, 22 dev, 23 test")
    p.add_argument("--window-size", type=int, default=100)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("config", help="print the default training config")
    p.add_argument("--task", choices=("connective", "argument"), default="connective")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("train", help="fine-tune one classifier per seed")
    p.add_argument("--instances", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--task", choices=("connective", "argument"))
    p.add_argument("--encoder", dest="encoder_name")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--max-subtoken-length", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", dest="n_runs", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label raw text (.txt) or tokenised documents")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--raw-dir", type=Path)
    p.add_argument("--connective-model", type=Path)
    p.add_argument("--argument-model", type=Path)
    p.add_argument("--baseline", action="store_true", help="lexicon connectives and positional arguments")
    p.add_argument("--window-size", type=int, default=100)
    p.add_argument("--keep-empty", action="store_true", help="keep relations with an empty argument")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="exact-match scores; several prediction files are averaged")
    p.add_argument("--gold", required=True, type=Path)
    p.add_argument("--docs", required=True, type=Path)
    p.add_argument("--raw-dir", type=Path)
    p.add_argument("--pred", required=True, type=Path, nargs="+")
    p.add_argument("--subset", choices=("arg2-first", "discontinuous"))
    p.add_argument("--errors", action="store_true", help="add near-miss and connective error analyses")
    p.add_argument("--out", type=Path, help="JSON report path; the table goes next to it as .txt")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="span-length histogram and argument placement")
    corpus_args(p)
    p.add_argument("--length", choices=("extent", "union"), default="extent")
    p.add_argument("--json", type=Path)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CorpusFormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (CorpusValidationError, EncodingConflictError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
