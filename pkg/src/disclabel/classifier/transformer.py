"""Pretrained-encoder token classifier: an encoder with a linear layer on top.

Each word is labelled through its first subtoken; continuation subtokens and
special tokens carry the ignore index during training and are skipped at
prediction time. Sequences longer than ``max_subtoken_length`` are split at
word boundaries into non-overlapping chunks that are labelled independently.
"""
from __future__ import annotations

import json
import logging
import math
import os
import platform
import time
from collections import Counter
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from ..validation import ConfigurationError, check_tag_sequences, check_task, check_word_sequences
from .alignment import align_subtokens, chunk_bounds
from .base import DEFAULT_ENCODER, ENCODER_POSITION_LIMIT, MAX_LENGTH_BY_TASK, ClassifierConfig, TokenClassifierMixin

logger = logging.getLogger(__name__)

IGNORE_INDEX = -100
CACHE_ENV = "DISCLABEL_CACHE"
SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")

PARAMS_FILE = "classifier_config.json"
LABELS_FILE = "labels.json"
METADATA_FILE = "training_metadata.json"


def _quiet_transformers():
    import transformers

    transformers.utils.logging.set_verbosity_error()
    transformers.utils.logging.disable_progress_bar()


class TransformerTokenClassifier(TokenClassifierMixin, BaseEstimator):
    """Fine-tunes ``encoder_name`` for one labelling task.

    Parameters
    ----------
    task : {"connective", "argument"}
        Selects the label vocabulary.
    encoder_name : str
        Hugging Face model id or local directory of a pretrained encoder.
    max_subtoken_length : int, optional
        Subtokens per chunk including the two special tokens. Defaults to 400
        for connectives and 250 for arguments.
    learning_rate, adam_epsilon, weight_decay : float
        AdamW settings.
    epochs, batch_size : int
        Passes over the data and instances per update.
    warmup_ratio : float
        Fraction of steps with linear warm-up before linear decay.
    max_grad_norm : float
        Gradient clipping threshold.
    seed : int
        Seeds weight initialisation of the head and data shuffling.
    device : str, optional
        Torch device; picks CUDA when available if ``None``.
    """

    def __init__(
        self,
        task="connective",
        encoder_name=DEFAULT_ENCODER,
        max_subtoken_length=None,
        learning_rate=5e-5,
        adam_epsilon=1e-8,
        epochs=3,
        batch_size=8,
        weight_decay=0.0,
        warmup_ratio=0.0,
        max_grad_norm=1.0,
        seed=42,
        device=None,
        verbose=False,
    ):
        self.task = task
        self.encoder_name = encoder_name
        self.max_subtoken_length = max_subtoken_length
        self.learning_rate = learning_rate
        self.adam_epsilon = adam_epsilon
        self.epochs = epochs
        self.batch_size = batch_size
        self.weight_decay = weight_decay
        self.warmup_ratio = warmup_ratio
        self.max_grad_norm = max_grad_norm
        self.seed = seed
        self.device = device
        self.verbose = verbose

    @classmethod
    def from_config(cls, config: ClassifierConfig, **overrides) -> "TransformerTokenClassifier":
        params = dict(
            task=config.task,
            encoder_name=config.encoder_name,
            max_subtoken_length=config.max_subtoken_length,
            learning_rate=config.learning_rate,
            adam_epsilon=config.adam_epsilon,
            epochs=config.epochs,
            batch_size=config.batch_size,
            weight_decay=config.weight_decay,
            warmup_ratio=config.warmup_ratio,
            max_grad_norm=config.max_grad_norm,
            seed=config.seed,
        )
        params.update(overrides)
        return cls(**params)

    # ------------------------------------------------------------------ helpers

    def _max_length(self) -> int:
        n = self.max_subtoken_length or MAX_LENGTH_BY_TASK[self.task]
        if not 3 <= n <= ENCODER_POSITION_LIMIT:
            raise ConfigurationError(f"max_subtoken_length must be in [3, {ENCODER_POSITION_LIMIT}], got {n}")
        return n

    def _torch_device(self):
        import torch

        if self.device is not None:
            return torch.device(self.device)
        return torch.device("cuda" if torch.cuda.is_available() else "cpu")

    def _piece_ids(self, word: str) -> list[int]:
        ids = self._piece_cache.get(word)
        if ids is None:
            pieces = self.tokenizer_.tokenize(word)
            ids = self.tokenizer_.convert_tokens_to_ids(pieces) if pieces else [self.tokenizer_.unk_token_id]
            self._piece_cache[word] = ids
        return ids

    def _subtokenize(self, word: str) -> list[int]:
        return self._piece_ids(word)

    def segment_bounds(self, words) -> list[tuple[int, int]]:
        self._check_fitted()
        amap = align_subtokens(words, self._subtokenize)
        return chunk_bounds(amap.word_lengths(), self._max_length() - 2)

    def _encode(self, words, tags=None):
        """Encoded chunks as ``(input_ids, labels, first_positions, (start, end))`` tuples."""
        amap = align_subtokens(words, self._subtokenize)
        budget = self._max_length() - 2
        lengths = amap.word_lengths()
        label_index = {lab: k for k, lab in enumerate(self.labels_)}
        tok = self.tokenizer_
        out = []
        for start, end in chunk_bounds(lengths, budget):
            ids = [tok.cls_token_id]
            labels = [IGNORE_INDEX]
            firsts = []
            for w in range(start, end):
                pieces = self._piece_ids(words[w])[: budget - (len(ids) - 1)]
                firsts.append(len(ids))
                ids.extend(pieces)
                labels.append(label_index[tags[w]] if tags is not None else IGNORE_INDEX)
                labels.extend([IGNORE_INDEX] * (len(pieces) - 1))
            ids.append(tok.sep_token_id)
            labels.append(IGNORE_INDEX)
            out.append((ids, labels, firsts, (start, end)))
        return out

    def _collate(self, chunks):
        import torch

        width = max(len(c[0]) for c in chunks)
        pad = self.tokenizer_.pad_token_id
        ids = torch.full((len(chunks), width), pad, dtype=torch.long)
        labels = torch.full((len(chunks), width), IGNORE_INDEX, dtype=torch.long)
        mask = torch.zeros((len(chunks), width), dtype=torch.long)
        for r, (i, lab, _, _) in enumerate(chunks):
            ids[r, : len(i)] = torch.tensor(i)
            labels[r, : len(lab)] = torch.tensor(lab)
            mask[r, : len(i)] = 1
        return ids, mask, labels

    def _load_pretrained(self, source):
        from transformers import AutoModelForTokenClassification, AutoTokenizer

        _quiet_transformers()
        cache_dir = os.environ.get(CACHE_ENV)
        labels = list(self.labels_)
        self.tokenizer_ = AutoTokenizer.from_pretrained(source, cache_dir=cache_dir)
        self.model_ = AutoModelForTokenClassification.from_pretrained(
            source,
            cache_dir=cache_dir,
            num_labels=len(labels),
            id2label=dict(enumerate(labels)),
            label2id={lab: k for k, lab in enumerate(labels)},
        )
        self._piece_cache = {}

    # ------------------------------------------------------------------ estimator API

    def fit(self, X, y):
        import torch
        from transformers import get_linear_schedule_with_warmup

        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        labels = check_task(self.task)
        X = check_word_sequences(X)
        if not X:
            raise ValueError("cannot train on an empty instance list")
        y = check_tag_sequences(X, y, labels)
        self.labels_ = labels

        torch.manual_seed(self.seed)
        rng = np.random.default_rng(self.seed)
        self._load_pretrained(self.encoder_name)
        device = self._torch_device()
        model = self.model_.to(device)

        chunks = []
        n_split = 0
        for words, tags in zip(X, y):
            enc = self._encode(words, tags)
            n_split += len(enc) > 1
            chunks.extend(enc)
        if n_split:
            logger.info("%d of %d instances were split to fit %d subtokens", n_split, len(X), self._max_length())

        no_decay = ("bias", "LayerNorm.weight", "layernorm", "norm")
        groups = [
            {"params": [p for n, p in model.named_parameters() if not any(k in n for k in no_decay)],
             "weight_decay": self.weight_decay},
            {"params": [p for n, p in model.named_parameters() if any(k in n for k in no_decay)],
             "weight_decay": 0.0},
        ]
        optimizer = torch.optim.AdamW(groups, lr=self.learning_rate, eps=self.adam_epsilon)
        steps_per_epoch = math.ceil(len(chunks) / self.batch_size)
        total = steps_per_epoch * self.epochs
        scheduler = get_linear_schedule_with_warmup(optimizer, int(self.warmup_ratio * total), total)

        losses, epoch_losses = [], []
        started = time.time()
        model.train()
        for epoch in range(self.epochs):
            order = rng.permutation(len(chunks))
            running = []
            for b in range(steps_per_epoch):
                batch = [chunks[k] for k in order[b * self.batch_size:(b + 1) * self.batch_size]]
                ids, mask, lab = (t.to(device) for t in self._collate(batch))
                out = model(input_ids=ids, attention_mask=mask, labels=lab)
                out.loss.backward()
                torch.nn.utils.clip_grad_norm_(model.parameters(), self.max_grad_norm)
                optimizer.step()
                scheduler.step()
                optimizer.zero_grad()
                running.append(out.loss.item())
            losses.extend(running)
            epoch_losses.append(float(np.mean(running)))
            if self.verbose:
                logger.info("epoch %d/%d loss %.4f", epoch + 1, self.epochs, epoch_losses[-1])
        model.eval()

        params = self.get_params()
        params.pop("device"), params.pop("verbose")
        config_hash = ClassifierConfig.from_dict(
            {k: v for k, v in params.items() if k in ClassifierConfig.__dataclass_fields__}
        ).config_hash()
        self.training_metadata_ = {
            "seed": self.seed,
            "config_hash": config_hash,
            "params": params,
            "n_instances": len(X),
            "n_chunks": len(chunks),
            "n_split_instances": n_split,
            "steps": total,
            "epoch_loss": epoch_losses,
            "loss_curve": losses,
            "framework_defaults": {
                "batch_size": self.batch_size,
                "weight_decay": self.weight_decay,
                "warmup_ratio": self.warmup_ratio,
                "lr_schedule": "linear",
                "max_grad_norm": self.max_grad_norm,
                "dropout": getattr(model.config, "hidden_dropout_prob", None),
            },
            "train_seconds": round(time.time() - started, 2),
            "torch": torch.__version__,
            "python": platform.python_version(),
        }
        return self

    def predict_proba(self, X, segments=None):
        """Per-word label probabilities, one ``(n_words, n_labels)`` array per sequence."""
        import torch

        self._check_fitted()
        X = check_word_sequences(X)
        device = self._torch_device()
        self.model_.to(device)
        jobs = []
        for k, words in enumerate(X):
            for chunk in self._encode(words):
                jobs.append((k, chunk))
        out = [np.zeros((len(words), len(self.labels_)), dtype=np.float32) for words in X]
        with torch.no_grad():
            for b in range(0, len(jobs), 32):
                part = jobs[b:b + 32]
                ids, mask, _ = self._collate([c for _, c in part])
                logits = self.model_(input_ids=ids.to(device), attention_mask=mask.to(device)).logits
                probs = torch.softmax(logits.float(), dim=-1).cpu().numpy()
                for r, (k, (_, _, firsts, (start, end))) in enumerate(part):
                    out[k][start:end] = probs[r, firsts]
        return out

    def predict(self, X, segments=None):
        # np.argmax keeps the first maximum, i.e. the lowest vocabulary index on ties.
        return [[self.labels_[j] for j in np.argmax(p, axis=1)] for p in self.predict_proba(X)]

    # ------------------------------------------------------------------ persistence

    def save(self, path) -> Path:
        self._check_fitted()
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        self.model_.save_pretrained(path)
        self.tokenizer_.save_pretrained(path)
        params = self.get_params()
        params.pop("device")
        (path / PARAMS_FILE).write_text(json.dumps(params, indent=2), encoding="utf-8")
        (path / LABELS_FILE).write_text(json.dumps(list(self.labels_)), encoding="utf-8")
        (path / METADATA_FILE).write_text(json.dumps(self.training_metadata_, indent=2), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path, device=None) -> "TransformerTokenClassifier":
        path = Path(path)
        missing = [f for f in (PARAMS_FILE, LABELS_FILE, "config.json") if not (path / f).exists()]
        if missing:
            raise FileNotFoundError(
                f"{path} is not a model directory (missing {', '.join(missing)}); expected weights, "
                f"config.json, tokenizer files, {PARAMS_FILE}, {LABELS_FILE} and {METADATA_FILE}"
            )
        params = json.loads((path / PARAMS_FILE).read_text(encoding="utf-8"))
        est = cls(**params, device=device)
        est.labels_ = tuple(json.loads((path / LABELS_FILE).read_text(encoding="utf-8")))
        meta = path / METADATA_FILE
        est.training_metadata_ = json.loads(meta.read_text(encoding="utf-8")) if meta.exists() else {}
        est._load_pretrained(path)
        est.model_.eval()
        return est

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_piece_cache", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._piece_cache = {}


def build_tiny_encoder(
    out_dir,
    sentences,
    vocab_size=500,
    hidden_size=64,
    num_layers=2,
    num_heads=2,
    intermediate_size=128,
    seed=0,
) -> Path:
    """Write a randomly initialised small BERT with a word-level vocabulary drawn from ``sentences``.

    Single characters and their ``##`` continuations are always present, so
    unseen words split into pieces instead of collapsing to ``[UNK]``.

    ``sentences`` is an iterable of word lists. The result loads like any
    pretrained encoder directory, which keeps tests independent of model downloads.
    """
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    _quiet_transformers()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts = Counter(w for sent in sentences for w in sent)
    chars = sorted({c for w in counts for c in w})
    pieces = list(SPECIAL_TOKENS) + chars + [f"##{c}" for c in chars]
    # frequency then spelling: the trained WordPiece merges are not reproducible across processes
    words = [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])) if len(w) > 1]
    pieces += words[: max(0, vocab_size - len(pieces))]
    (out_dir / "vocab.txt").write_text("\n".join(pieces) + "\n", encoding="utf-8")
    # positional: the keyword is vocab_file in transformers 4 and vocab in 5
    tok = BertTokenizer(str(out_dir / "vocab.txt"), do_lower_case=False)
    tok.save_pretrained(out_dir)
    config = BertConfig(
        vocab_size=tok.vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=intermediate_size,
        max_position_embeddings=ENCODER_POSITION_LIMIT,
    )
    torch.manual_seed(seed)
    BertModel(config).save_pretrained(out_dir)
    return out_dir


def pretrain_masked_lm(
    encoder_dir,
    sentences,
    epochs=12,
    learning_rate=1e-3,
    batch_size=16,
    mlm_probability=0.15,
    warmup_ratio=0.1,
    max_length=256,
    seed=0,
) -> list[float]:
    """Masked-language-model pretraining of an encoder directory, saved in place.

    Gives a :func:`build_tiny_encoder` model the contextual representations a
    downloaded checkpoint would have. Returns the mean loss per epoch.
    """
    import torch
    from transformers import BertForMaskedLM, BertTokenizer, DataCollatorForLanguageModeling
    from transformers import get_linear_schedule_with_warmup

    _quiet_transformers()
    encoder_dir = Path(encoder_dir)
    tok = BertTokenizer.from_pretrained(encoder_dir)
    model = BertForMaskedLM.from_pretrained(encoder_dir)
    collator = DataCollatorForLanguageModeling(tok, mlm_probability=mlm_probability)
    encoded = [tok(" ".join(s), truncation=True, max_length=max_length) for s in sentences]
    if not encoded:
        raise ValueError("no sentences to pretrain on")
    torch.manual_seed(seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=learning_rate)
    steps = epochs * math.ceil(len(encoded) / batch_size)
    scheduler = get_linear_schedule_with_warmup(optimizer, int(warmup_ratio * steps), steps)
    losses = []
    model.train()
    for _ in range(epochs):
        order = torch.randperm(len(encoded)).tolist()
        running = []
        for b in range(0, len(encoded), batch_size):
            loss = model(**collator([encoded[i] for i in order[b:b + batch_size]])).loss
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), 1.0)
            optimizer.step()
            scheduler.step()
            optimizer.zero_grad()
            running.append(loss.item())
        losses.append(float(np.mean(running)))
    model.save_pretrained(encoder_dir)
    return losses
