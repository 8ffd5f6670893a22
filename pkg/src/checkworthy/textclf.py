"""Fine-tuned transformer classifier over (normalized) tweet text.

The same machinery backs the OCR branch, which feeds joined OCR strings
instead of tweet text; see :mod:`checkworthy.ocrclf`.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from . import normalize
from .corpus import Label, LabeledCorpus
from .evalkit import evaluate
from .training import TrainingError, fit_with_selection, seed_everything

logger = logging.getLogger(__name__)

METADATA_FORMAT_VERSION = 1
METADATA_FILE = "metadata.json"
WEIGHTS_DIR = "weights"

# Desk-scale encoder trained from scratch with a corpus-built word vocabulary.
TINY_ENCODER = dict(
    hidden_size=32,
    num_hidden_layers=2,
    num_attention_heads=2,
    intermediate_size=64,
    hidden_dropout_prob=0.1,
    attention_probs_dropout_prob=0.1,
)
TINY_VOCAB_LIMIT = 8000
SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


@dataclass
class TextHyperparameters:
    learning_rate: float = 4e-4
    epochs: int = 5
    batch_size: int = 24
    max_sequence_length: int = 128
    seed: int = 0
    # a Hugging Face model id / local path, or "tiny"
    encoder: str = "bert-base-uncased"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.max_sequence_length < 1:
            raise ValueError("batch_size and max_sequence_length must be positive")


@dataclass
class TrainedTextModel:
    model: torch.nn.Module
    tokenizer: object
    metadata: dict = field(default_factory=dict)

    @property
    def branch(self) -> str:
        return self.metadata.get("branch", "text")

    @property
    def dev_loss(self) -> float:
        return self.metadata["dev_loss"]

    @property
    def max_sequence_length(self) -> int:
        return self.metadata["hyperparameters"]["max_sequence_length"]

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.model.save_pretrained(directory / WEIGHTS_DIR)
        self.tokenizer.save_pretrained(directory / WEIGHTS_DIR)
        (directory / METADATA_FILE).write_text(json.dumps(self.metadata, indent=2) + "\n", encoding="utf-8")
        return directory

    @classmethod
    def load(cls, directory) -> "TrainedTextModel":
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        directory = Path(directory)
        metadata = json.loads((directory / METADATA_FILE).read_text(encoding="utf-8"))
        if metadata.get("format_version") != METADATA_FORMAT_VERSION:
            raise ValueError(f"unsupported model metadata version {metadata.get('format_version')}")
        model = AutoModelForSequenceClassification.from_pretrained(directory / WEIGHTS_DIR)
        tokenizer = AutoTokenizer.from_pretrained(directory / WEIGHTS_DIR)
        model.eval()
        return cls(model, tokenizer, metadata)


def label_index(label) -> int:
    return 1 if Label.parse(label) is Label.YES else 0


def build_tiny_tokenizer(texts, max_length: int):
    """Word-level tokenizer whose vocabulary is built from ``texts``.

    Words are ordered by descending count then alphabetically, so the vocab
    is a pure function of the input texts.
    """
    from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
    from transformers import PreTrainedTokenizerFast

    norm = normalizers.BertNormalizer(lowercase=True, strip_accents=False, clean_text=True)
    pre = pre_tokenizers.BertPreTokenizer()
    counts = Counter()
    for t in texts:
        counts.update(w for w, _ in pre.pre_tokenize_str(norm.normalize_str(t)))
    words = sorted(counts, key=lambda w: (-counts[w], w))[:TINY_VOCAB_LIMIT]
    vocab = {tok: i for i, tok in enumerate(SPECIAL_TOKENS)}
    for w in words:
        vocab.setdefault(w, len(vocab))

    tok = Tokenizer(models.WordLevel(vocab=vocab, unk_token="[UNK]"))
    tok.normalizer = norm
    tok.pre_tokenizer = pre
    tok.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]", special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])]
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]", sep_token="[SEP]", mask_token="[MASK]",
        model_max_length=max_length,
    )


def build_encoder(hp: TextHyperparameters, train_texts):
    """Return (tokenizer, model) with a fresh two-class head.  Call after seeding."""
    from transformers import (AutoModelForSequenceClassification, AutoTokenizer, BertConfig,
                              BertForSequenceClassification)

    if hp.encoder == "tiny":
        tokenizer = build_tiny_tokenizer(train_texts, hp.max_sequence_length)
        config = BertConfig(
            vocab_size=len(tokenizer),
            max_position_embeddings=hp.max_sequence_length,
            pad_token_id=tokenizer.pad_token_id,
            num_labels=2,
            **TINY_ENCODER,
        )
        return tokenizer, BertForSequenceClassification(config)
    tokenizer = AutoTokenizer.from_pretrained(hp.encoder)
    model = AutoModelForSequenceClassification.from_pretrained(hp.encoder, num_labels=2)
    return tokenizer, model


_truncation_logged = False


def _encode(tokenizer, texts, max_length):
    global _truncation_logged
    if not _truncation_logged:
        lengths = [len(ids) for ids in tokenizer(list(texts), truncation=False)["input_ids"]]
        if lengths and max(lengths) > max_length:
            logger.info("inputs longer than %d tokens are truncated", max_length)
            _truncation_logged = True
    return tokenizer(list(texts), padding=True, truncation=True, max_length=max_length, return_tensors="pt")


def _logits(model, tokenizer, texts, max_length) -> torch.Tensor:
    # one sequence per forward pass: with padded batches the float32 result for
    # a text would depend (around 1e-8) on the lengths of its batch neighbours
    model.eval()
    out = []
    with torch.no_grad():
        for text in texts:
            enc = _encode(tokenizer, [text], max_length)
            out.append(model(**enc).logits.double())
    if not out:
        return torch.zeros((0, 2), dtype=torch.float64)
    return torch.cat(out)


def predict_proba(model: TrainedTextModel, texts) -> np.ndarray:
    """p_yes for each text, computed in float64 from the two-class logits."""
    texts = list(texts)
    logits = _logits(model.model, model.tokenizer, texts, model.max_sequence_length)
    return torch.softmax(logits, dim=-1)[:, 1].numpy()


def mean_cross_entropy_from_logits(logits: torch.Tensor, gold) -> float:
    target = torch.tensor([label_index(g) for g in gold], dtype=torch.long)
    return float(F.cross_entropy(logits.double(), target, reduction="mean"))


def mean_cross_entropy(p_yes, gold, floor: float = 1e-15) -> float:
    """Mean of -ln(p_gold); probabilities are floored so the result stays finite."""
    p_yes = np.asarray(p_yes, dtype=float)
    y = np.array([label_index(g) for g in gold], dtype=float)
    if p_yes.size == 0:
        raise ValueError("cross-entropy of an empty set")
    p_gold = np.where(y == 1, p_yes, 1.0 - p_yes)
    return float(np.mean(-np.log(np.maximum(p_gold, floor))))


def _dev_scores(model, tokenizer, texts, gold, max_length):
    logits = _logits(model, tokenizer, texts, max_length)
    p = torch.softmax(logits, dim=-1)[:, 1].numpy()
    pred = [Label.YES if x >= 0.5 else Label.NO for x in p]
    report = evaluate(gold, pred)
    return report.f1, mean_cross_entropy_from_logits(logits, gold)


def fine_tune_sequence(train_texts, train_labels, dev_texts, dev_labels, hp: TextHyperparameters,
                       branch: str = "text", extra_metadata: dict | None = None) -> TrainedTextModel:
    """Fine-tune with Adam, evaluate on dev after every epoch, keep the best-F1 epoch.

    F1 ties go to the lower dev loss, then the earlier epoch.  The returned
    model carries the retained epoch's dev F1 and dev loss in its metadata,
    along with the full epoch log.
    """
    train_texts, dev_texts = list(train_texts), list(dev_texts)
    train_labels = [Label.parse(x) for x in train_labels]
    dev_labels = [Label.parse(x) for x in dev_labels]
    if not train_texts:
        raise TrainingError("empty training split")
    if len(train_texts) != len(train_labels) or len(dev_texts) != len(dev_labels):
        raise TrainingError("texts and labels differ in length")
    if len(set(dev_labels)) < 2:
        raise TrainingError("dev split contains a single class; F1-based checkpoint selection is degenerate")
    if hp.epochs < 1:
        raise TrainingError("epochs must be >= 1: no checkpoint would ever be produced")

    seed_everything(hp.seed)
    tokenizer, model = build_encoder(hp, train_texts)
    optimizer = torch.optim.Adam(model.parameters(), lr=hp.learning_rate)
    y = torch.tensor([label_index(x) for x in train_labels], dtype=torch.long)

    def step_loss(idx):
        enc = _encode(tokenizer, [train_texts[i] for i in idx], hp.max_sequence_length)
        return F.cross_entropy(model(**enc).logits, y[idx])

    sel = fit_with_selection(
        model, optimizer, len(train_texts), hp.batch_size, hp.epochs, hp.seed, step_loss,
        lambda: _dev_scores(model, tokenizer, dev_texts, dev_labels, hp.max_sequence_length),
    )
    metadata = {
        "format_version": METADATA_FORMAT_VERSION,
        "branch": branch,
        "encoder": hp.encoder,
        "tokenizer_id": hp.encoder if hp.encoder != "tiny" else "tiny-wordlevel",
        "hyperparameters": asdict(hp),
        "seed": hp.seed,
        "normalization_table_version": normalize.TABLE_VERSION,
        "selection_metric": "dev_f1",
        "best_dev_metric": sel.best_dev_f1,
        "best_epoch": sel.best_epoch,
        "dev_loss": sel.best_dev_loss,
        "epoch_log": sel.epoch_log,
    }
    metadata.update(extra_metadata or {})
    return TrainedTextModel(model, tokenizer, metadata)


def fine_tune_text(train: LabeledCorpus, dev: LabeledCorpus, hp: TextHyperparameters | None = None,
                   options: normalize.NormalizeOptions | None = None) -> TrainedTextModel:
    """Text branch: normalizes tweet texts (idempotent) and fine-tunes on them."""
    hp = hp or TextHyperparameters()
    for corpus in (train, dev):
        if not corpus.is_labeled:
            raise TrainingError(f"{corpus.split} split has unlabeled records")
    options = options or normalize.NormalizeOptions()
    train_texts = [normalize.normalize_tweet(r.text, options) for r in train]
    dev_texts = [normalize.normalize_tweet(r.text, options) for r in dev]
    return fine_tune_sequence(train_texts, train.labels, dev_texts, dev.labels, hp, branch="text",
                              extra_metadata={"normalize_options": asdict(options)})


_version_warned = False


def _check_table_version(model: TrainedTextModel):
    global _version_warned
    want = model.metadata.get("normalization_table_version")
    if model.branch == "text" and want != normalize.TABLE_VERSION and not _version_warned:
        logger.warning("model was trained with emoji table %s, current table is %s", want, normalize.TABLE_VERSION)
        _version_warned = True


def predict_text(model: TrainedTextModel, text: str) -> float:
    _check_table_version(model)
    return float(predict_proba(model, [str(text)])[0])


def predict_texts(model: TrainedTextModel, texts) -> np.ndarray:
    _check_table_version(model)
    return predict_proba(model, [str(t) for t in texts])


def validation_loss(model: TrainedTextModel, dev: LabeledCorpus, texts=None) -> float:
    """Mean two-class cross-entropy on ``dev``.

    ``texts`` overrides the model input per record (the OCR branch passes
    joined OCR strings); by default the normalized tweet texts are used.
    """
    if len(dev) == 0:
        raise ValueError("validation loss of an empty dev split")
    if not dev.is_labeled:
        raise ValueError("dev split has unlabeled records")
    if texts is None:
        opts = normalize.NormalizeOptions(**model.metadata.get("normalize_options", {}))
        texts = [normalize.normalize_tweet(r.text, opts) for r in dev]
    logits = _logits(model.model, model.tokenizer, list(texts), model.max_sequence_length)
    return mean_cross_entropy_from_logits(logits, dev.labels)
