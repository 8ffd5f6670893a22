"""OCR branch: read text embedded in tweet images and classify it.

Two text sources are supported.  ``engine`` runs a recognition engine over
the image (rapidocr by default); ``platform`` reuses the OCR text shipped
with the data set and never opens the image.  Either way the fragments are
joined into one string and fed to a text classifier trained exactly like
the tweet-text one, only with a smaller batch.
"""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import LabeledCorpus, LocalImage, TweetRecord, try_fetch_image
from .textclf import (TextHyperparameters, TrainedTextModel, TrainingError, fine_tune_sequence,
                      predict_proba)

logger = logging.getLogger(__name__)

SOURCES = ("engine", "platform")


class OcrEngineError(RuntimeError):
    def __init__(self, tweet_id, reason):
        self.tweet_id = tweet_id
        super().__init__(f"OCR failed for tweet {tweet_id}: {reason}")


@dataclass(frozen=True)
class OcrFragment:
    text: str
    confidence: float
    # four (x, y) corners; None for platform-provided text
    box: tuple | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("OCR fragment text must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class OcrResult:
    tweet_id: str
    fragments: tuple[OcrFragment, ...] = ()
    source: str = "engine"

    def to_json(self, engine_version: str = "") -> str:
        return json.dumps({
            "tweet_id": self.tweet_id,
            "source": self.source,
            "engine": engine_version,
            "fragments": [
                {"text": f.text, "confidence": f.confidence,
                 "box": None if f.box is None else [list(p) for p in f.box]}
                for f in self.fragments
            ],
        }, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d) -> "OcrResult":
        frags = tuple(
            OcrFragment(f["text"], f["confidence"], None if f["box"] is None else tuple(tuple(p) for p in f["box"]))
            for f in d["fragments"]
        )
        return cls(d["tweet_id"], frags, d["source"])


def reading_order(fragments) -> list[OcrFragment]:
    """Sort boxed fragments into lines top to bottom, each line left to right.

    Two boxes share a line when their vertical centres are closer than half
    the taller box height.
    """
    boxed = [f for f in fragments if f.box is not None]
    if len(boxed) != len(fragments):
        return list(fragments)

    def geom(f):
        ys = [p[1] for p in f.box]
        xs = [p[0] for p in f.box]
        return (min(ys) + max(ys)) / 2, max(ys) - min(ys), min(xs)

    items = sorted(((geom(f), f) for f in fragments), key=lambda t: (t[0][0], t[0][2]))
    lines = []
    for (cy, h, x), f in items:
        if lines:
            lcy, lh, members = lines[-1]
            if abs(cy - lcy) < 0.5 * max(h, lh):
                members.append((x, f))
                continue
        lines.append((cy, h, [(x, f)]))
    return [f for _, _, members in lines for _, f in sorted(members, key=lambda m: m[0])]


class RapidOcrEngine:
    """Recognition engine backed by rapidocr (PP-OCR models on onnxruntime).

    The engine object is not assumed thread-safe; calls are serialized.
    """

    name = "rapidocr"

    def __init__(self, min_confidence: float = 0.0):
        from importlib.metadata import version

        from rapidocr_onnxruntime import RapidOCR

        self._ocr = RapidOCR()
        self._lock = threading.Lock()
        self.min_confidence = min_confidence
        self.version = f"rapidocr_onnxruntime-{version('rapidocr_onnxruntime')}"

    def extract(self, image: LocalImage) -> list[OcrFragment]:
        arr = np.asarray(image.rgb())[:, :, ::-1].copy()  # BGR, as cv2 would load it
        try:
            with self._lock:
                raw, _ = self._ocr(arr)
        except Exception as exc:
            raise OcrEngineError(image.tweet_id, exc) from exc
        frags = []
        for box, text, score in raw or []:
            text = str(text).strip()
            score = min(max(float(score), 0.0), 1.0)
            if text and score >= self.min_confidence:
                frags.append(OcrFragment(text, score, tuple((float(x), float(y)) for x, y in box)))
        return frags


def make_engine(name: str = "rapidocr", **kwargs):
    if name == "rapidocr":
        return RapidOcrEngine(**kwargs)
    raise ValueError(f"unknown OCR engine {name!r}")


def extract_text(image: LocalImage, engine=None) -> OcrResult:
    """Run the engine over one decoded image; no text gives an empty result."""
    engine = engine or make_engine()
    return OcrResult(image.tweet_id, tuple(reading_order(engine.extract(image))), "engine")


def platform_result(record: TweetRecord) -> OcrResult:
    text = (record.platform_ocr or "").strip()
    frags = (OcrFragment(text, 1.0, None),) if text else ()
    return OcrResult(record.tweet_id, frags, "platform")


def join_fragments(result: OcrResult) -> str:
    parts = (" ".join(f.text.split()) for f in result.fragments)
    return " ".join(p for p in parts if p)


class OcrCache:
    """Append-only JSONL cache of OCR results keyed by (tweet_id, engine version)."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        d = json.loads(line)
                        self._entries[(d["tweet_id"], d["engine"])] = OcrResult.from_dict(d)

    def __len__(self):
        return len(self._entries)

    def get(self, tweet_id, engine_version) -> OcrResult | None:
        return self._entries.get((tweet_id, engine_version))

    def put(self, result: OcrResult, engine_version: str) -> None:
        with self._lock:
            key = (result.tweet_id, engine_version)
            if key in self._entries:
                return
            self._entries[key] = result
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(result.to_json(engine_version) + "\n")


@dataclass
class OcrReader:
    """Turns records into OCR results from the configured source.

    Records whose image cannot be fetched yield an empty result (logged), so
    every record gets a string and hence a probability downstream.
    """

    source: str = "platform"
    engine: object = None
    image_cache_dir: str | Path = ".image_cache"
    cache: OcrCache | None = None
    workers: int = 4
    min_confidence: float = 0.0
    missing: set = field(default_factory=set)

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown OCR source {self.source!r}; choose from {SOURCES}")
        if self.source == "engine" and self.engine is None:
            self.engine = make_engine(min_confidence=self.min_confidence)

    @property
    def engine_version(self) -> str:
        return "platform" if self.source == "platform" else self.engine.version

    def _one(self, record: TweetRecord) -> OcrResult:
        if self.source == "platform":
            return platform_result(record)
        if self.cache is not None:
            hit = self.cache.get(record.tweet_id, self.engine_version)
            if hit is not None:
                return self._filter(hit)
        image = try_fetch_image(record, self.image_cache_dir)
        if image is None:
            self.missing.add(record.tweet_id)
            return OcrResult(record.tweet_id, (), "engine")
        result = extract_text(image, self.engine)
        if self.cache is not None:
            self.cache.put(result, self.engine_version)
        return result

    def _filter(self, result: OcrResult) -> OcrResult:
        if self.min_confidence <= 0:
            return result
        kept = tuple(f for f in result.fragments if f.confidence >= self.min_confidence)
        return OcrResult(result.tweet_id, kept, result.source)

    def results(self, records) -> list[OcrResult]:
        records = list(records)
        if self.source == "platform" or self.workers <= 1:
            return [self._one(r) for r in records]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(self._one, records))

    def texts(self, records) -> list[str]:
        return [join_fragments(r) for r in self.results(records)]

    def describe(self) -> dict:
        return {"source": self.source, "engine": self.engine_version, "min_confidence": self.min_confidence}


def ocr_hyperparameters(**overrides) -> TextHyperparameters:
    """Text-branch defaults with the smaller OCR batch size."""
    return TextHyperparameters(**{"batch_size": 8, **overrides})


def fine_tune_ocr(train: LabeledCorpus, dev: LabeledCorpus, hp: TextHyperparameters | None = None,
                  reader: OcrReader | None = None) -> TrainedTextModel:
    """Fine-tune a classifier on joined OCR strings.  Empty strings stay in as examples."""
    hp = hp or ocr_hyperparameters()
    reader = reader or OcrReader(source="platform")
    for corpus in (train, dev):
        if not corpus.is_labeled:
            raise TrainingError(f"{corpus.split} split has unlabeled records")
    train_texts = reader.texts(train)
    dev_texts = reader.texts(dev)
    return fine_tune_sequence(train_texts, train.labels, dev_texts, dev.labels, hp, branch="ocr",
                              extra_metadata={"ocr": reader.describe()})


def predict_ocr(model: TrainedTextModel, result: OcrResult) -> float:
    return float(predict_proba(model, [join_fragments(result)])[0])


def predict_ocr_many(model: TrainedTextModel, results) -> np.ndarray:
    return predict_proba(model, [join_fragments(r) for r in results])


def result_as_dict(result: OcrResult) -> dict:
    return asdict(result)
