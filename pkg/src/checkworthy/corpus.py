"""Loading and validating labeled multimodal tweet splits.

Split files are line-delimited JSON, one tweet per line.  Field names vary
between task editions, so the mapping from record attributes to JSON keys
is configurable through :class:`FieldMap`.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import tempfile
import time
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image, UnidentifiedImageError

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Raised when a split file cannot be turned into a valid corpus."""


class MalformedLineError(CorpusError):
    def __init__(self, path, line_no, reason):
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{path}:{line_no}: {reason}")


class ImageFetchError(RuntimeError):
    """The image for a record could not be obtained (missing file or network)."""

    def __init__(self, tweet_id, reason):
        self.tweet_id = tweet_id
        super().__init__(f"tweet {tweet_id}: {reason}")


class ImageDecodeError(ImageFetchError):
    """The bytes for a record's image are not a decodable image."""


class Label(str, enum.Enum):
    YES = "Yes"
    NO = "No"

    @classmethod
    def parse(cls, value) -> "Label":
        if isinstance(value, Label):
            return value
        for member in cls:
            if value == member.value:
                return member
        raise ValueError(f"unknown label {value!r} (expected 'Yes' or 'No')")


class SplitName(str, enum.Enum):
    TRAIN = "train"
    DEV = "dev"
    DEV_TEST = "dev_test"
    TEST = "test"

    @classmethod
    def parse(cls, value) -> "SplitName":
        if isinstance(value, SplitName):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise ValueError(f"unknown split {value!r}") from None


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    text: str
    image_ref: str
    platform_ocr: str | None = None
    label: Label | None = None

    @property
    def image_is_remote(self) -> bool:
        return urllib.parse.urlparse(self.image_ref).scheme in ("http", "https")


@dataclass
class LabeledCorpus:
    split: SplitName | None
    records: list[TweetRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def labels(self) -> list[Label]:
        return [r.label for r in self.records]

    @property
    def is_labeled(self) -> bool:
        return all(r.label is not None for r in self.records)


@dataclass(frozen=True)
class DistributionStats:
    total: int
    yes: int
    no: int

    def __post_init__(self):
        if min(self.total, self.yes, self.no) < 0 or self.total != self.yes + self.no:
            raise ValueError(f"inconsistent distribution {self}")


# Class distribution of the official English Task 1A splits.
OFFICIAL_DISTRIBUTION = {
    SplitName.TRAIN: DistributionStats(2356, 820, 1536),
    SplitName.DEV: DistributionStats(271, 87, 184),
    SplitName.DEV_TEST: DistributionStats(548, 174, 374),
    SplitName.TEST: DistributionStats(736, 277, 459),
}


@dataclass
class FieldMap:
    """JSON keys for each record attribute.

    ``image`` lists candidate keys; the first one present and non-empty wins.
    """

    tweet_id: str = "tweet_id"
    text: str = "tweet_text"
    image: tuple[str, ...] = ("image_path", "image_url")
    ocr: str = "ocr_text"
    label: str = "class_label"

    @classmethod
    def from_dict(cls, mapping: dict | None) -> "FieldMap":
        mapping = dict(mapping or {})
        if isinstance(mapping.get("image"), str):
            mapping["image"] = (mapping["image"],)
        elif "image" in mapping:
            mapping["image"] = tuple(mapping["image"])
        return cls(**mapping)


def _parse_record(obj, fields: FieldMap, base_dir: Path) -> TweetRecord:
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    tweet_id = obj.get(fields.tweet_id)
    if tweet_id is None or str(tweet_id).strip() == "":
        raise ValueError(f"missing {fields.tweet_id!r}")
    text = obj.get(fields.text)
    if text is None:
        raise ValueError(f"missing {fields.text!r}")
    image_ref = next((obj[k] for k in fields.image if obj.get(k)), None)
    if image_ref is None:
        raise ValueError(f"no image reference in any of {list(fields.image)}")
    image_ref = str(image_ref)
    if urllib.parse.urlparse(image_ref).scheme not in ("http", "https"):
        image_ref = str((base_dir / image_ref).resolve())
    ocr = obj.get(fields.ocr)
    raw_label = obj.get(fields.label)
    label = None if raw_label in (None, "") else Label.parse(raw_label)
    return TweetRecord(
        tweet_id=str(tweet_id),
        text=str(text),
        image_ref=image_ref,
        platform_ocr=None if ocr is None else str(ocr),
        label=label,
    )


def load_split(path, split, fields: FieldMap | None = None, strict: bool = True) -> LabeledCorpus:
    """Load one split file in file order.

    In strict mode any malformed line aborts with its 1-based line number.
    With ``strict=False`` malformed lines are skipped and counted in the log.
    Duplicate ids are always an error.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"split file not found: {path}")
    fields = fields or FieldMap()
    split = None if split is None else SplitName.parse(split)
    base_dir = path.parent

    records = []
    seen = set()
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = _parse_record(json.loads(line), fields, base_dir)
            except ValueError as exc:
                # json.JSONDecodeError is a ValueError subclass
                if strict:
                    raise MalformedLineError(path, line_no, str(exc)) from exc
                skipped += 1
                continue
            if record.tweet_id in seen:
                raise MalformedLineError(path, line_no, f"duplicate tweet_id {record.tweet_id!r}")
            seen.add(record.tweet_id)
            records.append(record)
    if skipped:
        logger.warning("skipped %d malformed line(s) in %s", skipped, path)
    return LabeledCorpus(split=split, records=records)


def class_distribution(corpus: LabeledCorpus) -> DistributionStats:
    yes = no = 0
    for r in corpus.records:
        if r.label is Label.YES:
            yes += 1
        elif r.label is Label.NO:
            no += 1
        else:
            raise CorpusError(f"record {r.tweet_id} has no label")
    return DistributionStats(total=yes + no, yes=yes, no=no)


def check_official_distribution(corpus: LabeledCorpus) -> None:
    """Data-integrity gate: an official split must match the published counts."""
    expected = OFFICIAL_DISTRIBUTION[corpus.split]
    got = class_distribution(corpus)
    if got != expected:
        raise CorpusError(f"{corpus.split.value} split distribution {got} != official {expected}")


@dataclass
class LocalImage:
    """A decoded image on local disk, tagged with its tweet."""

    tweet_id: str
    path: Path
    image: Image.Image

    def rgb(self) -> Image.Image:
        return self.image.convert("RGB")


def _decode(tweet_id, path) -> Image.Image:
    try:
        with Image.open(path) as im:
            im.load()
            return im.copy()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(tweet_id, f"cannot decode image {path}: {exc}") from exc


def _cached(cache_dir: Path, tweet_id: str) -> Path | None:
    hits = sorted(p for p in cache_dir.glob(f"{tweet_id}.*") if not p.name.endswith(".part"))
    return hits[0] if hits else None


def _download(url, attempts, timeout, backoff):
    last = None
    for attempt in range(1, attempts + 1):
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                return resp.read()
        except OSError as exc:
            last = exc
            logger.debug("fetch %s failed (attempt %d/%d): %s", url, attempt, attempts, exc)
            if attempt < attempts:
                time.sleep(backoff * attempt)
    raise last


def fetch_image(record: TweetRecord, cache_dir, attempts: int = 3, timeout: float = 20.0,
                backoff: float = 0.5) -> LocalImage:
    """Return a decoded handle to the record's image.

    Local paths are used in place.  Remote images are downloaded once into
    ``cache_dir/<tweet_id>.<ext>``; later calls read the cached file.  Writes
    go to a temporary file that is renamed into place, so concurrent fetches
    of one record cannot leave a torn file behind.
    """
    if not record.image_is_remote:
        path = Path(record.image_ref)
        if not path.is_file():
            raise ImageFetchError(record.tweet_id, f"missing local image {path}")
        return LocalImage(record.tweet_id, path, _decode(record.tweet_id, path))

    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    hit = _cached(cache_dir, record.tweet_id)
    if hit is not None:
        return LocalImage(record.tweet_id, hit, _decode(record.tweet_id, hit))

    try:
        data = _download(record.image_ref, attempts, timeout, backoff)
    except OSError as exc:
        raise ImageFetchError(record.tweet_id, f"download failed after {attempts} attempts: {exc}") from exc

    ext = Path(urllib.parse.urlparse(record.image_ref).path).suffix.lower() or ".img"
    fd, tmp = tempfile.mkstemp(dir=cache_dir, prefix=f".{record.tweet_id}.", suffix=".part")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    try:
        image = _decode(record.tweet_id, tmp)
    except ImageDecodeError:
        os.unlink(tmp)
        raise
    final = cache_dir / f"{record.tweet_id}{ext}"
    os.replace(tmp, final)
    return LocalImage(record.tweet_id, final, image)


def try_fetch_image(record: TweetRecord, cache_dir, **kwargs) -> LocalImage | None:
    """Like :func:`fetch_image` but logs and returns None on failure."""
    try:
        return fetch_image(record, cache_dir, **kwargs)
    except ImageFetchError as exc:
        logger.warning("image unavailable, record flagged: %s", exc)
        return None
