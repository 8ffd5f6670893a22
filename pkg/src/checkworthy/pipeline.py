"""End-to-end orchestration driven by one YAML configuration file.

Every function here writes a snapshot of the configuration it ran with next
to its outputs.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import fuse, normalize
from .corpus import FieldMap, LabeledCorpus, SplitName, check_official_distribution, load_split, try_fetch_image
from .evalkit import MetricReport, ReportTable, evaluate, write_submission
from .imageclf import ImageHyperparameters, TrainedImageModel, fine_tune_image, predict_images
from .ocrclf import OcrCache, OcrReader, fine_tune_ocr
from .textclf import METADATA_FILE, TextHyperparameters, TrainedTextModel, fine_tune_text, predict_texts

logger = logging.getLogger(__name__)

BRANCHES = ("text", "ocr", "image")
SNAPSHOT_FILE = "config.snapshot.yaml"


class ConfigError(ValueError):
    """The configuration or the command-line request is invalid."""


@dataclass
class PipelineConfig:
    data: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)
    lenient: bool = False
    check_official: bool = False
    normalize: dict = field(default_factory=dict)
    text: dict = field(default_factory=dict)
    ocr: dict = field(default_factory=dict)
    image: dict = field(default_factory=dict)
    fusion: dict = field(default_factory=lambda: {"members": ["text", "ocr"], "rule": "inverse_loss"})
    threshold: float = fuse.DEFAULT_THRESHOLD
    seed: int = 0
    output_dir: str = "runs/default"
    image_cache_dir: str | None = None
    run_id: str = "run1"
    base_dir: str = "."

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        raw.setdefault("base_dir", str(path.resolve().parent))
        raw.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        return cls(**raw)

    def path(self, value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @property
    def out(self) -> Path:
        return self.path(self.output_dir)

    @property
    def cache_dir(self) -> Path:
        return self.path(self.image_cache_dir) if self.image_cache_dir else self.out / "image_cache"

    def validate(self, splits=()):
        for name, value in self.data.items():
            SplitName.parse(name)
            if not self.path(value).is_file():
                raise ConfigError(f"data path for split {name!r} does not exist: {self.path(value)}")
        for s in splits:
            if SplitName.parse(s).value not in self.data:
                raise ConfigError(f"no data path configured for split {SplitName.parse(s).value!r}")
        if self.ocr.get("source", "engine") not in ("engine", "platform"):
            raise ConfigError(f"ocr.source must be 'engine' or 'platform', got {self.ocr.get('source')!r}")
        if self.fusion.get("rule", "inverse_loss") not in fuse.RULES:
            raise ConfigError(f"fusion.rule must be one of {fuse.RULES}")
        if not 0.0 <= float(self.threshold) <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")
        for b in self.fusion.get("members", []):
            if b not in BRANCHES:
                raise ConfigError(f"unknown fusion member {b!r}")
        try:
            self.text_hp(), self.ocr_hp(), self.image_hp()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad hyperparameters: {exc}") from exc
        return self

    def snapshot(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / SNAPSHOT_FILE
        target.write_text(yaml.safe_dump(dataclasses.asdict(self), sort_keys=True), encoding="utf-8")
        return target

    # ---- derived settings

    def field_map(self) -> FieldMap:
        return FieldMap.from_dict(self.fields)

    def normalize_options(self) -> normalize.NormalizeOptions:
        return normalize.NormalizeOptions(**self.normalize)

    def text_hp(self) -> TextHyperparameters:
        return TextHyperparameters(**{**self.text, "seed": self.seed})

    def ocr_hp(self) -> TextHyperparameters:
        hp = {"batch_size": 8, **self.ocr.get("hyperparameters", {}), "seed": self.seed}
        return TextHyperparameters(**hp)

    def image_hp(self) -> ImageHyperparameters:
        return ImageHyperparameters(**{k: v for k, v in self.image.items() if k != "fallback_p_yes"}, seed=self.seed)

    def ocr_reader(self) -> OcrReader:
        source = self.ocr.get("source", "engine")
        cache = None
        if source == "engine":
            cache = OcrCache(self.path(self.ocr.get("cache", self.out / "ocr_cache.jsonl")))
        return OcrReader(
            source=source,
            image_cache_dir=self.cache_dir,
            cache=cache,
            workers=int(self.ocr.get("workers", 4)),
            min_confidence=float(self.ocr.get("min_confidence", 0.0)),
        )

    def load(self, split) -> LabeledCorpus:
        split = SplitName.parse(split)
        if split.value not in self.data:
            raise ConfigError(f"no data path configured for split {split.value!r}")
        corpus = load_split(self.path(self.data[split.value]), split, self.field_map(), strict=not self.lenient)
        if self.check_official:
            check_official_distribution(corpus)
        return corpus


def load_model(directory):
    directory = Path(directory)
    meta_path = directory / METADATA_FILE
    if not meta_path.is_file():
        raise ConfigError(f"not a model directory: {directory}")
    branch = json.loads(meta_path.read_text(encoding="utf-8")).get("branch")
    if branch == "image":
        return TrainedImageModel.load(directory)
    return TrainedTextModel.load(directory)


def model_branch(model) -> str:
    return model.metadata.get("branch", "text")


# ---- train


def train(cfg: PipelineConfig, branch: str, out_dir=None) -> tuple[Path, object]:
    if branch not in BRANCHES:
        raise ConfigError(f"unknown branch {branch!r}; choose from {BRANCHES}")
    cfg.validate(splits=("train", "dev"))
    train_c, dev_c = cfg.load("train"), cfg.load("dev")
    if branch == "text":
        model = fine_tune_text(train_c, dev_c, cfg.text_hp(), cfg.normalize_options())
    elif branch == "ocr":
        model = fine_tune_ocr(train_c, dev_c, cfg.ocr_hp(), cfg.ocr_reader())
    else:
        model = fine_tune_image(train_c, dev_c, cfg.image_hp(), cache_dir=cfg.cache_dir)
    out_dir = Path(out_dir) if out_dir else cfg.out / "models" / branch
    model.save(out_dir)
    cfg.snapshot(out_dir)
    return out_dir, model


# ---- predict / evaluate


def branch_probabilities(model, corpus: LabeledCorpus, cfg: PipelineConfig, reader: OcrReader | None = None):
    """p_yes for every record in ``corpus`` from one trained branch.

    Records without a usable image still get a value: the OCR branch reads an
    empty string, the image branch emits ``image.fallback_p_yes``.
    """
    branch = model_branch(model)
    if branch == "text":
        opts = normalize.NormalizeOptions(**model.metadata.get("normalize_options", {}))
        return list(predict_texts(model, [normalize.normalize_tweet(r.text, opts) for r in corpus]))
    if branch == "ocr":
        reader = reader or cfg.ocr_reader()
        return list(predict_texts(model, reader.texts(corpus)))
    fallback = float(cfg.image.get("fallback_p_yes", 0.5))
    images = [try_fetch_image(r, cfg.cache_dir) for r in corpus]
    present = [im for im in images if im is not None]
    probs = iter(predict_images(model, present)) if present else iter(())
    return [float(next(probs)) if im is not None else fallback for im in images]


@dataclass
class FusedRun:
    tweet_ids: list
    member_ids: list
    member_probs: dict
    weights: fuse.WeightVector | None
    losses: list
    fused: list


def run_models(cfg: PipelineConfig, model_dirs, corpus: LabeledCorpus) -> FusedRun:
    if not model_dirs:
        raise ConfigError("no models given")
    models = [load_model(d) for d in model_dirs]
    ids = [Path(d).name for d in model_dirs]
    if len(set(ids)) != len(ids):
        ids = [str(d) for d in model_dirs]
    reader = cfg.ocr_reader() if any(model_branch(m) == "ocr" for m in models) else None
    member_probs = {mid: branch_probabilities(m, corpus, cfg, reader) for mid, m in zip(ids, models)}
    if reader is not None and reader.missing:
        logger.warning("%d record(s) had no fetchable image; OCR used an empty string for them", len(reader.missing))
    losses = [float(m.dev_loss) for m in models]
    weights = fuse.compute_weights(losses, rule=cfg.fusion.get("rule", "inverse_loss"), classifier_ids=ids)
    tweet_ids = [r.tweet_id for r in corpus]
    fused = fuse.fuse_records(tweet_ids, member_probs, weights, float(cfg.threshold))
    return FusedRun(tweet_ids, ids, member_probs, weights, losses, fused)


def _write_manifest(cfg, run: FusedRun, directory, extra=None):
    return fuse.write_manifest(Path(directory) / "fusion_manifest.json", run.member_ids, run.losses, run.weights,
                               float(cfg.threshold), rule=cfg.fusion.get("rule", "inverse_loss"), extra=extra)


def evaluate_models(cfg: PipelineConfig, model_dirs, split, out_dir=None) -> tuple[ReportTable, Path]:
    split = SplitName.parse(split)
    cfg.validate(splits=(split,))
    corpus = cfg.load(split)
    if not corpus.is_labeled:
        raise ConfigError(f"split {split.value} has unlabeled records; cannot evaluate")
    if len(corpus) == 0:
        raise ConfigError(f"split {split.value} is empty")
    run = run_models(cfg, model_dirs, corpus)
    gold = corpus.labels
    table = ReportTable()
    threshold = float(cfg.threshold)
    for mid in run.member_ids:
        pred = [fuse.decide(p, threshold) for p in run.member_probs[mid]]
        table.add(evaluate(gold, pred, split=split, model_id=mid))
    out_dir = Path(out_dir) if out_dir else cfg.out / "eval" / split.value
    if len(run.member_ids) > 1:
        fused_id = " + ".join(run.member_ids)
        fused_report = evaluate(gold, [f.label for f in run.fused], split=split, model_id=fused_id)
        table.add(fused_report)
        _write_manifest(cfg, run, out_dir, extra={"split": split.value})
        singles = [table.cells[(m, split)].f1 for m in run.member_ids]
        verdict = "above or equal to" if fused_report.f1 >= max(singles) else "below"
        table.notes.append(f"fused F1 on {split.value} is {verdict} the best single branch "
                           f"({fused_report.f1:.4f} vs {max(singles):.4f})")
        table.notes.append("fusion weights: " + ", ".join(f"{m}={w:.4f}" for m, w in zip(run.member_ids, run.weights)))
    table.write(out_dir)
    cfg.snapshot(out_dir)
    return table, out_dir


def predict(cfg: PipelineConfig, model_dirs, input_path, out_path=None, run_id=None) -> Path:
    cfg.validate()
    input_path = cfg.path(input_path)
    if not input_path.is_file():
        raise ConfigError(f"input file not found: {input_path}")
    corpus = load_split(input_path, None, cfg.field_map(), strict=not cfg.lenient)
    if len(corpus) == 0:
        raise ConfigError(f"{input_path} has no records; refusing to write an empty submission")
    run = run_models(cfg, model_dirs, corpus)
    out_path = Path(out_path) if out_path else cfg.out / "predict" / "submission.tsv"
    write_submission([(f.tweet_id, f.label) for f in run.fused], run_id or cfg.run_id, out_path)
    _write_manifest(cfg, run, out_path.parent, extra={"input": str(input_path)})
    cfg.snapshot(out_path.parent)
    return out_path


def build_ocr_cache(cfg: PipelineConfig, split) -> tuple[int, Path]:
    cfg.validate(splits=(split,))
    if cfg.ocr.get("source", "engine") != "engine":
        raise ConfigError("ocr-cache needs ocr.source = engine")
    reader = cfg.ocr_reader()
    reader.results(cfg.load(split))
    return len(reader.cache), reader.cache.path


def merge_reports(paths) -> ReportTable:
    merged = ReportTable()
    for p in paths:
        table = ReportTable.from_dict(json.loads(Path(p).read_text(encoding="utf-8")))
        for cell in table.cells.values():
            merged.add(cell)
        merged.notes.extend(table.notes)
    return merged


def metric_report_line(report: MetricReport) -> str:
    return (f"{report.model_id} [{report.split.value}] A={report.accuracy:.4f} P={report.precision:.4f} "
            f"R={report.recall:.4f} F1={report.f1:.4f}")


def dump_config(cfg: PipelineConfig) -> dict:
    return copy.deepcopy(dataclasses.asdict(cfg))
