"""Raw-image baseline: a vision transformer (or a convnet) fine-tuned on tweet images.

On the task data this branch collapses to the majority class, so it is kept
out of the default fusion.  It is still a working trainer: on data whose
classes differ visually it learns them.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .corpus import Label, LabeledCorpus, LocalImage, try_fetch_image
from .evalkit import evaluate
from .textclf import METADATA_FILE, METADATA_FORMAT_VERSION, label_index
from .training import TrainingError, fit_with_selection, seed_everything

logger = logging.getLogger(__name__)

BACKBONES = ("patch_transformer", "convnet")
DEFAULT_VIT = "google/vit-base-patch16-224-in21k"
WEIGHTS_FILE = "weights.pt"
INTERPOLATION = "bilinear"

TINY_VIT = dict(hidden_size=32, num_hidden_layers=2, num_attention_heads=2, intermediate_size=64)

# per-backbone input normalization (ViT in21k checkpoints use 0.5, torchvision uses ImageNet stats)
NORMALIZATION = {
    "patch_transformer": ((0.5, 0.5, 0.5), (0.5, 0.5, 0.5)),
    "convnet": ((0.485, 0.456, 0.406), (0.229, 0.224, 0.225)),
}


@dataclass
class ImageHyperparameters:
    learning_rate: float = 2e-4
    epochs: int = 4
    batch_size: int = 16
    backbone: str = "patch_transformer"
    seed: int = 0
    # False builds the backbone from scratch (desk-scale tests, offline use)
    pretrained: bool = True
    image_size: int = 224
    patch_size: int = 16
    model_id: str = DEFAULT_VIT

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {self.backbone!r}; choose from {BACKBONES}")


class ImageClassifier(torch.nn.Module):
    """Two-class head over either backbone; ``forward`` returns logits."""

    def __init__(self, backbone: str, net: torch.nn.Module, spec: dict):
        super().__init__()
        self.backbone = backbone
        self.net = net
        self.spec = spec

    def forward(self, pixels):
        out = self.net(pixel_values=pixels) if self.backbone == "patch_transformer" else self.net(pixels)
        return out.logits if hasattr(out, "logits") else out


def build_backbone(hp: ImageHyperparameters, spec: dict | None = None) -> ImageClassifier:
    """Construct a classifier.  With ``spec`` (from saved metadata) no weights are downloaded."""
    if hp.backbone == "patch_transformer":
        from transformers import ViTConfig, ViTForImageClassification

        if spec is not None:
            net = ViTForImageClassification(ViTConfig.from_dict(spec["vit_config"]))
        elif hp.pretrained:
            net = ViTForImageClassification.from_pretrained(hp.model_id, num_labels=2)
        else:
            config = ViTConfig(image_size=hp.image_size, patch_size=hp.patch_size, num_labels=2, **TINY_VIT)
            net = ViTForImageClassification(config)
        return ImageClassifier(hp.backbone, net, {"vit_config": net.config.to_dict()})

    from torchvision.models import EfficientNet_B0_Weights, efficientnet_b0

    if hp.pretrained and spec is None:
        net = efficientnet_b0(weights=EfficientNet_B0_Weights.IMAGENET1K_V1)
        net.classifier[-1] = torch.nn.Linear(net.classifier[-1].in_features, 2)
    else:
        net = efficientnet_b0(weights=None, num_classes=2)
    return ImageClassifier(hp.backbone, net, {"torchvision": "efficientnet_b0"})


def to_tensor(image: Image.Image, size: int, backbone: str) -> torch.Tensor:
    """RGB, resized to ``size`` x ``size`` with bilinear interpolation, normalized, CHW."""
    arr = np.asarray(image.convert("RGB").resize((size, size), Image.BILINEAR), dtype=np.float32) / 255.0
    mean, std = NORMALIZATION[backbone]
    arr = (arr - np.asarray(mean, dtype=np.float32)) / np.asarray(std, dtype=np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1).copy())


@dataclass
class TrainedImageModel:
    model: ImageClassifier
    metadata: dict = field(default_factory=dict)

    @property
    def dev_loss(self) -> float:
        return self.metadata["dev_loss"]

    def hyperparameters(self) -> ImageHyperparameters:
        return ImageHyperparameters(**self.metadata["hyperparameters"])

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        torch.save(self.model.state_dict(), directory / WEIGHTS_FILE)
        (directory / METADATA_FILE).write_text(json.dumps(self.metadata, indent=2) + "\n", encoding="utf-8")
        return directory

    @classmethod
    def load(cls, directory) -> "TrainedImageModel":
        directory = Path(directory)
        metadata = json.loads((directory / METADATA_FILE).read_text(encoding="utf-8"))
        if metadata.get("format_version") != METADATA_FORMAT_VERSION or metadata.get("branch") != "image":
            raise ValueError(f"{directory} is not an image model directory")
        hp = ImageHyperparameters(**metadata["hyperparameters"])
        model = build_backbone(hp, spec=metadata["backbone_spec"])
        model.load_state_dict(torch.load(directory / WEIGHTS_FILE, weights_only=True))
        model.eval()
        return cls(model, metadata)


def _load_images(corpus: LabeledCorpus, cache_dir):
    images, labels = [], []
    for record in corpus:
        image = try_fetch_image(record, cache_dir)
        if image is not None:
            images.append(image)
            labels.append(record.label)
    skipped = len(corpus) - len(images)
    if skipped:
        logger.warning("%s: skipped %d record(s) with unavailable images", corpus.split, skipped)
    return images, labels, skipped


def _batch(images, size, backbone):
    return torch.stack([to_tensor(im.image, size, backbone) for im in images])


def _logits(model, images, size, batch_size=32) -> torch.Tensor:
    model.eval()
    out = []
    with torch.no_grad():
        for i in range(0, len(images), batch_size):
            out.append(model(_batch(images[i:i + batch_size], size, model.backbone)).double())
    return torch.cat(out) if out else torch.zeros((0, 2), dtype=torch.float64)


def fine_tune_image(train: LabeledCorpus, dev: LabeledCorpus, hp: ImageHyperparameters | None = None,
                    cache_dir=".image_cache") -> TrainedImageModel:
    hp = hp or ImageHyperparameters()
    train_images, train_labels, train_skipped = _load_images(train, cache_dir)
    dev_images, dev_labels, dev_skipped = _load_images(dev, cache_dir)
    if not train_images:
        raise TrainingError("no training image could be fetched")
    if len(set(dev_labels)) < 2:
        raise TrainingError("dev images cover a single class; F1-based checkpoint selection is degenerate")
    if hp.epochs < 1:
        raise TrainingError("epochs must be >= 1: no checkpoint would ever be produced")

    seed_everything(hp.seed)
    model = build_backbone(hp)
    optimizer = torch.optim.Adam(model.parameters(), lr=hp.learning_rate)
    y = torch.tensor([label_index(x) for x in train_labels], dtype=torch.long)

    def step_loss(idx):
        pixels = _batch([train_images[i] for i in idx], hp.image_size, hp.backbone)
        return F.cross_entropy(model(pixels), y[idx])

    def dev_scores():
        logits = _logits(model, dev_images, hp.image_size)
        p = torch.softmax(logits, dim=-1)[:, 1].numpy()
        f1 = evaluate(dev_labels, [Label.YES if x >= 0.5 else Label.NO for x in p]).f1
        target = torch.tensor([label_index(g) for g in dev_labels])
        return f1, float(F.cross_entropy(logits, target))

    sel = fit_with_selection(model, optimizer, len(train_images), hp.batch_size, hp.epochs, hp.seed,
                             step_loss, dev_scores)
    metadata = {
        "format_version": METADATA_FORMAT_VERSION,
        "branch": "image",
        "hyperparameters": asdict(hp),
        "seed": hp.seed,
        "interpolation": INTERPOLATION,
        "backbone_spec": model.spec,
        "selection_metric": "dev_f1",
        "best_dev_metric": sel.best_dev_f1,
        "best_epoch": sel.best_epoch,
        "dev_loss": sel.best_dev_loss,
        "epoch_log": sel.epoch_log,
        "skipped_images": {"train": train_skipped, "dev": dev_skipped},
    }
    return TrainedImageModel(model, metadata)


def predict_images(model: TrainedImageModel, images) -> np.ndarray:
    hp = model.hyperparameters()
    logits = _logits(model.model, list(images), hp.image_size)
    return torch.softmax(logits, dim=-1)[:, 1].numpy()


def predict_image(model: TrainedImageModel, image: LocalImage) -> float:
    return float(predict_images(model, [image])[0])


def majority_baseline(corpus: LabeledCorpus) -> list[Label]:
    """What a collapsed classifier outputs: ``No`` for every record."""
    return [Label.NO] * len(corpus)
