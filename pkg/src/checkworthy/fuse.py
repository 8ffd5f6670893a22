"""Late fusion of per-modality probabilities weighted by dev-set loss."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Label

EPS = 1e-8
DEFAULT_THRESHOLD = 0.5
RULES = ("inverse_loss", "softmax_neg_loss")


@dataclass(frozen=True)
class WeightVector:
    weights: tuple[float, ...]
    classifier_ids: tuple[str, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.size == 0 or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must be positive and sum to 1, got {self.weights}")
        if self.classifier_ids and len(self.classifier_ids) != len(self.weights):
            raise ValueError("one classifier id per weight")

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)


@dataclass(frozen=True)
class FusedPrediction:
    tweet_id: str
    p_yes: float
    label: Label
    contributions: tuple[tuple[str, float, float], ...] = field(default_factory=tuple)


def _check_losses(losses):
    losses = [float(x) for x in losses]
    if not losses:
        raise ValueError("need at least one loss")
    if not all(math.isfinite(x) for x in losses):
        raise ValueError(f"non-finite loss in {losses}")
    if any(x < 0 for x in losses):
        raise ValueError(f"negative loss in {losses}")
    return losses


def compute_weights(losses, rule: str = "inverse_loss", classifier_ids=()) -> WeightVector:
    """Turn dev losses into fusion weights; lower loss gives a larger weight.

    ``inverse_loss``:  w_i = (1 / max(l_i, eps)) / sum_j (1 / max(l_j, eps))
    ``softmax_neg_loss``:  w_i = exp(-l_i) / sum_j exp(-l_j)
    """
    losses = _check_losses(losses)
    if rule == "inverse_loss":
        inv = [1.0 / max(x, EPS) for x in losses]
        total = math.fsum(inv)
        weights = [x / total for x in inv]
    elif rule == "softmax_neg_loss":
        m = min(losses)
        ex = [math.exp(m - x) for x in losses]
        total = math.fsum(ex)
        weights = [x / total for x in ex]
    else:
        raise ValueError(f"unknown fusion rule {rule!r}; choose from {RULES}")
    return WeightVector(tuple(weights), tuple(classifier_ids))


def fuse_predictions(probs, weights) -> float:
    """Weighted sum of p_yes values; a convex combination since weights sum to 1."""
    probs = [float(p) for p in probs]
    w = list(weights)
    if len(probs) != len(w):
        raise ValueError(f"{len(probs)} probabilities for {len(w)} weights")
    fused = math.fsum(wi * pi for wi, pi in zip(w, probs))
    # keep rounding noise inside [min, max] of the inputs
    return min(max(fused, min(probs)), max(probs))


def decide(p_yes: float, threshold: float = DEFAULT_THRESHOLD) -> Label:
    if not (0.0 <= p_yes <= 1.0) or not (0.0 <= threshold <= 1.0):
        raise ValueError(f"p_yes={p_yes} and threshold={threshold} must lie in [0, 1]")
    return Label.YES if p_yes >= threshold else Label.NO


def fuse_records(tweet_ids, member_probs: dict, weights: WeightVector,
                 threshold: float = DEFAULT_THRESHOLD) -> list[FusedPrediction]:
    """Fuse aligned probability lists, one list per member classifier.

    ``member_probs`` maps classifier id to probabilities ordered like
    ``tweet_ids``; iteration order must match ``weights``.
    """
    ids = list(member_probs)
    if weights.classifier_ids and tuple(ids) != weights.classifier_ids:
        raise ValueError(f"member order {ids} does not match weights {weights.classifier_ids}")
    out = []
    for i, tid in enumerate(tweet_ids):
        probs = [member_probs[m][i] for m in ids]
        p = fuse_predictions(probs, weights)
        out.append(FusedPrediction(
            tweet_id=tid,
            p_yes=p,
            label=decide(p, threshold),
            contributions=tuple(zip(ids, probs, weights.weights)),
        ))
    return out


def write_manifest(path, classifier_ids, losses, weights: WeightVector, threshold: float,
                   rule: str = "inverse_loss", extra: dict | None = None) -> Path:
    manifest = {
        "format_version": 1,
        "rule": rule,
        "threshold": threshold,
        "epsilon": EPS,
        "members": [
            {"id": cid, "dev_loss": float(loss), "weight": w}
            for cid, loss, w in zip(classifier_ids, losses, weights.weights)
        ],
    }
    if extra:
        manifest.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
