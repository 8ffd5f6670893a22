"""Epoch loop shared by the text, OCR and image trainers."""

from __future__ import annotations

import copy
import logging
import math
import random
from dataclasses import dataclass, field

import numpy as np
import torch

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


@dataclass
class SelectionResult:
    best_epoch: int
    best_dev_f1: float
    best_dev_loss: float
    epoch_log: list = field(default_factory=list)


def fit_with_selection(model, optimizer, n_train, batch_size, epochs, seed, step_loss, dev_scores) -> SelectionResult:
    """Run ``epochs`` passes over shuffled mini-batches and keep the best dev-F1 epoch.

    ``step_loss(indices)`` returns the training loss tensor for one batch,
    ``dev_scores()`` returns ``(dev_f1, dev_loss)`` for the current weights.
    Ties on F1 go to the lower dev loss, then to the earlier epoch.  On return
    ``model`` holds the retained weights.
    """
    if epochs < 1:
        raise TrainingError("epochs must be >= 1: no checkpoint would ever be produced")
    gen = torch.Generator().manual_seed(seed)
    best_state = None
    best = SelectionResult(0, -math.inf, math.nan)
    for epoch in range(1, epochs + 1):
        model.train()
        order = torch.randperm(n_train, generator=gen).tolist()
        running = 0.0
        for step, start in enumerate(range(0, n_train, batch_size), start=1):
            idx = order[start:start + batch_size]
            loss = step_loss(idx)
            if not torch.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}, step {step}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            running += loss.item() * len(idx)
        model.eval()
        dev_f1, dev_loss = dev_scores()
        if not math.isfinite(dev_loss):
            raise TrainingError(f"non-finite dev loss after epoch {epoch}")
        entry = {"epoch": epoch, "train_loss": running / n_train, "dev_f1": dev_f1, "dev_loss": dev_loss}
        best.epoch_log.append(entry)
        logger.info("epoch %d: train loss %.4f, dev F1 %.4f, dev loss %.4f", epoch, entry["train_loss"], dev_f1, dev_loss)
        if dev_f1 > best.best_dev_f1 or (dev_f1 == best.best_dev_f1 and dev_loss < best.best_dev_loss):
            best_state = copy.deepcopy(model.state_dict())
            best.best_epoch, best.best_dev_f1, best.best_dev_loss = epoch, dev_f1, dev_loss
    model.load_state_dict(best_state)
    model.eval()
    return best
