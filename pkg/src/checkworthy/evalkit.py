"""Accuracy / precision / recall / F1, result tables and submission files.

The positive class is always ``Yes``.  Precision, recall and F1 fall back to
0 when their denominator is zero, which is what a classifier that never
predicts ``Yes`` gets.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

from .corpus import Label, SplitName

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")
SPLIT_ORDER = (SplitName.DEV, SplitName.DEV_TEST, SplitName.TEST, SplitName.TRAIN)
SPLIT_SUFFIX = {SplitName.DEV: "d", SplitName.DEV_TEST: "dt", SplitName.TEST: "t", SplitName.TRAIN: "tr"}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    split: SplitName | None = None
    model_id: str = ""

    def as_dict(self):
        d = asdict(self)
        d["split"] = None if self.split is None else self.split.value
        return d


def confusion(gold, pred) -> ConfusionCounts:
    gold = [Label.parse(g) for g in gold]
    pred = [Label.parse(p) for p in pred]
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    if not gold:
        raise ValueError("cannot build a confusion matrix from empty label lists")
    tp = fp = fn = tn = 0
    for g, p in zip(gold, pred):
        if p is Label.YES:
            if g is Label.YES:
                tp += 1
            else:
                fp += 1
        elif g is Label.YES:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def _ratio(num, den):
    return num / den if den else 0.0


def metrics(c: ConfusionCounts, split=None, model_id: str = "") -> MetricReport:
    if c.total <= 0:
        raise ValueError("metrics need at least one evaluated record")
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    # 2PR/(P+R) == 2tp/(2tp+fp+fn); the count form avoids rounding from P and R
    f1 = _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)
    return MetricReport(
        accuracy=(c.tp + c.tn) / c.total,
        precision=precision,
        recall=recall,
        f1=f1,
        split=None if split is None else SplitName.parse(split),
        model_id=model_id,
    )


def evaluate(gold, pred, split=None, model_id: str = "") -> MetricReport:
    return metrics(confusion(gold, pred), split=split, model_id=model_id)


def fmt4(value: float) -> str:
    """Render to 4 decimals, rounding half to even on the exact binary value."""
    return str(Decimal(value).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


class ReportTable:
    """A (model x split x metric) grid shaped like a results table.

    Rows are ``<metric>_<split>`` (e.g. ``f1_d``), columns are model ids in
    first-seen order.  Missing cells render blank.
    """

    def __init__(self, cells=()):
        self.cells: dict[tuple[str, SplitName], MetricReport] = {}
        self.models: list[str] = []
        self.notes: list[str] = []
        for cell in cells:
            self.add(cell)

    def add(self, cell: MetricReport):
        key = (cell.model_id, cell.split)
        if key in self.cells:
            raise ValueError(f"duplicate cell for model {cell.model_id!r}, split {cell.split}")
        self.cells[key] = cell
        if cell.model_id not in self.models:
            self.models.append(cell.model_id)

    @property
    def splits(self) -> list[SplitName]:
        present = {s for _, s in self.cells}
        return [s for s in SPLIT_ORDER if s in present]

    def __len__(self):
        return len(self.cells) * len(METRIC_NAMES)

    def value(self, model_id, split, metric) -> float | None:
        cell = self.cells.get((model_id, SplitName.parse(split)))
        return None if cell is None else getattr(cell, metric)

    def rows(self):
        for split in self.splits:
            for metric in METRIC_NAMES:
                name = f"{metric}_{SPLIT_SUFFIX[split]}"
                yield name, [self.value(m, split, metric) for m in self.models]

    def render(self) -> str:
        if not self.cells:
            return ""
        header = [""] + self.models
        body = [[name] + ["" if v is None else fmt4(v) for v in vals] for name, vals in self.rows()]
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
                 for row in [header] + body]
        lines.insert(1, "-" * len(lines[0]))
        out = "\n".join(line.rstrip() for line in lines) + "\n"
        if self.notes:
            out += "\n" + "\n".join(f"note: {n}" for n in self.notes) + "\n"
        return out

    def to_dict(self):
        return {
            "models": list(self.models),
            "cells": [c.as_dict() for c in self.cells.values()],
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data):
        table = cls(
            MetricReport(**{**c, "split": None if c["split"] is None else SplitName(c["split"])})
            for c in data.get("cells", [])
        )
        table.notes = list(data.get("notes", []))
        return table

    def write(self, out_dir, stem="report"):
        """Write ``<stem>.txt`` (aligned) and ``<stem>.json`` / ``<stem>.csv`` (machine-readable)."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{stem}.txt").write_text(self.render(), encoding="utf-8")
        (out_dir / f"{stem}.json").write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        with open(out_dir / f"{stem}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model_id", "split", *METRIC_NAMES])
            for cell in self.cells.values():
                writer.writerow([cell.model_id, cell.split.value if cell.split else "",
                                 *(repr(getattr(cell, m)) for m in METRIC_NAMES)])
        return out_dir / f"{stem}.txt"


def results_table(cells) -> ReportTable:
    return ReportTable(cells)


def write_submission(predictions, run_id: str, path) -> Path:
    """Write ``tweet_id<TAB>label<TAB>run_id`` lines in input order.

    All validation happens before the file is opened.
    """
    predictions = [(str(tid), Label.parse(label)) for tid, label in predictions]
    if not predictions:
        raise ValueError("refusing to write an empty submission")
    seen = set()
    for tid, _ in predictions:
        if tid in seen:
            raise ValueError(f"duplicate tweet_id {tid!r} in submission")
        seen.add(tid)
    if not run_id or any(ch in run_id for ch in "\t\n"):
        raise ValueError(f"invalid run id {run_id!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tid, label in predictions:
            fh.write(f"{tid}\t{label.value}\t{run_id}\n")
    return path


def read_submission(path) -> list[tuple[str, Label, str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tid, label, run_id = line.rstrip("\n").split("\t")
            rows.append((tid, Label.parse(label), run_id))
    return rows
