import json
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from checkworthy.corpus import Label, SplitName
from checkworthy.evalkit import (ConfusionCounts, MetricReport, ReportTable, confusion, fmt4, metrics,
                                 read_submission, results_table, write_submission)

Y, N = Label.YES, Label.NO


def oracle_metrics(gold, pred):
    """Exact metrics straight from the definitions, with rational arithmetic."""
    n = len(gold)
    correct = sum(1 for g, p in zip(gold, pred) if g == p)
    predicted_yes = [g for g, p in zip(gold, pred) if p == "Yes"]
    actual_yes = [p for g, p in zip(gold, pred) if g == "Yes"]
    hits = sum(1 for g in predicted_yes if g == "Yes")
    precision = Fraction(hits, len(predicted_yes)) if predicted_yes else Fraction(0)
    recall = Fraction(hits, len(actual_yes)) if actual_yes else Fraction(0)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else Fraction(0)
    return Fraction(correct, n), precision, recall, f1


def test_confusion_basic():
    assert confusion([Y, Y, N, N], [Y, N, Y, N]) == ConfusionCounts(tp=1, fp=1, fn=1, tn=1)


def test_confusion_all_no_on_dev_distribution():
    gold = [Y] * 87 + [N] * 184
    assert confusion(gold, [N] * 271) == ConfusionCounts(0, 0, 87, 184)


def test_confusion_identity():
    gold = [Y, N, N, Y, N]
    c = confusion(gold, gold)
    assert c.fp == c.fn == 0


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion([Y], [Y, N])
    with pytest.raises(ValueError):
        confusion([], [])


def test_metrics_majority_dev():
    r = metrics(ConfusionCounts(0, 0, 87, 184))
    assert fmt4(r.accuracy) == "0.6790"
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)


def test_metrics_hand_computed():
    r = metrics(ConfusionCounts(tp=2, fp=1, fn=2, tn=2))
    assert r.accuracy == pytest.approx(4 / 7, abs=1e-15)
    assert r.precision == pytest.approx(2 / 3, abs=1e-15)
    assert r.recall == 0.5
    assert r.f1 == pytest.approx(4 / 7, abs=1e-15)
    assert [fmt4(v) for v in (r.accuracy, r.precision, r.recall, r.f1)] == ["0.5714", "0.6667", "0.5000", "0.5714"]


@pytest.mark.parametrize("n,m", [(1, 0), (0, 3), (5, 9)])
def test_metrics_perfect(n, m):
    r = metrics(ConfusionCounts(n, 0, 0, m))
    assert r.accuracy == 1.0
    if n:
        assert r.precision == r.recall == r.f1 == 1.0


def test_metrics_empty():
    with pytest.raises(ValueError):
        metrics(ConfusionCounts(0, 0, 0, 0))


def test_oracle_equivalence_random():
    rng = random.Random(7)
    for _ in range(300):
        n = rng.randint(1, 50)
        gold = [rng.choice("YN") for _ in range(n)]
        pred = [rng.choice("YN") for _ in range(n)]
        gold = ["Yes" if g == "Y" else "No" for g in gold]
        pred = ["Yes" if p == "Y" else "No" for p in pred]
        r = metrics(confusion(gold, pred))
        for got, want in zip((r.accuracy, r.precision, r.recall, r.f1), oracle_metrics(gold, pred)):
            assert abs(got - float(want)) <= 1e-12


labels = st.sampled_from([Y, N])


@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=50), st.randoms())
def test_permutation_invariance(pairs, rnd):
    before = metrics(confusion(*zip(*pairs)))
    rnd.shuffle(pairs)
    after = metrics(confusion(*zip(*pairs)))
    assert before == after


@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=50))
def test_f1_zero_iff_no_true_positive(pairs):
    c = confusion(*zip(*pairs))
    r = metrics(c)
    assert 0.0 <= r.f1 <= 1.0
    assert (r.f1 == 0.0) == (c.tp == 0)
    assert r.f1 <= max(r.precision, r.recall) + 1e-15
    assert r.f1 >= min(r.precision, r.recall) - 1e-15


@pytest.mark.parametrize("value,text", [
    (1 / 32, "0.0312"),     # exact tie, rounds to even
    (3 / 32, "0.0938"),     # exact tie, rounds to even
    (0.67905, "0.6791"),    # binary value lies just above the tie
    (0.5, "0.5000"),
    (184 / 271, "0.6790"),
    (374 / 548, "0.6825"),
    (459 / 736, "0.6236"),
])
def test_fmt4(value, text):
    assert fmt4(value) == text


def test_results_table_shape():
    models = ["BERT", "BERT + PP", "Vision Transformer", "OCR", "BERT + PP + OCR"]
    cells = [MetricReport(0.5, 0.5, 0.5, 0.5, split, m)
             for m in models for split in (SplitName.DEV, SplitName.DEV_TEST, SplitName.TEST)]
    table = results_table(cells)
    assert len(table) == 60
    rows = list(table.rows())
    assert [name for name, _ in rows][:4] == ["accuracy_d", "precision_d", "recall_d", "f1_d"]
    assert len(rows) == 12 and all(len(vals) == 5 for _, vals in rows)


def test_results_table_empty_and_single():
    assert results_table([]).render() == ""
    assert len(results_table([])) == 0
    one = results_table([MetricReport(1.0, 1.0, 1.0, 1.0, SplitName.DEV, "m")])
    assert one.models == ["m"] and one.splits == [SplitName.DEV]


def test_results_table_missing_cells_blank():
    table = results_table([
        MetricReport(0.9, 0.8, 0.7, 0.75, SplitName.DEV, "a"),
        MetricReport(0.6, 0.5, 0.4, 0.44, SplitName.TEST, "b"),
    ])
    lines = table.render().splitlines()
    acc_d = next(line for line in lines if line.startswith("accuracy_d"))
    assert acc_d.split() == ["accuracy_d", "0.9000"]


def test_results_table_duplicate():
    cell = MetricReport(1, 1, 1, 1, SplitName.DEV, "m")
    with pytest.raises(ValueError):
        results_table([cell, cell])


def test_results_table_files_roundtrip(tmp_path):
    table = results_table([MetricReport(184 / 271, 0.0, 0.0, 0.0, SplitName.DEV, "majority")])
    table.notes.append("hello")
    table.write(tmp_path)
    data = json.loads((tmp_path / "report.json").read_text())
    again = ReportTable.from_dict(data)
    assert again.cells == table.cells and again.notes == ["hello"]
    assert "0.6790" in (tmp_path / "report.txt").read_text()
    assert (tmp_path / "report.csv").read_text().splitlines()[0] == "model_id,split,accuracy,precision,recall,f1"


def test_write_submission(tmp_path):
    path = write_submission([("1", Y)], "sit1", tmp_path / "sub.tsv")
    assert path.read_bytes() == b"1\tYes\tsit1\n"


def test_write_submission_many(tmp_path):
    preds = [(str(1000 + i), Y if i % 3 == 0 else N) for i in range(736)]
    path = write_submission(preds, "run", tmp_path / "sub.tsv")
    lines = path.read_text().splitlines()
    assert len(lines) == 736
    assert [r[0] for r in read_submission(path)] == [p[0] for p in preds]


def test_write_submission_errors(tmp_path):
    target = tmp_path / "sub.tsv"
    with pytest.raises(ValueError, match="duplicate"):
        write_submission([("1", Y), ("1", N)], "r", target)
    assert not target.exists()
    with pytest.raises(ValueError):
        write_submission([], "r", target)
    with pytest.raises(ValueError):
        write_submission([("1", Y)], "bad\trun", target)
