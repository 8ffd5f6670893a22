"""
Metrics and the always-"No" baseline
====================================

An image model that collapses to the majority class scores the share of "No"
tweets as accuracy and zero on every positive-class metric.  The official
split sizes make this easy to check by hand.
"""

from checkworthy.corpus import OFFICIAL_DISTRIBUTION, Label, SplitName
from checkworthy.evalkit import ReportTable, confusion, evaluate, metrics

# A small worked example first: 3 true positives, 1 false positive, 2 misses.
gold = [Label.YES] * 5 + [Label.NO] * 3
pred = [Label.YES] * 3 + [Label.NO] * 2 + [Label.YES] + [Label.NO] * 2
c = confusion(gold, pred)
print(c, metrics(c))

table = ReportTable()
for split in (SplitName.DEV, SplitName.DEV_TEST, SplitName.TEST):
    stats = OFFICIAL_DISTRIBUTION[split]
    gold = [Label.YES] * stats.yes + [Label.NO] * stats.no
    table.add(evaluate(gold, [Label.NO] * stats.total, split=split, model_id="always No"))
    print(f"{split.value}: {stats.no}/{stats.total} = {stats.no / stats.total:.4f}")

print(table.render())
