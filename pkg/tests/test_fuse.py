import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from checkworthy.corpus import Label
from checkworthy.fuse import (WeightVector, compute_weights, decide, fuse_predictions, fuse_records,
                              read_manifest, write_manifest)


def test_weights_two():
    w = compute_weights([0.4, 0.8])
    assert w.weights == pytest.approx((2 / 3, 1 / 3), abs=1e-12)


@pytest.mark.parametrize("c", [1e-3, 0.25, 1.0, 7.5])
def test_weights_symmetric(c):
    assert compute_weights([c, c]).weights == (0.5, 0.5)


def test_weights_three():
    # inverse losses 2, 1, 0.5 sum to 3.5
    w = compute_weights([0.5, 1.0, 2.0])
    assert w.weights == pytest.approx((4 / 7, 2 / 7, 1 / 7), abs=1e-12)


def test_zero_loss_dominates():
    w = compute_weights([0.0, 0.7])
    assert w.weights[0] > 1 - 1e-7


def test_weight_errors():
    with pytest.raises(ValueError):
        compute_weights([])
    with pytest.raises(ValueError):
        compute_weights([0.3, math.nan])
    with pytest.raises(ValueError):
        compute_weights([math.inf])
    with pytest.raises(ValueError):
        compute_weights([0.3], rule="vote")


def test_softmax_rule_monotone():
    w = compute_weights([0.2, 0.9], rule="softmax_neg_loss")
    assert w.weights[0] > w.weights[1]
    assert sum(w.weights) == pytest.approx(1.0, abs=1e-12)
    assert w.weights[0] == pytest.approx(1 / (1 + math.exp(-0.7)), abs=1e-12)


def test_weight_vector_validation():
    with pytest.raises(ValueError):
        WeightVector((0.5, 0.6))
    with pytest.raises(ValueError):
        WeightVector((1.0, 0.0))


def test_fuse_examples():
    assert fuse_predictions([0.9, 0.3], compute_weights([0.4, 0.8])) == pytest.approx(0.7, abs=1e-12)
    assert fuse_predictions([0.37], WeightVector((1.0,))) == 0.37
    assert fuse_predictions([0.2, 0.2, 0.2], compute_weights([0.1, 0.5, 3.0])) == 0.2


def test_fuse_length_mismatch():
    with pytest.raises(ValueError):
        fuse_predictions([0.1], compute_weights([0.2, 0.3]))


@pytest.mark.parametrize("p,t,label", [(0.7, 0.5, Label.YES), (0.5, 0.5, Label.YES), (0.49, 0.5, Label.NO)])
def test_decide(p, t, label):
    assert decide(p, t) is label


def test_decide_range():
    with pytest.raises(ValueError):
        decide(1.2)
    with pytest.raises(ValueError):
        decide(0.3, -0.1)


losses = st.lists(st.floats(1e-6, 50.0), min_size=1, max_size=6)


# scale invariance needs every scaled loss to stay above the epsilon clamp
@given(st.lists(st.floats(1e-4, 50.0), min_size=1, max_size=6), st.floats(1e-3, 1e3))
def test_weights_normalized_and_scale_invariant(ls, k):
    w = compute_weights(ls).weights
    assert abs(sum(w) - 1) <= 1e-9
    scaled = compute_weights([x * k for x in ls]).weights
    assert np.allclose(w, scaled, rtol=0, atol=1e-9)


@given(losses)
def test_weights_monotone(ls):
    w = compute_weights(ls).weights
    for (li, wi), (lj, wj) in itertools.combinations(zip(ls, w), 2):
        if li < lj:
            assert wi > wj
        elif li == lj:
            assert wi == wj


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(1e-6, 10)), min_size=1, max_size=6))
def test_convexity(pairs):
    probs = [p for p, _ in pairs]
    fused = fuse_predictions(probs, compute_weights([l for _, l in pairs]))
    assert min(probs) <= fused <= max(probs)


def test_two_classifier_dominance_grid():
    grid = np.linspace(0, 1, 101)
    for w_text in (0.5 + 1e-6, 0.55, 2 / 3, 0.9):
        w = WeightVector((w_text, 1 - w_text))
        for p_text, p_ocr in itertools.product(grid, grid):
            text_label, ocr_label = decide(p_text), decide(p_ocr)
            if text_label is ocr_label or abs(p_text - 0.5) < abs(p_ocr - 0.5):
                continue
            assert decide(fuse_predictions([p_text, p_ocr], w)) is text_label


def test_fuse_records_and_manifest(tmp_path):
    w = compute_weights([0.4, 0.8], classifier_ids=("text", "ocr"))
    out = fuse_records(["a", "b"], {"text": [0.9, 0.1], "ocr": [0.3, 0.95]}, w)
    assert [o.label for o in out] == [Label.YES, Label.NO]
    assert out[0].contributions[0] == ("text", 0.9, w.weights[0])
    with pytest.raises(ValueError):
        fuse_records(["a"], {"ocr": [0.1], "text": [0.2]}, w)
    path = write_manifest(tmp_path / "fusion.json", ["text", "ocr"], [0.4, 0.8], w, 0.5)
    m = read_manifest(path)
    assert [x["id"] for x in m["members"]] == ["text", "ocr"]
    assert m["members"][0]["weight"] == pytest.approx(2 / 3)
    assert m["rule"] == "inverse_loss" and m["threshold"] == 0.5
