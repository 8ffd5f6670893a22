"""
Loss-weighted late fusion
=========================

Each branch's probability is weighted by its inverse validation loss, so the
branch that fits the dev set better has the larger say.  A confident
lower-loss branch wins any disagreement.
"""

from checkworthy.fuse import compute_weights, decide, fuse_predictions

losses = {"text": 0.41, "ocr": 0.58}
w = compute_weights(list(losses.values()), classifier_ids=tuple(losses))
print({k: round(x, 4) for k, x in zip(w.classifier_ids, w.weights)})

# Multiplying every loss by the same constant leaves the weights alone.
print(compute_weights([l * 10 for l in losses.values()]).weights)

# The softmax rule is flatter for losses this close together.
print(compute_weights(list(losses.values()), rule="softmax_neg_loss").weights)

for p_text, p_ocr in [(0.9, 0.3), (0.45, 0.8), (0.2, 0.65), (0.5, 0.5)]:
    p = fuse_predictions([p_text, p_ocr], w)
    print(f"text {p_text:.2f}  ocr {p_ocr:.2f}  ->  fused {p:.4f}  {decide(p).value}")
