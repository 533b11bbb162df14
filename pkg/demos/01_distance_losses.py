"""Tour of the distance losses on tiny hand-checkable batches.

Each section builds a batch small enough to verify with pencil and paper,
evaluates one loss, and shows the gradient flowing back to the latents.
"""

import numpy as np

from latentboost import (Batch, MarginConfig, compute_cluster_stats,
                         contrastive_loss, cross_entropy, magnet_loss,
                         npair_loss, triplet_loss, weighted_total)
from latentboost.tensor import Tape, backward, grad_wrt

cfg = MarginConfig()  # pos margin 0.0, neg margin 1.0, triplet 0.05, alpha 1.0
print("margins:", cfg)

# --- contrastive: one dissimilar pair at distance 0.5, margin 1.0 ----------
# loss = (1 / (2 * pairs)) * max(0, 1.0 - 0.5)^2 = 0.125
b = Batch(np.array([[0.0], [0.5]]), [0, 1])
print("\ncontrastive, one close dissimilar pair:",
      float(contrastive_loss(b, cfg).data))

# --- triplet: positive further than negative --------------------------------
# both class-0 anchors see d(a,p)=1, d(a,n)=0.5 -> max(0, 1 - 0.5 + 0.05)
b = Batch(np.array([[0.0], [1.0], [0.5]]), [0, 0, 1])
print("triplet, violated margin:", float(triplet_loss(b, cfg).data))

# --- N-pair: one negative orthogonal to the anchor --------------------------
# log(1 + e^(f.f_neg - f.f_pos)) = log(1 + e^-1) ~ 0.3133
b = Batch(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), [0, 0, 1])
print("n-pair, orthogonal negative:", float(npair_loss(b).data))

# --- magnet: affinity to own vs rival centroids -----------------------------
# negative values are expected once the own-cluster affinity dominates the
# rivals': the loss is a log of that ratio, shifted by alpha
x = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [4.0, 0.0]])
labels = np.array([0, 0, 1, 1])
stats = compute_cluster_stats(x, labels)
b = Batch(x, labels)
print("magnet on two 2-point clusters:", float(magnet_loss(b, cfg, stats).data))

# --- the weighted-sum objective, with gradients ------------------------------
tape = Tape()
latents = tape.leaf(x)
head = np.array([[1.0, -1.0], [0.0, 0.5]])
logits = latents @ head  # fixed readout just for the demo
dist = magnet_loss(Batch(latents, labels), cfg, stats)
ce = cross_entropy(logits, labels)
for lam in (0.0, 0.5, 1.0):
    total = weighted_total(dist, ce, lam)
    grads = backward(tape, total)
    gnorm = np.linalg.norm(grad_wrt(grads, latents))
    print(f"lambda={lam:3.1f}: total={float(total.data):+.4f} "
          f"ce={float(ce.data):.4f} dist={float(dist.data):+.4f} "
          f"|dL/dlatents|={gnorm:.4f}")
