"""Silhouette scores as cluster separation grows.

The score is a pure ratio of distances, so it is invariant to translation,
rotation, and uniform scaling; it only moves when the geometry between
clusters changes relative to their spread.
"""

import json

import numpy as np

from latentboost import silhouette_score

rng = np.random.default_rng(4)

print(f"{'separation':>12}{'mean s':>10}   per-class means")
for sep in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
    a = rng.normal(size=(40, 3))
    b = rng.normal(size=(40, 3)) + [sep, 0, 0]
    c = rng.normal(size=(40, 3)) + [0, sep, 0]
    x = np.vstack([a, b, c])
    labels = np.repeat([0, 1, 2], 40)
    rep = silhouette_score(x, labels)
    per_class = {k: round(v, 3) for k, v in rep.per_class.items()}
    print(f"{sep:>12.1f}{rep.mean:>10.4f}   {per_class}")

# invariance under rigid motion + scaling
x = np.vstack([rng.normal(size=(30, 4)), rng.normal(size=(30, 4)) + 3.0])
labels = np.repeat([0, 1], 30)
base = silhouette_score(x, labels).mean
q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
moved = silhouette_score((x @ q) * 2.5 + 7.0, labels).mean
print(f"\nrigid motion + scale: {base:.12f} -> {moved:.12f}")

# the JSON-ready report
rep = silhouette_score(x, labels)
print("\nserialized report:", json.dumps(rep.as_dict(), indent=2)[:160], "...")
