"""Exact nearest neighbours in an ultrametric, pruning with two pivots."""

import numpy as np

from starmetric.neighbors import build_index, cluster_dataset, nn_linear, nn_pruned

space = cluster_dataset(500, seed=0)
index = build_index(space)
print("pivots:", [space.ids[p] for p in index.pivots])

rng = np.random.default_rng(1)
pruned = linear = 0
for q in (np.round(rng.uniform(0, 1, 500) * 64) / 64).tolist():
    a, b = nn_linear(space, q), nn_pruned(index, q)
    assert (a.index, a.distance) == (b.index, b.distance)
    pruned, linear = pruned + b.evals, linear + a.evals
print(f"same answers, {pruned / linear:.1%} of the distance evaluations")
