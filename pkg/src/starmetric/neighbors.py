"""Exact nearest-neighbour search with pivot-based pruning.

For a pivot ``p`` the generalized triangle inequality gives
``d(q, p) <= d(q, x) * d(x, p)``, so ``d(q, x)`` is at least the smallest
``t`` with ``t * d(p, x) >= d(q, p)``.  Points whose bound exceeds the best
distance found so far are never evaluated.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cover import greedy_net
from .definer import inverse_lower_closed
from .errors import ConfigurationError, StarMetricError
from .space import StarSpace, from_points

__all__ = ["PivotIndex", "NNResult", "build_index", "nn_linear", "nn_pruned", "lower_bounds", "cluster_dataset"]

# slack matching the tolerance accepted by the axiom check
M3_REL = 1e-9
M3_ABS = 1e-12


class NNResult(NamedTuple):
    index: int
    distance: float
    evals: int


@dataclass
class PivotIndex:
    space: StarSpace
    pivots: list[int]
    table: np.ndarray  # table[k, x] = d(pivots[k], x)
    epsilon: float

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "pivots": [self.space.ids[p] for p in self.pivots],
                "table_shape": list(self.table.shape)}


def _nonempty(space: StarSpace):
    space._require_finite()
    if len(space) == 0:
        raise ConfigurationError("nearest-neighbour search needs a non-empty space")


def build_index(space: StarSpace, pivot_epsilon: float | None = None, workers: int | None = None) -> PivotIndex:
    """Pivots are the greedy packing centers at ``pivot_epsilon`` (default: diameter / 4)."""
    _nonempty(space)
    if pivot_epsilon is None:
        D = space.distance_matrix()
        diam = float(D.max())
        pivot_epsilon = diam / 4.0 if diam > 0 else 1.0
    pivots = greedy_net(space, pivot_epsilon, "packing").centers
    if workers is None:
        workers = int(os.environ.get("STARMETRIC_THREADS", "1") or 1)
    if workers > 1 and len(pivots) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: np.array(space.row(p), dtype=float), pivots))
    else:
        rows = [np.array(space.row(p), dtype=float) for p in pivots]
    table = np.vstack(rows)
    table.setflags(write=False)
    return PivotIndex(space, pivots, table, float(pivot_epsilon))


def nn_linear(space: StarSpace, query) -> NNResult:
    """Brute force: every point evaluated, lowest index among the closest."""
    _nonempty(space)
    q = space.metric.normalize(query)
    d = np.asarray(space.distances_to(q), dtype=float)
    i = int(np.argmin(d))
    return NNResult(i, float(d[i]), int(d.size))


def lower_bounds(index: PivotIndex, d_query_pivots: np.ndarray) -> np.ndarray:
    """Best pivot lower bound on ``d(q, x)`` for every point ``x``.

    The query-pivot distance is first shrunk by the axiom-check slack so the
    bound stays valid for spaces that satisfy the inequality only up to it.
    """
    c = np.maximum((np.asarray(d_query_pivots, dtype=float) - M3_ABS) / (1.0 + M3_REL), 0.0)
    lb = inverse_lower_closed(index.space.definer, c[:, None], index.table)
    return lb.max(axis=0)


def nn_pruned(index: PivotIndex, query, chunk: int = 16, debug: bool = False) -> NNResult:
    """Same answer as :func:`nn_linear`, evaluating only points the pivot bounds cannot exclude.

    Candidates are visited in increasing bound order, in blocks that start
    at ``chunk`` points and double; the search stops at
    the first one whose bound exceeds the best distance by more than the
    bound tolerance.  With ``debug`` every evaluated point's bound is
    checked against its true distance.
    """
    space = index.space
    _nonempty(space)
    q = space.metric.normalize(query)
    n = len(space)
    pivots = np.asarray(index.pivots, dtype=np.int64)
    dqp = np.asarray(space.distances_to(q, pivots), dtype=float)
    evals = int(pivots.size)
    lb = lower_bounds(index, dqp)
    slack = 1e-12 * (1.0 + float(dqp.max()))

    k = int(np.lexsort((pivots, dqp))[0])
    best_i, best_d = int(pivots[k]), float(dqp[k])
    seen = np.zeros(n, dtype=bool)
    seen[pivots] = True
    if debug:
        _check_bounds(lb, pivots, dqp, slack)

    order = np.lexsort((np.arange(n), lb))
    order = order[~seen[order]]
    pos = 0
    while pos < order.size:
        block = order[pos:pos + chunk]
        pos += chunk
        chunk = min(2 * chunk, 1024)
        block = block[lb[block] - slack <= best_d]
        if block.size == 0:
            break
        d = np.asarray(space.distances_to(q, block), dtype=float)
        evals += int(block.size)
        if debug:
            _check_bounds(lb, block, d, slack)
        for x, dx in zip(block.tolist(), d.tolist()):
            if dx < best_d or (dx == best_d and x < best_i):
                best_i, best_d = x, dx
    return NNResult(best_i, best_d, evals)


def _check_bounds(lb, idx, d, slack):
    bad = np.flatnonzero(lb[idx] > d + slack)
    if bad.size:
        j = int(bad[0])
        raise StarMetricError(
            f"pivot bound {lb[idx][j]!r} exceeds true distance {d[j]!r} at point {int(idx[j])}; "
            "the space violates its triangle inequality")


def cluster_dataset(per_cluster: int = 500, seed: int = 0, gap: float = 8.0) -> StarSpace:
    """Two clusters for the ultrametric (maximum definer) search benchmark.

    Cluster A lies in ``[0, 1)`` and cluster B in ``[gap, gap + 1)``; under
    the dyadic ultrametric intra-cluster distances are at most 1 and the
    cross distance is the dyadic span covering both clusters.
    """
    rng = np.random.default_rng(seed)
    a = rng.random(per_cluster)
    b = gap + rng.random(per_cluster)
    return from_points(np.concatenate([a, b]), "dyadic", name="two_clusters")
