"""Shared corpus builders and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np

from starmetric.definer import lukasiewicz, maximum, power
from starmetric.space import Dyadic, Euclidean, EuclideanPower, SqrtDiff, StarSpace, from_points

# name -> (definer, metric) pairs whose metric satisfies the definer's triangle inequality
FAMILIES = {
    "lukasiewicz": (lukasiewicz(), Euclidean()),
    "maximum": (maximum(), Dyadic()),
    "power0.5": (power(0.5), EuclideanPower(0.5)),
    "power2": (power(2.0), SqrtDiff()),
    "power3": (power(3.0), EuclideanPower(3.0)),
}


def random_space(family: str, rng: np.random.Generator, n: int | None = None, dim: int = 1,
                 scale: float = 3.0) -> StarSpace:
    definer, metric = FAMILIES[family]
    n = int(rng.integers(2, 41)) if n is None else n
    if family == "maximum":
        pts = np.round(rng.uniform(0, scale, size=(n, dim)) * 64) / 64
    elif family == "power3":
        pts = rng.uniform(0, 1.5, size=(n, dim))
    else:
        pts = rng.uniform(0, scale, size=(n, dim))
    # distinct payloads keep M1 meaningful
    pts = np.unique(pts, axis=0)
    return from_points([tuple(p) if dim > 1 else float(p[0]) for p in pts], metric, definer)


def naive_axioms(space: StarSpace, tol: float = 1e-9, abs_tol: float = 1e-12):
    """Triple-loop oracle: (m1, m2, m3, first M3 triple) without any vectorisation."""
    n = len(space)
    d = [[space.payload_distance(space.payloads[i], space.payloads[j]) for j in range(n)] for i in range(n)]
    f = space.definer.apply
    m1 = all((d[i][j] == 0) == (space.keys()[i] == space.keys()[j]) for i in range(n) for j in range(n))
    m2 = all(abs(d[i][j] - d[j][i]) <= tol * max(d[i][j], d[j][i]) + abs_tol for i in range(n) for j in range(n))
    first = None
    for x, y, z in itertools.product(range(n), repeat=3):
        if d[x][y] > float(f(d[x][z], d[z][y])) * (1 + tol) + abs_tol:
            first = (x, y, z)
            break
    return m1, m2, first is None, first


def naive_star(members, point):
    out = set()
    for m in members:
        if point in m:
            out |= set(m)
    return out


def naive_refines(fine, coarse):
    return all(any(set(v) <= set(u) for u in coarse) for v in fine)


def naive_star_refines(fine, coarse):
    stars = []
    for v in fine:
        s = set()
        for p in v:
            s |= naive_star(fine, p)
        stars.append(s)
    return all(any(s <= set(u) for u in coarse) for s in stars)


def naive_floyd(W):
    n = len(W)
    rho = [list(map(float, row)) for row in W]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if rho[i][k] + rho[k][j] < rho[i][j]:
                    rho[i][j] = rho[i][k] + rho[k][j]
    return np.array(rho)
