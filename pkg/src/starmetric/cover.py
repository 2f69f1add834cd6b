"""Covers, stars, refinement, epsilon-nets and a chain-metric companion.

Everything here works on finite spaces and uses the cached distance matrix
(or single rows of it) with strict ``< r`` balls.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .construct import product_index
from .definer import joint_zero_radius, kfold_radius, radius_array
from .errors import ConfigurationError, PreconditionError
from .space import StarSpace, check_axioms

__all__ = [
    "Cover",
    "Verdict",
    "EpsilonNet",
    "UniformityCertificate",
    "ChainMetricTable",
    "star",
    "refines",
    "star_refines",
    "ball_cover",
    "verify_uniformity_base",
    "greedy_net",
    "verify_dense",
    "covering_number",
    "diameter",
    "set_distance",
    "closure_members",
    "shortest_paths",
    "chain_metric",
    "subspace_net",
    "closure_net",
    "product_net",
    "union_net",
]

NET_STRATEGIES = ("packing", "cover", "farthest")


@dataclass(frozen=True)
class Verdict:
    passed: bool
    witness: dict | None = None

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {"passed": self.passed, "witness": self.witness}


class Cover:
    """A family of point-index sets whose union is every point of a finite space.

    ``centers[k]`` lists the points whose ball produced member ``k`` (ball
    covers only); ``radius`` is the common ball radius.
    """

    def __init__(self, members: Iterable[Iterable[int]], size: int, centers=None, radius=None,
                 space: StarSpace | None = None):
        self.members = tuple(frozenset(int(i) for i in m) for m in members)
        self.size = int(size)
        self.centers = None if centers is None else tuple(tuple(c) for c in centers)
        self.radius = radius
        self.space = space
        covered = np.zeros(self.size, dtype=bool)
        for m in self.members:
            for i in m:
                if not 0 <= i < self.size:
                    raise IndexError(f"cover member mentions point {i}, universe has {self.size}")
            covered[list(m)] = True
        if not covered.all():
            missing = int(np.flatnonzero(~covered)[0])
            raise ValueError(f"members do not cover point {missing}")
        self._matrix = None

    @classmethod
    def from_sets(cls, sets, size: int | None = None, space: StarSpace | None = None) -> "Cover":
        sets = [frozenset(s) for s in sets]
        if size is None:
            size = len(space) if space is not None else (max((max(s) for s in sets if s), default=-1) + 1)
        return cls(sets, size, space=space)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __repr__(self):
        return f"Cover({len(self.members)} members over {self.size} points)"

    @property
    def matrix(self) -> np.ndarray:
        """Boolean membership matrix, one row per member."""
        if self._matrix is None:
            M = np.zeros((len(self.members), self.size), dtype=bool)
            for k, m in enumerate(self.members):
                M[k, list(m)] = True
            M.setflags(write=False)
            self._matrix = M
        return self._matrix

    def member_of_center(self, center: int) -> frozenset:
        if self.centers is None:
            raise TypeError("cover was not built from balls")
        for k, cs in enumerate(self.centers):
            if center in cs:
                return self.members[k]
        raise IndexError(f"no ball centred at {center}")


def _targets(cover: Cover, target) -> list[int]:
    pts = [int(target)] if np.isscalar(target) else [int(t) for t in target]
    for p in pts:
        if not 0 <= p < cover.size:
            raise IndexError(f"point index {p} out of range for {cover.size} points")
    return pts


def star(cover: Cover, target) -> frozenset:
    """Union of the members containing the point (or any point of a set)."""
    pts = _targets(cover, target)
    if not pts:
        return frozenset()
    M = cover.matrix
    hit = M[:, pts].any(axis=1)
    return frozenset(np.flatnonzero(M[hit].any(axis=0)).tolist())


def _same_universe(fine: Cover, coarse: Cover):
    if fine.size != coarse.size:
        raise ConfigurationError(f"covers live on {fine.size} and {coarse.size} points")
    if fine.space is not None and coarse.space is not None and fine.space is not coarse.space:
        raise ConfigurationError("covers belong to different spaces")


def _subset_table(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``T[i, j]`` is true iff row ``i`` of A is a subset of row ``j`` of B."""
    outside = A.astype(np.int32) @ (~B).astype(np.int32).T
    return outside == 0


def _refine_rows(rows: np.ndarray, coarse: Cover, labels):
    table = _subset_table(rows, coarse.matrix)
    ok = table.any(axis=1)
    if ok.all():
        return Verdict(True)
    k = int(np.flatnonzero(~ok)[0])
    return Verdict(False, labels(k, rows[k]))


def refines(fine: Cover, coarse: Cover) -> Verdict:
    """Every fine member lies inside some coarse member; witness is the first that does not."""
    _same_universe(fine, coarse)
    return _refine_rows(fine.matrix, coarse,
                        lambda k, row: {"member_index": k, "member": np.flatnonzero(row).tolist()})


def member_stars(cover: Cover) -> np.ndarray:
    """Row ``k`` is the star of member ``k`` in its own cover."""
    M = cover.matrix.astype(np.int32)
    touching = (M @ M.T) > 0
    return (touching.astype(np.int32) @ M) > 0


def star_refines(fine: Cover, coarse: Cover) -> Verdict:
    """The stars of the fine members refine the coarse cover."""
    _same_universe(fine, coarse)
    stars = member_stars(fine)
    return _refine_rows(stars, coarse, lambda k, row: {
        "member_index": k,
        "member": sorted(fine.members[k]),
        "star": np.flatnonzero(row).tolist(),
    })


def _ball_rows(space: StarSpace, r: float) -> np.ndarray:
    return space.distance_matrix() < r


def ball_cover(space: StarSpace, n: int) -> Cover:
    """The cover by radius ``1/n`` balls, one per point, identical balls merged."""
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    space._require_finite()
    r = 1.0 / int(n)
    rows = _ball_rows(space, r)
    seen: dict[bytes, int] = {}
    members, centers = [], []
    for c in range(rows.shape[0]):
        key = np.packbits(rows[c]).tobytes()
        k = seen.get(key)
        if k is None:
            seen[key] = len(members)
            members.append(np.flatnonzero(rows[c]).tolist())
            centers.append([c])
        else:
            centers[k].append(c)
    return Cover(members, len(space), centers, r, space)


@dataclass
class UniformityCertificate:
    n0: int
    n1: int
    r1: float
    u1: str
    u2: bool
    u3: bool
    u4: bool
    u4_pairs: int
    u4_max_n: int | None
    witnesses: dict = field(default_factory=dict)
    minimal_n1: int | None = None

    @property
    def passed(self) -> bool:
        return self.u2 and self.u3 and self.u4

    def to_dict(self) -> dict:
        out = {
            "passed": self.passed,
            "n0": self.n0,
            "n1": self.n1,
            "r1": self.r1,
            "verdicts": {"U1": self.u1, "U2": self.u2, "U3": self.u3, "U4": self.u4},
            "u4_pairs": self.u4_pairs,
            "u4_max_n": self.u4_max_n,
            "witnesses": self.witnesses,
        }
        if self.minimal_n1 is not None:
            out["minimal_n1"] = self.minimal_n1
        return out


def separating_n(definer, r: float, margin: float = 1e-6) -> int:
    """An ``n`` such that two points at distance ``r`` never share a radius-``1/n`` star.

    First ``1/m < r``, then ``r1`` with ``r1 * r1 < 1/m``, then ``1/n < r1``.
    """
    m = math.floor(1.0 / r) + 1
    r1 = joint_zero_radius(definer, 1.0 / m, margin)
    return math.floor(1.0 / r1) + 1


def _in_star(D: np.ndarray, n: int) -> np.ndarray:
    """``S[x, y]`` is true iff x lies in the star of y in the radius-``1/n`` ball cover."""
    A = (D < 1.0 / n).astype(np.int32)
    return (A.T @ A) > 0


def verify_uniformity_base(space: StarSpace, n0: int, minimize: bool = False,
                           margin: float = 1e-6) -> UniformityCertificate:
    """Certify that the radius ``1/n1`` balls star refine the radius ``1/n0`` balls.

    ``n1`` comes from the three-fold radius ``r1`` of ``1/n0``: the least
    integer with ``1/n1 < r1``.  U2 checks the chain of ball covers from
    ``n0`` to ``n1``, U3 the star refinement, U4 that every pair of distinct
    payloads is separated by some ball-cover star.  All checks are exhaustive.
    """
    space._require_finite()
    n0 = int(n0)
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    definer = space.definer
    r1 = kfold_radius(definer, 3, 1.0 / n0, margin)
    n1 = math.floor(1.0 / r1) + 1
    D = space.distance_matrix()
    ids = space.ids
    witnesses: dict = {}

    coarse = ball_cover(space, n0)
    fine = ball_cover(space, n1)

    u2 = True
    for n in range(n0, n1):
        v = refines(ball_cover(space, n + 1), ball_cover(space, n))
        if not v:
            u2 = False
            witnesses["U2"] = {"n": n + 1, "coarser_n": n, **_named(v.witness, ids)}
            break

    v3 = star_refines(fine, coarse)
    if not v3:
        witnesses["U3"] = _named(v3.witness, ids)

    codes: dict = {}
    labels = np.array([codes.setdefault(k, len(codes)) for k in space.keys()])
    xs, ys = np.triu_indices(len(space), 1)
    distinct = labels[xs] != labels[ys]
    xs, ys = xs[distinct], ys[distinct]
    r = D[xs, ys]
    u4, pairs = True, int(xs.size)
    zero = np.flatnonzero(~(r > 0))
    if zero.size:
        u4 = False
        x, y = int(xs[zero[0]]), int(ys[zero[0]])
        witnesses["U4"] = {"x": ids[x], "y": ids[y], "indices": [x, y], "d(x,y)": float(D[x, y]),
                           "reason": "distinct payloads at distance 0"}
    pos = np.flatnonzero(r > 0)
    # first 1/m < d(x,y), then n from the joint radius of 1/m; one radius per distinct m
    ms = np.floor(np.minimum(1.0 / r[pos], 2.0 ** 60)).astype(np.int64) + 1
    levels, inverse = np.unique(ms, return_inverse=True)
    r1s = radius_array(definer, 1.0 / levels.astype(float), 2, margin) if levels.size else np.zeros(0)
    ns = (np.floor(1.0 / r1s).astype(np.int64) + 1)[inverse]
    by_n: dict[int, np.ndarray] = {int(n): pos[ns == n] for n in np.unique(ns)}
    for n in sorted(by_n):
        S = _in_star(D, n)
        sel = by_n[n]
        bad = np.flatnonzero(S[xs[sel], ys[sel]])
        if bad.size:
            x, y = int(xs[sel[bad[0]]]), int(ys[sel[bad[0]]])
            if u4:
                witnesses["U4"] = {"x": ids[x], "y": ids[y], "indices": [x, y], "n": n,
                                   "d(x,y)": float(D[x, y])}
            u4 = False
    max_n = max(by_n) if by_n else None

    minimal = None
    if minimize:
        for m in range(1, n1 + 1):
            if star_refines(ball_cover(space, m), coarse):
                minimal = m
                break
    return UniformityCertificate(n0, n1, r1, "vacuous", u2, bool(v3), u4, pairs, max_n, witnesses, minimal)


def _named(witness: dict | None, ids) -> dict:
    """Copy of a cover witness with point ids alongside the indices."""
    if witness is None:
        return {}
    out = dict(witness)
    for key in ("member", "star"):
        if key in out:
            out[key + "_ids"] = [ids[i] for i in out[key]]
    return out


@dataclass
class EpsilonNet:
    space: StarSpace
    epsilon: float
    centers: list[int]
    construction: str

    def __len__(self):
        return len(self.centers)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "construction": self.construction,
            "size": len(self.centers),
            "centers": [self.space.ids[c] for c in self.centers],
        }


def greedy_net(space: StarSpace, epsilon: float, strategy: str = "packing") -> EpsilonNet:
    """An epsilon-dense set of centers built greedily.

    ``packing`` takes the lowest-index uncovered point each round, so
    centers are pairwise at least ``epsilon`` apart.  ``cover`` takes the
    point whose ball covers the most uncovered points (lowest index on
    ties).  ``farthest`` starts at point 0 and keeps adding the point
    farthest from the current centers; its rounds do not depend on
    ``epsilon``, which makes the resulting count monotone in ``epsilon``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    space._require_finite()
    n = len(space)
    centers: list[int] = []
    if n == 0:
        return EpsilonNet(space, float(epsilon), centers, strategy)
    if strategy == "packing":
        uncovered = np.ones(n, dtype=bool)
        nxt = 0
        while nxt < n:
            centers.append(nxt)
            uncovered &= ~(space.row(nxt) < epsilon)
            rest = np.flatnonzero(uncovered[nxt:])
            nxt = nxt + int(rest[0]) if rest.size else n
    elif strategy == "cover":
        A = (space.distance_matrix() < epsilon).astype(np.int32)
        uncovered = np.ones(n, dtype=np.int32)
        while uncovered.any():
            gain = A @ uncovered
            c = int(np.argmax(gain))
            centers.append(c)
            uncovered[A[c] > 0] = 0
    elif strategy == "farthest":
        gap = np.array(space.row(0), dtype=float)
        centers.append(0)
        while True:
            c = int(np.argmax(gap))
            if not gap[c] >= epsilon:
                break
            centers.append(c)
            np.minimum(gap, space.row(c), out=gap)
    else:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {NET_STRATEGIES}")
    return EpsilonNet(space, float(epsilon), centers, strategy)


def verify_dense(space: StarSpace, centers: Sequence[int], epsilon: float) -> Verdict:
    """Every point within ``< epsilon`` of some center; witness is the lowest uncovered point."""
    space._require_finite()
    n = len(space)
    covered = np.zeros(n, dtype=bool)
    for c in centers:
        covered |= space.row(c) < epsilon
    if covered.all():
        return Verdict(True)
    i = int(np.flatnonzero(~covered)[0])
    return Verdict(False, {"index": i, "id": space.ids[i]})


def insertion_radii(space: StarSpace) -> np.ndarray:
    """Distance of each successive farthest-point center to the earlier ones."""
    space._require_finite()
    n = len(space)
    if n == 0:
        return np.zeros(0)
    gap = np.array(space.row(0), dtype=float)
    radii = [math.inf]
    for _ in range(1, n):
        c = int(np.argmax(gap))
        if gap[c] <= 0:
            break
        radii.append(float(gap[c]))
        np.minimum(gap, space.row(c), out=gap)
    return np.array(radii)


def covering_number(space: StarSpace, epsilon: float) -> int:
    """Size of the farthest-point epsilon-net: an upper bound on the minimum, monotone in epsilon."""
    return len(greedy_net(space, epsilon, "farthest").centers)


def diameter(space: StarSpace, subset: Iterable[int] | None = None) -> float:
    """Largest pairwise distance in the subset (whole space if omitted); 0 when empty."""
    space._require_finite()
    D = space.distance_matrix()
    if subset is None:
        return float(D.max()) if D.size else 0.0
    idx = sorted({space._index(i) for i in subset})
    if not idx:
        return 0.0
    return float(D[np.ix_(idx, idx)].max())


def set_distance(space: StarSpace, x: int, A: Iterable[int]) -> float:
    """Smallest distance from ``x`` to ``A``; exactly 1 for empty ``A``."""
    idx = sorted({space._index(i) for i in A})
    x = space._index(x)
    if not idx:
        return 1.0
    return float(space.row(x)[idx].min())


def closure_members(space: StarSpace, A: Iterable[int]) -> frozenset:
    """Points at set distance 0 from ``A``."""
    idx = sorted({space._index(i) for i in A})
    if not idx:
        return frozenset()
    D = space.distance_matrix()
    return frozenset(np.flatnonzero((D[:, idx] == 0).any(axis=1)).tolist())


def shortest_paths(W: np.ndarray) -> np.ndarray:
    """All-pairs shortest path lengths over a complete weighted graph (Floyd-Warshall)."""
    rho = np.array(W, dtype=float, copy=True)
    for k in range(rho.shape[0]):
        np.minimum(rho, rho[:, k, None] + rho[None, k, :], out=rho)
    return rho


@dataclass
class ChainMetricTable:
    space: StarSpace
    rho: np.ndarray
    triangle: bool
    dominated: bool
    m1: bool
    symmetric: bool
    equivalence: list[dict]

    @property
    def passed(self) -> bool:
        return self.triangle and self.dominated and self.m1 and self.symmetric and all(
            e["passed"] for e in self.equivalence)

    def to_dict(self) -> dict:
        ids = self.space.ids
        return {
            "passed": self.passed,
            "verdicts": {"triangle": self.triangle, "rho<=d": self.dominated, "M1": self.m1,
                         "symmetric": self.symmetric},
            "ids": list(ids),
            "rho": self.rho.tolist(),
            "equivalence": self.equivalence,
        }


def chain_metric(space: StarSpace, check: bool = True, epsilons: Sequence[float] | None = None,
                 tol: float = 1e-9) -> ChainMetricTable:
    """Shortest-chain metric over the complete graph weighted by the star distance.

    The result is an ordinary metric below ``d``.  For each ``epsilon`` on a
    geometric grid (diameter times ``2**-k``) and each center the report
    records a ``delta`` with ``ball_rho(c, delta)`` inside ``ball_d(c, eps)``;
    the reverse inclusion holds with ``delta = eps`` because ``rho <= d``.
    """
    space._require_finite()
    if check:
        rep = check_axioms(space, tol=tol)
        if not rep.passed:
            raise PreconditionError(f"space fails its axioms: {sorted(rep.witnesses)}")
    D = space.distance_matrix()
    rho = shortest_paths(D)
    n = len(space)
    triangle = all(bool((rho <= rho[:, y, None] + rho[None, y, :] + 1e-12).all()) for y in range(n))
    dominated = bool((rho <= D).all())
    symmetric = bool((rho == rho.T).all())
    codes: dict = {}
    labels = np.array([codes.setdefault(k, len(codes)) for k in space.keys()])
    m1 = bool(((rho == 0) == (labels[:, None] == labels[None, :])).all())

    if epsilons is None:
        diam = float(D.max()) if D.size else 0.0
        base = diam if diam > 0 else 1.0
        epsilons = [base * 2.0 ** -k for k in range(8)]
    equivalence = []
    for eps in epsilons:
        far = np.where(D >= eps, rho, np.inf)
        delta = np.minimum(eps, far.min(axis=1)) if n else np.zeros(0)
        inner_ok = bool(((rho < delta[:, None]) <= (D < eps)).all())
        outer_ok = bool(((D < eps) <= (rho < eps)).all())
        equivalence.append({
            "epsilon": float(eps),
            "min_delta_rho_in_d": float(delta.min()) if n else None,
            "delta_d_in_rho": float(eps),
            "passed": inner_ok and outer_ok and bool((delta > 0).all()),
        })
    return ChainMetricTable(space, rho, triangle, dominated, m1, symmetric, equivalence)


def subspace_net(space: StarSpace, subset: Sequence[int], epsilon: float, strategy: str = "packing") -> EpsilonNet:
    """An epsilon-net of the subspace on ``subset``, obtained from a net of the whole space.

    The whole space is netted at ``r1 = joint_zero_radius(epsilon)``; each
    center within ``r1`` of the subset is replaced by its lowest-index such
    subset point.  Returned centers index into the subspace.
    """
    subset = [space._index(i) for i in subset]
    sub = space.subspace(subset)
    r1 = joint_zero_radius(space.definer, epsilon)
    outer = greedy_net(space, r1, strategy)
    D = space.distance_matrix()
    centers = []
    for c in outer.centers:
        near = np.flatnonzero(D[c, subset] < r1)
        if near.size and int(near[0]) not in centers:
            centers.append(int(near[0]))
    return EpsilonNet(sub, float(epsilon), sorted(centers), f"subspace-{strategy}")


def closure_net(space: StarSpace, subset: Sequence[int], epsilon: float, strategy: str = "packing") -> EpsilonNet:
    """Centers from ``subset`` (a net of it at ``joint_zero_radius(epsilon)``) meant to be dense in its closure."""
    subset = [space._index(i) for i in subset]
    r1 = joint_zero_radius(space.definer, epsilon)
    inner = greedy_net(space.subspace(subset), r1, strategy)
    return EpsilonNet(space, float(epsilon), [subset[c] for c in inner.centers], f"closure-{strategy}")


def product_net(product_space: StarSpace, epsilon: float, strategy: str = "packing") -> EpsilonNet:
    """Net of a product built as the product of factor nets.

    Factor nets use ``epsilon`` for the max distance and the ``n``-fold
    radius of ``epsilon`` for the folded distance.
    """
    factors = product_space.factors
    if not factors:
        raise ConfigurationError("not a product space")
    mode = product_space.metric.mode
    k = len(factors)
    r = kfold_radius(product_space.definer, k, epsilon) if mode == "fold" and k > 1 else float(epsilon)
    nets = [greedy_net(f, r, strategy).centers for f in factors]
    centers = [product_index(factors, combo) for combo in itertools.product(*nets)]
    return EpsilonNet(product_space, float(epsilon), centers, f"product-{strategy}")


def union_net(union_space: StarSpace, epsilon: float, strategy: str = "packing") -> EpsilonNet:
    """Net of a disjoint union as the union of part nets."""
    parts = union_space.parts
    if not parts:
        raise ConfigurationError("not a union space")
    offsets = np.concatenate([[0], np.cumsum([len(p) for p in parts])[:-1]]).astype(int).tolist()
    centers = [off + c for off, part in zip(offsets, parts) for c in greedy_net(part, epsilon, strategy).centers]
    return EpsilonNet(union_space, float(epsilon), centers, f"union-{strategy}")
