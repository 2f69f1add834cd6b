"""Star-metric spaces: finite point sets and 1-D analytic domains.

A :class:`StarSpace` pairs a distance evaluator (:class:`Metric`) with the
:class:`~starmetric.definer.TDefiner` under which the generalised triangle
inequality ``d(x, y) <= d(x, z) * d(z, y)`` is supposed to hold.  Finite
spaces carry their payloads; analytic spaces carry an interval ``domain``
and can be sampled.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import definer as _definer
from .definer import TDefiner
from .errors import DomainError, SizeError

__all__ = [
    "Metric",
    "Euclidean",
    "EuclideanPower",
    "SqrtDiff",
    "Discrete",
    "Dyadic",
    "MatrixMetric",
    "StarSpace",
    "AxiomReport",
    "from_points",
    "from_matrix",
    "halfline_sqrt_diff",
    "interval_lukasiewicz",
    "dist",
    "check_axioms",
    "ball",
    "ball_intervals",
    "closed_ball",
    "payload_key",
    "DEFAULT_AXIOM_CAP",
]

DEFAULT_AXIOM_CAP = 500
M3_ABS_TOL = 1e-12


def payload_key(x) -> Any:
    """Hashable key with exact bit equality for floats, recursing into tuples."""
    if isinstance(x, (tuple, list)):
        return tuple(payload_key(v) for v in x)
    if isinstance(x, np.ndarray):
        return tuple(payload_key(v) for v in x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return ("b", bool(x))
    if isinstance(x, (int, float, np.integer, np.floating)):
        return struct.pack("<d", float(x))
    return x


def format_payload(x) -> str:
    if isinstance(x, (tuple, list)):
        return "(" + ",".join(format_payload(v) for v in x) + ")"
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if not float(x).is_integer() else f"{float(x):g}"
    return str(x)


class Metric:
    """A distance evaluator on payloads.

    Subclasses implement :meth:`pairwise`; scalar calls go through it so a
    value reported anywhere can be reproduced bit for bit.
    """

    kind = "abstract"
    default_definer: TDefiner | None = None

    def pairwise(self, X: Sequence, Y: Sequence) -> np.ndarray:
        raise NotImplementedError

    def paired(self, X: Sequence, Y: Sequence) -> np.ndarray:
        """Element-wise distances ``d(X[i], Y[i])``."""
        return np.array([self.pairwise([x], [y])[0, 0] for x, y in zip(X, Y)], dtype=float)

    def __call__(self, x, y) -> float:
        return float(self.pairwise([x], [y])[0, 0])

    def normalize(self, x):
        return x

    def to_spec(self) -> dict:
        return {"kind": self.kind}

    def __repr__(self):
        return f"{type(self).__name__}()"


def _as_matrix(X) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


class _VectorMetric(Metric):
    """Metrics on real vectors; 1-D payloads may be plain floats."""

    def _dist(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check(self, arr):
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"{self.kind} payloads must be finite")
        return arr

    def pairwise(self, X, Y):
        A = self._check(_as_matrix(X))
        B = self._check(_as_matrix(Y))
        if A.shape[1] != B.shape[1]:
            raise ValueError(f"payload dimensions differ: {A.shape[1]} vs {B.shape[1]}")
        return self._dist(A[:, None, :], B[None, :, :])

    def paired(self, X, Y):
        A = self._check(_as_matrix(X))
        B = self._check(_as_matrix(Y))
        return self._dist(A, B)

    def normalize(self, x):
        arr = np.asarray(x, dtype=float).ravel()
        if arr.size == 1:
            return float(arr[0])
        return tuple(float(v) for v in arr)


class Euclidean(_VectorMetric):
    kind = "euclidean"
    default_definer = _definer.lukasiewicz()

    def _dist(self, A, B):
        diff = A - B
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def interval_guess(self, c, r):
        return c - r, c + r


class EuclideanPower(_VectorMetric):
    """``||x - y|| ** p``: a star-metric for ``power(p)``."""

    kind = "euclidean_power"

    def __init__(self, p: float):
        if not p > 0:
            raise ValueError("p must be > 0")
        self.p = float(p)
        self.default_definer = _definer.power(self.p)

    def _dist(self, A, B):
        diff = A - B
        return np.sqrt(np.sum(diff * diff, axis=-1)) ** self.p

    def interval_guess(self, c, r):
        w = r ** (1.0 / self.p)
        return c - w, c + w

    def to_spec(self):
        return {"kind": self.kind, "p": self.p}

    def __repr__(self):
        return f"EuclideanPower({self.p:g})"


class SqrtDiff(_VectorMetric):
    """``(sqrt(a) - sqrt(b))**2`` on ``[0, inf)``, summed over coordinates."""

    kind = "sqrt_diff"
    default_definer = _definer.power(2.0)

    def _check(self, arr):
        super()._check(arr)
        if np.any(arr < 0):
            raise DomainError("sqrt_diff payloads must be non-negative")
        return arr

    def _dist(self, A, B):
        diff = np.sqrt(A) - np.sqrt(B)
        return np.sum(diff * diff, axis=-1)

    def interval_guess(self, c, r):
        sc, sr = np.sqrt(c), np.sqrt(r)
        return np.maximum(sc - sr, 0.0) ** 2, (sc + sr) ** 2


class Discrete(Metric):
    """0 on equal payloads, 1 otherwise."""

    kind = "discrete"
    default_definer = _definer.lukasiewicz()

    def pairwise(self, X, Y):
        kx = [payload_key(x) for x in X]
        ky = [payload_key(y) for y in Y]
        return np.array([[0.0 if a == b else 1.0 for b in ky] for a in kx], dtype=float).reshape(len(kx), len(ky))


class Dyadic(_VectorMetric):
    """Dyadic-tree ultrametric on ``[0, inf)``.

    ``d(x, y)`` is the length ``2**j`` of the smallest dyadic interval
    ``[k 2**j, (k+1) 2**j)`` containing both points; for vectors the maximum
    over coordinates.  Pairs naturally with the maximum definer.
    """

    kind = "dyadic"
    default_definer = _definer.maximum()

    def _check(self, arr):
        super()._check(arr)
        if np.any(arr < 0):
            raise DomainError("dyadic payloads must be non-negative")
        return arr

    def _dist(self, A, B):
        A, B = np.broadcast_arrays(A, B)
        out = np.zeros(A.shape)
        differ = A != B
        if differ.any():
            a, b = A[differ], B[differ]
            gap = np.abs(a - b)
            j = np.floor(np.log2(gap)).astype(int)
            pending = np.ones(a.shape, dtype=bool)
            while pending.any():
                same = np.floor(np.ldexp(a, -j)) == np.floor(np.ldexp(b, -j))
                pending = ~same
                j = np.where(pending, j + 1, j)
            out[differ] = np.ldexp(1.0, j)
        return out.max(axis=-1)


class MatrixMetric(Metric):
    """Explicit distance matrix; payloads are row indices."""

    kind = "matrix"

    def __init__(self, matrix):
        D = np.asarray(matrix, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {D.shape}")
        self.matrix = D

    def pairwise(self, X, Y):
        xi = np.asarray(X, dtype=int).ravel()
        yi = np.asarray(Y, dtype=int).ravel()
        n = self.matrix.shape[0]
        if xi.size and (xi.min() < 0 or xi.max() >= n) or yi.size and (yi.min() < 0 or yi.max() >= n):
            raise IndexError("matrix payload out of range")
        return self.matrix[np.ix_(xi, yi)]

    def paired(self, X, Y):
        return self.matrix[np.asarray(X, dtype=int), np.asarray(Y, dtype=int)]

    def normalize(self, x):
        return int(x)


METRICS = {
    "euclidean": Euclidean,
    "euclidean_lukasiewicz": Euclidean,
    "sqrt_diff": SqrtDiff,
    "discrete": Discrete,
    "dyadic": Dyadic,
}


def metric_from_spec(spec) -> Metric:
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind == "euclidean_power":
        if "p" not in spec:
            raise ValueError("euclidean_power metric needs field 'p'")
        return EuclideanPower(float(spec["p"]))
    if kind in METRICS:
        return METRICS[kind]()
    raise ValueError(f"unknown metric kind {kind!r}")


class StarSpace:
    """A star-metric space.

    Finite spaces have ``payloads`` (and ``ids`` used in reports); analytic
    spaces have ``payloads=None`` and a 1-D ``domain`` interval.
    """

    def __init__(
        self,
        metric: Metric,
        definer: TDefiner,
        payloads: Sequence | None = None,
        ids: Sequence[str] | None = None,
        bound: float | None = None,
        domain: tuple[float, float] | None = None,
        name: str = "",
    ):
        self.metric = metric
        self.definer = definer
        self.payloads = payloads
        self.bound = bound
        self.domain = domain
        self.name = name
        if payloads is not None:
            if ids is None:
                ids = [format_payload(p) for p in payloads]
            if len(ids) != len(payloads):
                raise ValueError("ids and payloads differ in length")
        self.ids = list(ids) if isinstance(ids, (list, tuple, np.ndarray)) else ids
        self._matrix: np.ndarray | None = None
        # set by construct.product / construct.disjoint_union
        self.factors: list[StarSpace] | None = None
        self.parts: list[StarSpace] | None = None

    def __repr__(self):
        size = f"n={len(self.payloads)}" if self.payloads is not None else f"domain={self.domain}"
        return f"StarSpace({self.name or self.metric.kind}, {self.definer}, {size})"

    @property
    def is_finite(self) -> bool:
        return self.payloads is not None

    def __len__(self):
        if self.payloads is None:
            raise TypeError("analytic space has no length; sample it first")
        return len(self.payloads)

    def _require_finite(self):
        if self.payloads is None:
            raise TypeError("operation needs a finite space; sample the analytic space first")

    def _index(self, i) -> int:
        self._require_finite()
        i = int(i)
        if not 0 <= i < len(self.payloads):
            raise IndexError(f"point index {i} out of range for {len(self.payloads)} points")
        return i

    def payload_distance(self, x, y) -> float:
        return self.metric(x, y)

    def pairwise(self, X, Y) -> np.ndarray:
        return self.metric.pairwise(X, Y)

    def dist(self, i, j) -> float:
        i, j = self._index(i), self._index(j)
        if self._matrix is not None:
            return float(self._matrix[i, j])
        return self.metric(self.payloads[i], self.payloads[j])

    def distance_matrix(self) -> np.ndarray:
        """All pairwise distances, computed once and cached (read-only)."""
        self._require_finite()
        if self._matrix is None:
            D = np.asarray(self.metric.pairwise(self.payloads, self.payloads), dtype=float)
            D.setflags(write=False)
            self._matrix = D
        return self._matrix

    def row(self, i) -> np.ndarray:
        i = self._index(i)
        if self._matrix is not None:
            return self._matrix[i]
        return self.metric.pairwise([self.payloads[i]], self.payloads)[0]

    def distances_to(self, payload, indices=None) -> np.ndarray:
        """Distances from an arbitrary payload to the stored points."""
        self._require_finite()
        if indices is None:
            return self.metric.pairwise([payload], self.payloads)[0]
        pts = [self.payloads[int(k)] for k in indices]
        if not pts:
            return np.zeros(0)
        return self.metric.pairwise([payload], pts)[0]

    def keys(self) -> list:
        self._require_finite()
        return [payload_key(p) for p in self.payloads]

    def subspace(self, indices: Iterable[int]) -> "StarSpace":
        idx = [self._index(i) for i in indices]
        sub = StarSpace(
            self.metric,
            self.definer,
            [self.payloads[i] for i in idx],
            [self.ids[i] for i in idx],
            bound=self.bound,
            name=self.name,
        )
        if self._matrix is not None:
            M = self._matrix[np.ix_(idx, idx)].copy()
            M.setflags(write=False)
            sub._matrix = M
        return sub

    def contains(self, x) -> bool:
        if self.domain is None:
            return True
        lo, hi = self.domain
        return bool(lo <= float(x) <= hi)

    def sample(self, n: int, seed: int = 0, low: float | None = None, high: float | None = None) -> "StarSpace":
        """Draw ``n`` uniform points from the analytic domain (clipped to ``[low, high]``)."""
        if self.domain is None:
            raise TypeError("only analytic spaces can be sampled")
        lo = self.domain[0] if low is None else max(low, self.domain[0])
        hi = self.domain[1] if high is None else min(high, self.domain[1])
        if not math.isfinite(hi):
            hi = lo + 100.0
        rng = np.random.default_rng(seed)
        pts = [float(v) for v in np.sort(rng.uniform(lo, hi, size=n))]
        return StarSpace(self.metric, self.definer, pts, name=self.name)

    def ball_interval(self, center, r, closed=True):
        """Payload interval ``[lo, hi]`` of the closed ball around ``center``.

        Only for 1-D analytic spaces whose distance grows with ``|y - center|``
        on each side; endpoints are bisected to adjacent floats and always lie
        inside the ball.
        """
        lo, hi = ball_intervals(self, np.array([float(center)]), np.array([float(r)]))
        return float(lo[0]), float(hi[0])


def _bisect_edge(metric, centers, radii, domain, direction, max_iter):
    """Farthest float from each center, on one side, still inside the closed ball."""
    dom_lo, dom_hi = domain

    def within(y):
        return metric.paired(centers, y) <= radii

    inner = centers.copy()
    if direction > 0:
        if math.isfinite(dom_hi):
            outer = np.full(centers.shape, float(dom_hi))
        else:
            step = np.maximum(1.0, np.abs(centers))
            outer = centers + step
            grow = within(outer)
            while grow.any():
                step = np.where(grow, step * 2.0, step)
                outer = np.where(grow, centers + step, outer)
                grow = within(outer)
                if np.any(~np.isfinite(outer)):
                    raise DomainError("ball interval search diverged")
    else:
        outer = np.full(centers.shape, float(dom_lo))
    done = within(outer)
    inner = np.where(done, outer, inner)
    for _ in range(max_iter):
        active = ~done
        if not active.any():
            break
        mid = 0.5 * (inner + outer)
        stuck = active & ((mid == inner) | (mid == outer))
        done |= stuck
        active &= ~stuck
        ok = within(mid)
        inner = np.where(active & ok, mid, inner)
        outer = np.where(active & ~ok, mid, outer)
    return inner


def _snap_edge(metric, centers, radii, guess, domain, direction, steps=32):
    """Move a closed-form guess to the float boundary of the ball; returns (edge, converged)."""
    bound = float(domain[0] if direction < 0 else domain[1])
    away = -np.inf if direction < 0 else np.inf
    g = np.clip(guess, domain[0], domain[1])

    def within(y):
        return metric.paired(centers, y) <= radii

    for _ in range(steps):
        bad = ~within(g)
        if not bad.any():
            break
        g = np.where(bad, np.nextafter(g, centers), g)
    for _ in range(steps):
        nxt = np.clip(np.nextafter(g, away), domain[0], domain[1])
        grow = (g != bound) & within(nxt)
        if not grow.any():
            break
        g = np.where(grow, nxt, g)
    ok = within(g) & ((g == bound) | ~within(np.clip(np.nextafter(g, away), domain[0], domain[1])))
    return g, ok


def ball_intervals(space: StarSpace, centers: np.ndarray, radii: np.ndarray, max_iter: int = 2200):
    """Vectorised :meth:`StarSpace.ball_interval` for many balls at once."""
    if space.domain is None:
        raise TypeError("ball intervals need an analytic 1-D space")
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    metric = space.metric
    domain = (float(space.domain[0]), float(space.domain[1]))
    guess = getattr(metric, "interval_guess", None)
    edges = []
    for direction, side in ((-1, 0), (+1, 1)):
        if guess is None:
            edges.append(_bisect_edge(metric, centers, radii, domain, direction, max_iter))
            continue
        edge, ok = _snap_edge(metric, centers, radii, guess(centers, radii)[side], domain, direction)
        if not ok.all():
            miss = ~ok
            edge[miss] = _bisect_edge(metric, centers[miss], radii[miss], domain, direction, max_iter)
        edges.append(edge)
    return edges[0], edges[1]


def dist(space: StarSpace, x: int, y: int) -> float:
    return space.dist(x, y)


def ball(space: StarSpace, center: int, r: float) -> frozenset:
    """Indices at distance strictly below ``r`` from ``center``."""
    if not r > 0:
        raise ValueError("ball radius must be > 0")
    row = space.row(center)
    return frozenset(int(i) for i in np.flatnonzero(row < r))


def closed_ball(space: StarSpace, center: int, r: float) -> frozenset:
    row = space.row(center)
    return frozenset(int(i) for i in np.flatnonzero(row <= r))


@dataclass
class AxiomReport:
    """Verdicts for M1 (identity), M2 (symmetry), M3 (star triangle).

    ``range`` records whether every distance was finite and non-negative.
    Witnesses use point ids and carry the offending values; ``indices``
    holds the internal positions.
    """

    m1: bool
    m2: bool
    m3: bool
    range: bool
    witnesses: dict[str, dict] = field(default_factory=dict)
    pairs_checked: int = 0
    triples_checked: int = 0
    tol: float = 1e-9
    abs_tol: float = M3_ABS_TOL

    @property
    def passed(self) -> bool:
        return self.m1 and self.m2 and self.m3 and self.range

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "verdicts": {"M1": self.m1, "M2": self.m2, "M3": self.m3, "range": self.range},
            "witnesses": self.witnesses,
            "pairs_checked": self.pairs_checked,
            "triples_checked": self.triples_checked,
            "tol": self.tol,
            "abs_tol": self.abs_tol,
        }


def _first_pair(mask: np.ndarray):
    flat = np.flatnonzero(mask)
    if flat.size == 0:
        return None
    return divmod(int(flat[0]), mask.shape[1])


def _m3_scan(D, definer, tol, abs_tol, xs):
    """First violating (x, y, z) over the given x values, in lexicographic order."""
    for x in xs:
        rhs = definer.apply(D[x][:, None], D)  # rhs[z, y] = d(x,z) * d(z,y)
        viol = D[x][None, :] > rhs * (1.0 + tol) + abs_tol
        hit = _first_pair(viol.T)  # (y, z) order
        if hit is not None:
            return (int(x), hit[0], hit[1])
    return None


def check_axioms(
    space: StarSpace,
    tol: float = 1e-9,
    cap: int = DEFAULT_AXIOM_CAP,
    abs_tol: float = M3_ABS_TOL,
    workers: int | None = None,
) -> AxiomReport:
    """Brute-force M1, M2 over all pairs and M3 over all ordered triples.

    M3 accepts ``d(x,y) <= (d(x,z) * d(z,y)) (1 + tol) + abs_tol``.  M1
    equality is payload equality (exact bits), so duplicate payloads at
    distance 0 pass while distinct payloads at distance 0 fail.  The witness
    for each failed axiom is the lexicographically first violation.
    """
    space._require_finite()
    n = len(space)
    if n > cap:
        raise SizeError(f"{n} points exceed the axiom-check cap of {cap}; sample first")
    if workers is None:
        workers = int(os.environ.get("STARMETRIC_THREADS", "1") or 1)
    D = space.distance_matrix()
    ids = space.ids
    witnesses: dict[str, dict] = {}

    bad_range = ~np.isfinite(D) | (D < 0)
    hit = _first_pair(bad_range)
    ok_range = hit is None
    if hit is not None:
        i, j = hit
        witnesses["range"] = {"x": ids[i], "y": ids[j], "indices": [i, j], "d(x,y)": float(D[i, j])}

    codes: dict = {}
    labels = np.array([codes.setdefault(k, len(codes)) for k in space.keys()])
    same = labels[:, None] == labels[None, :]
    hit = _first_pair((D == 0) != same)
    ok_m1 = hit is None
    if hit is not None:
        i, j = hit
        witnesses["M1"] = {
            "x": ids[i], "y": ids[j], "indices": [i, j], "d(x,y)": float(D[i, j]),
            "same_payload": bool(same[i, j]),
        }

    with np.errstate(invalid="ignore"):
        asym = ~(np.abs(D - D.T) <= tol * np.maximum(D, D.T) + abs_tol)
    hit = _first_pair(asym)
    ok_m2 = hit is None
    if hit is not None:
        i, j = hit
        witnesses["M2"] = {"x": ids[i], "y": ids[j], "indices": [i, j], "d(x,y)": float(D[i, j]), "d(y,x)": float(D[j, i])}

    with np.errstate(invalid="ignore", over="ignore"):
        if workers > 1 and n > 32:
            chunks = np.array_split(np.arange(n), workers)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                found = list(pool.map(lambda xs: _m3_scan(D, space.definer, tol, abs_tol, xs), chunks))
            found = [f for f in found if f is not None]
            triple = min(found) if found else None
        else:
            triple = _m3_scan(D, space.definer, tol, abs_tol, range(n))
    ok_m3 = triple is None
    if triple is not None:
        x, y, z = triple
        rhs = float(space.definer.apply(D[x, z], D[z, y]))
        witnesses["M3"] = {
            "x": ids[x], "y": ids[y], "z": ids[z], "indices": [x, y, z],
            "d(x,y)": float(D[x, y]), "d(x,z)": float(D[x, z]), "d(z,y)": float(D[z, y]),
            "d(x,z)*d(z,y)": rhs,
        }

    return AxiomReport(ok_m1, ok_m2, ok_m3, ok_range, witnesses, n * n, n ** 3, float(tol), float(abs_tol))


def _default_definer(metric: Metric, definer):
    if definer is None:
        if metric.default_definer is None:
            raise ValueError(f"metric {metric.kind!r} has no default definer; pass one")
        return metric.default_definer
    if isinstance(definer, (str, dict)):
        return TDefiner.from_spec(definer)
    return definer


def from_points(points, metric="euclidean", definer=None, ids=None, bound=None, name="") -> StarSpace:
    """Finite space over vector (or scalar) payloads.

    ``metric`` is a :class:`Metric` or a kind name; the definer defaults to
    the one the metric is known to satisfy.
    """
    if not isinstance(metric, Metric):
        metric = metric_from_spec(metric)
    definer = _default_definer(metric, definer)
    payloads = [metric.normalize(p) for p in points]
    if isinstance(metric, _VectorMetric) and payloads:
        metric._check(_as_matrix(payloads))  # domain errors at construction, not first use
    return StarSpace(metric, definer, payloads, ids, bound=bound, name=name)


def from_matrix(matrix, definer, ids=None, name="") -> StarSpace:
    metric = MatrixMetric(matrix)
    n = metric.matrix.shape[0]
    if ids is None:
        ids = [str(i) for i in range(n)]
    return StarSpace(metric, _default_definer(metric, definer), list(range(n)), ids, name=name)


def halfline_sqrt_diff() -> StarSpace:
    """``([0, inf), (sqrt(x) - sqrt(y))**2, power(2))``: complete, not a metric."""
    return StarSpace(SqrtDiff(), _definer.power(2.0), domain=(0.0, math.inf), name="halfline_sqrt_diff")


def interval_lukasiewicz(a: float = 0.0, b: float = 1.0) -> StarSpace:
    """``([a, b], |x - y|, +)``."""
    if not a < b:
        raise ValueError("need a < b")
    return StarSpace(Euclidean(), _definer.lukasiewicz(), domain=(float(a), float(b)), name="interval_lukasiewicz")


EXEMPLARS = {
    "halfline_sqrt_diff": halfline_sqrt_diff,
    "interval_lukasiewicz": interval_lukasiewicz,
}
