"""New star-metric spaces from old: truncation, finite products, disjoint unions."""

from __future__ import annotations

import itertools
from collections.abc import Sequence as SequenceABC
from typing import Sequence

import numpy as np

from .definer import fold_arrays
from .errors import BoundError, ConfigurationError, SizeError
from .space import Metric, StarSpace

__all__ = [
    "TruncatedMetric",
    "ProductMetric",
    "UnionMetric",
    "LazyProduct",
    "truncate",
    "product",
    "disjoint_union",
    "part_offsets",
    "product_index",
    "MATERIALIZE_CAP",
]

MATERIALIZE_CAP = 10_000


class TruncatedMetric(Metric):
    kind = "truncated"

    def __init__(self, base: Metric):
        self.base = base

    def pairwise(self, X, Y):
        return np.minimum(1.0, self.base.pairwise(X, Y))

    def paired(self, X, Y):
        return np.minimum(1.0, self.base.paired(X, Y))

    def normalize(self, x):
        return self.base.normalize(x)

    def to_spec(self):
        return {"kind": self.kind, "base": self.base.to_spec()}


class ProductMetric(Metric):
    """Coordinate-wise distances combined by the definer (``fold``) or ``max``.

    Payloads are tuples with one coordinate per factor.
    """

    kind = "product"

    def __init__(self, factors: Sequence[Metric], definer, mode: str):
        if mode not in ("fold", "max"):
            raise ConfigurationError(f"product mode must be 'fold' or 'max', got {mode!r}")
        self.factors = list(factors)
        self.definer = definer
        self.mode = mode

    def coordinate_distances(self, X, Y, paired=False) -> list[np.ndarray]:
        out = []
        for i, metric in enumerate(self.factors):
            xs = [x[i] for x in X]
            ys = [y[i] for y in Y]
            out.append(metric.paired(xs, ys) if paired else metric.pairwise(xs, ys))
        return out

    def _combine(self, parts):
        if self.mode == "max":
            return np.maximum.reduce(parts)
        return fold_arrays(self.definer, parts)

    def pairwise(self, X, Y):
        if len(X) == 0 or len(Y) == 0:
            return np.zeros((len(X), len(Y)))
        return self._combine(self.coordinate_distances(X, Y))

    def paired(self, X, Y):
        if len(X) == 0:
            return np.zeros(0)
        return self._combine(self.coordinate_distances(X, Y, paired=True))

    def normalize(self, x):
        if len(x) != len(self.factors):
            raise ValueError(f"product payload needs {len(self.factors)} coordinates, got {len(x)}")
        return tuple(m.normalize(v) for m, v in zip(self.factors, x))

    def to_spec(self):
        return {"kind": self.kind, "mode": self.mode, "factors": [m.to_spec() for m in self.factors]}


class UnionMetric(Metric):
    """Part-local distance inside a part, exactly ``1.0`` across parts.

    Payloads are ``(part_index, part_payload)`` pairs.
    """

    kind = "union"

    def __init__(self, parts: Sequence[Metric]):
        self.parts = list(parts)

    def pairwise(self, X, Y):
        out = np.ones((len(X), len(Y)))
        xp = np.array([int(x[0]) for x in X], dtype=int)
        yp = np.array([int(y[0]) for y in Y], dtype=int)
        for a, metric in enumerate(self.parts):
            rows = np.flatnonzero(xp == a)
            cols = np.flatnonzero(yp == a)
            if rows.size and cols.size:
                block = metric.pairwise([X[r][1] for r in rows], [Y[c][1] for c in cols])
                out[np.ix_(rows, cols)] = block
        return out

    def paired(self, X, Y):
        out = np.ones(len(X))
        xp = np.array([int(x[0]) for x in X], dtype=int)
        yp = np.array([int(y[0]) for y in Y], dtype=int)
        for a, metric in enumerate(self.parts):
            idx = np.flatnonzero((xp == a) & (yp == a))
            if idx.size:
                out[idx] = metric.paired([X[i][1] for i in idx], [Y[i][1] for i in idx])
        return out

    def normalize(self, x):
        part = int(x[0])
        return (part, self.parts[part].normalize(x[1]))

    def to_spec(self):
        return {"kind": self.kind, "parts": [m.to_spec() for m in self.parts]}


class LazyProduct(SequenceABC):
    """Cartesian product of payload lists, indexed in row-major order without materialising."""

    def __init__(self, coordinates: Sequence[Sequence]):
        self.coordinates = [list(c) for c in coordinates]
        self.shape = tuple(len(c) for c in self.coordinates)

    def __len__(self):
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 0

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        i = int(i)
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        idx = np.unravel_index(i, self.shape)
        return tuple(c[int(k)] for c, k in zip(self.coordinates, idx))


def truncate(space: StarSpace) -> StarSpace:
    """Same points and definer, distances ``min(1, d)``, declared bound 1."""
    metric = TruncatedMetric(space.metric)
    out = StarSpace(metric, space.definer, space.payloads, space.ids, bound=1.0, domain=space.domain,
                    name=f"truncate({space.name or space.metric.kind})")
    if space._matrix is not None:
        M = np.minimum(1.0, space._matrix)
        M.setflags(write=False)
        out._matrix = M
    return out


def product(spaces: Sequence[StarSpace], mode: str = "fold", materialize: bool | None = None,
            cap: int = MATERIALIZE_CAP) -> StarSpace:
    """Cartesian product under the folded or the max distance.

    The point set is the row-major product of the factor point sets.  It
    is materialised as a list when ``materialize`` is true, or when it is
    ``None`` and the size is at most ``cap``; otherwise payloads are a
    :class:`LazyProduct`.  Analytic factors give an evaluator-only space.
    """
    spaces = list(spaces)
    if not spaces:
        raise ConfigurationError("product needs at least one factor")
    if mode not in ("fold", "max"):
        raise ConfigurationError(f"product mode must be 'fold' or 'max', got {mode!r}")
    definer = spaces[0].definer
    for k, s in enumerate(spaces[1:], start=1):
        if s.definer != definer:
            raise ConfigurationError(f"factor {k} uses definer {s.definer}, factor 0 uses {definer}")
    metric = ProductMetric([s.metric for s in spaces], definer, mode)
    name = f"product[{mode}](" + ", ".join(s.name or s.metric.kind for s in spaces) + ")"
    if not all(s.is_finite for s in spaces):
        out = StarSpace(metric, definer, None, name=name)
    else:
        size = int(np.prod([len(s) for s in spaces], dtype=np.int64))
        if materialize and size > cap:
            raise SizeError(f"product has {size} points, above the materialisation cap of {cap}")
        if materialize or (materialize is None and size <= cap):
            payloads = list(itertools.product(*[s.payloads for s in spaces]))
            ids = ["(" + ",".join(t) + ")" for t in itertools.product(*[s.ids for s in spaces])]
            out = StarSpace(metric, definer, payloads, ids, name=name)
        else:
            lazy_ids = _LazyIds(LazyProduct([s.ids for s in spaces]))
            out = StarSpace(metric, definer, LazyProduct([s.payloads for s in spaces]), lazy_ids, name=name)
    out.factors = spaces
    return out


class _LazyIds(SequenceABC):
    def __init__(self, lazy: LazyProduct):
        self.lazy = lazy

    def __len__(self):
        return len(self.lazy)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        return "(" + ",".join(self.lazy[i]) + ")"


def _part_max(space: StarSpace):
    """Largest distance in a finite part and the pair attaining it."""
    D = space.distance_matrix()
    if D.size == 0:
        return 0.0, None
    flat = int(np.argmax(D))
    i, j = divmod(flat, D.shape[1])
    return float(D[i, j]), (i, j)


def disjoint_union(spaces: Sequence[StarSpace], auto_truncate: bool = False) -> StarSpace:
    """Tagged union; cross-part distances are exactly 1.

    Every part must have all distances at most 1.  With ``auto_truncate``
    parts are truncated first; otherwise an unbounded part raises
    :class:`BoundError` naming the offending pair.
    """
    spaces = list(spaces)
    if not spaces:
        raise ConfigurationError("union needs at least one part")
    definer = spaces[0].definer
    for k, s in enumerate(spaces[1:], start=1):
        if s.definer != definer:
            raise ConfigurationError(f"part {k} uses definer {s.definer}, part 0 uses {definer}")
    parts = []
    for k, s in enumerate(spaces):
        s._require_finite()
        if s.bound is not None and s.bound <= 1.0:
            parts.append(s)
            continue
        worst, pair = _part_max(s)
        if worst > 1.0:
            if not auto_truncate:
                i, j = pair
                raise BoundError(
                    f"part {k}: d({s.ids[i]}, {s.ids[j]}) = {worst!r} > 1; truncate the part or pass auto_truncate",
                    part=k, pair=(s.ids[i], s.ids[j]), value=worst,
                )
            s = truncate(s)
        parts.append(s)
    metric = UnionMetric([s.metric for s in parts])
    payloads = [(k, p) for k, s in enumerate(parts) for p in s.payloads]
    ids = [f"{k}:{i}" for k, s in enumerate(parts) for i in s.ids]
    name = "union(" + ", ".join(s.name or s.metric.kind for s in parts) + ")"
    out = StarSpace(metric, definer, payloads, ids, bound=1.0, name=name)
    out.parts = parts
    return out


def part_offsets(union: StarSpace) -> list[int]:
    """Index of the first point of each part in a union space."""
    offsets, last = [], None
    for i, (part, _) in enumerate(union.payloads):
        if part != last:
            offsets.append(i)
            last = part
    return offsets


def product_index(spaces: Sequence[StarSpace], coordinate_indices: Sequence[int]) -> int:
    """Row-major index in the product of the point with the given factor indices."""
    return int(np.ravel_multi_index(tuple(int(i) for i in coordinate_indices), tuple(len(s) for s in spaces)))


