"""Sequences in star-metric spaces.

Convergence and Cauchy verdicts are certificates about a finite prefix with
an explicit schedule of (epsilon, threshold) rows; nothing here decides a
property of an infinite sequence.  The nested-set and Baire routines work
on the 1-D analytic exemplars, where closed balls are payload intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cover import greedy_net
from .definer import joint_zero_radius
from .errors import (
    ConfigurationError,
    DensityViolationError,
    InsufficientDataError,
    InvalidFamilyError,
    PreconditionError,
)
from .space import StarSpace, ball_intervals, format_payload, payload_key

__all__ = [
    "Generator",
    "SequenceTrace",
    "ModulusSchedule",
    "SequenceVerdict",
    "converges_to",
    "is_cauchy_prefix",
    "radius_schedule",
    "cauchy_via_limit",
    "Extraction",
    "extract_cauchy_subsequence",
    "project_product_cauchy",
    "NestedFamily",
    "CantorResult",
    "cantor_intersection",
    "PointComplement",
    "WholeSpace",
    "EmptySet",
    "grid_rationals",
    "BaireResult",
    "baire_point",
]

MAX_PAIRWISE_TERMS = 20_000
DEFAULT_MIN_TAIL = 16


# -- closed-form sequences ----------------------------------------------------

GENERATOR_KINDS = ("constant", "power_law", "alternating", "geometric_sum", "product")


@dataclass(frozen=True)
class Generator:
    """A closed-form sequence ``n -> x_n``.

    kinds: ``constant`` (value), ``power_law`` (limit + scale * n**-exponent),
    ``alternating`` (values[n % len]), ``geometric_sum`` (scale * sum of
    ratio**i for i = 1..n) and ``product`` (a tuple of coordinate generators).
    """

    kind: str
    params: tuple = ()

    @classmethod
    def make(cls, kind: str, **params) -> "Generator":
        if kind not in GENERATOR_KINDS:
            raise ConfigurationError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")
        if kind == "product":
            params["coordinates"] = tuple(
                c if isinstance(c, Generator) else cls.from_spec(c) for c in params.get("coordinates", ()))
        elif kind == "alternating":
            params["values"] = tuple(params.get("values", (0.0, 1.0)))
            if not params["values"]:
                raise ConfigurationError("alternating generator needs at least one value")
        return cls(kind, tuple(sorted(params.items())))

    @classmethod
    def from_spec(cls, spec) -> "Generator":
        if isinstance(spec, Generator):
            return spec
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigurationError("generator spec must be an object with a 'kind' field")
        rest = {k: v for k, v in spec.items() if k != "kind"}
        return cls.make(spec["kind"], **rest)

    @property
    def p(self) -> dict:
        return dict(self.params)

    def to_spec(self) -> dict:
        out = {"kind": self.kind}
        for k, v in self.params:
            if k == "coordinates":
                out[k] = [c.to_spec() for c in v]
            elif isinstance(v, tuple):
                out[k] = list(v)
            else:
                out[k] = v
        return out

    def values(self, ns: np.ndarray) -> list:
        ns = np.asarray(ns, dtype=np.int64)
        p = self.p
        if self.kind == "constant":
            return [p.get("value", 0.0)] * ns.size
        if self.kind == "power_law":
            if np.any(ns < 1):
                raise InsufficientDataError("power_law terms start at n = 1")
            vals = p.get("limit", 0.0) + p.get("scale", 1.0) * ns.astype(float) ** -float(p.get("exponent", 1.0))
            return vals.tolist()
        if self.kind == "alternating":
            vals = p["values"]
            return [vals[int(n) % len(vals)] for n in ns]
        if self.kind == "geometric_sum":
            q = float(p.get("ratio", 0.5))
            scale = float(p.get("scale", 1.0))
            out, acc, last = [], 0.0, 0
            for n in ns:  # running sum keeps each term the exact float partial sum
                if n < last:
                    acc, last = 0.0, 0
                while last < n:
                    last += 1
                    acc += q ** last
                out.append(scale * acc)
            return out
        coords = [g.values(ns) for g in p["coordinates"]]
        return list(zip(*coords))

    def coordinate(self, i: int) -> "Generator | None":
        if self.kind != "product":
            return None
        return self.p["coordinates"][i]


def _valid_point(space: StarSpace, x, keys: set | None) -> bool:
    if space.factors:
        return len(x) == len(space.factors) and all(
            _valid_point(f, v, None if not f.is_finite else set(f.keys())) for f, v in zip(space.factors, x))
    if keys is not None:
        return payload_key(x) in keys
    return space.contains(x)


class SequenceTrace:
    """A finite prefix ``x_start, x_start+1, ...`` of a sequence of payloads.

    With a generator the prefix can be extended on demand.
    """

    def __init__(self, space: StarSpace, terms: Sequence | None = None, start: int = 0,
                 generator: Generator | None = None, length: int | None = None):
        self.space = space
        self.start = int(start)
        self.generator = Generator.from_spec(generator) if generator is not None else None
        if terms is None:
            if self.generator is None or length is None:
                raise InsufficientDataError("a trace needs terms, or a generator and a length")
            terms = self.generator.values(np.arange(self.start, self.start + int(length)))
        self.terms: list = []
        self._keys = set(space.keys()) if space.is_finite and not space.factors and len(space) <= 1_000_000 else None
        self._append(terms)

    def _append(self, terms):
        norm = self.space.metric.normalize
        base = self.start + len(self.terms)
        for k, t in enumerate(terms):
            x = norm(t)
            if not _valid_point(self.space, x, self._keys):
                raise ConfigurationError(f"term x_{base + k} = {format_payload(x)} is not a point of the space")
            self.terms.append(x)

    def __len__(self):
        return len(self.terms)

    @property
    def last(self) -> int:
        return self.start + len(self.terms) - 1

    def term(self, n: int):
        self.extend_to(n)
        return self.terms[n - self.start]

    def extend_to(self, n: int):
        """Make sure ``x_n`` is available, generating terms if needed."""
        if n <= self.last:
            return
        if self.generator is None:
            raise InsufficientDataError(f"prefix ends at x_{self.last}; x_{n} is needed and there is no generator")
        self._append(self.generator.values(np.arange(self.last + 1, n + 1)))

    def window(self, lo: int) -> list:
        return self.terms[max(lo - self.start, 0):]

    def to_spec(self) -> dict:
        out = {"start": self.start, "terms": [format_payload(t) for t in self.terms]}
        if self.generator is not None:
            out["generator"] = self.generator.to_spec()
        return out


@dataclass(frozen=True)
class ModulusSchedule:
    """Strictly decreasing epsilons with optional thresholds ``N_k`` (term indices).

    Without thresholds each verdict discovers the least ones the prefix supports.
    """

    epsilons: tuple
    thresholds: tuple | None = None

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps:
            raise ConfigurationError("schedule needs at least one epsilon")
        if not all(e > 0 and math.isfinite(e) for e in eps):
            raise ConfigurationError("schedule epsilons must be finite and positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigurationError("schedule epsilons must be strictly decreasing")
        if self.thresholds is not None:
            th = tuple(int(t) for t in self.thresholds)
            if len(th) != len(eps):
                raise ConfigurationError("schedule needs one threshold per epsilon")
            object.__setattr__(self, "thresholds", th)

    @classmethod
    def default(cls, count: int = 20) -> "ModulusSchedule":
        return cls(tuple(2.0 ** -k for k in range(1, count + 1)))

    @classmethod
    def from_spec(cls, spec) -> "ModulusSchedule":
        if spec is None or spec == "default":
            return cls.default()
        if isinstance(spec, ModulusSchedule):
            return spec
        if not isinstance(spec, dict):
            raise ConfigurationError("schedule must be 'default' or an object")
        if "epsilons" in spec:
            return cls(tuple(spec["epsilons"]), spec.get("thresholds"))
        if spec.get("kind") == "geometric":
            ratio = float(spec.get("ratio", 0.5))
            count = int(spec.get("count", 20))
            first = float(spec.get("first", ratio))
            return cls(tuple(first * ratio ** k for k in range(count)))
        raise ConfigurationError("schedule object needs 'epsilons' or kind 'geometric'")

    def to_dict(self) -> dict:
        return {"epsilons": list(self.epsilons),
                "thresholds": None if self.thresholds is None else list(self.thresholds)}


@dataclass
class SequenceVerdict:
    property: str
    passed: bool
    schedule: ModulusSchedule
    witness: dict | None
    probed_until: int
    discovered: bool

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "passed": self.passed,
            "scope": "finite prefix only",
            "schedule": self.schedule.to_dict(),
            "thresholds_discovered": self.discovered,
            "probed_until": self.probed_until,
            "witness": self.witness,
        }


def _needed_length(trace: SequenceTrace, schedule: ModulusSchedule, min_tail: int):
    top = max(schedule.thresholds)
    if top > trace.last:
        if trace.generator is None:
            raise InsufficientDataError(f"threshold N = {top} lies beyond the prefix end x_{trace.last}")
        trace.extend_to(top + min_tail - 1)


def _limit_distances(trace: SequenceTrace, limit) -> np.ndarray:
    return np.asarray(trace.space.metric.pairwise([limit], trace.terms)[0], dtype=float)


def converges_to(trace: SequenceTrace, limit, schedule: ModulusSchedule | None = None,
                 min_tail: int = DEFAULT_MIN_TAIL, max_terms: int = 1 << 16) -> SequenceVerdict:
    """Check ``d(limit, x_n) < eps_k`` for every probed ``n >= N_k``.

    With thresholds the first failing row gives the witness ``(k, n)``.
    Without them ``N_k`` is one past the last violation, and each row must
    leave at least ``min_tail`` probed terms (extending through the
    generator up to ``max_terms``).
    """
    schedule = schedule or ModulusSchedule.default()
    limit = trace.space.metric.normalize(limit)
    if not _valid_point(trace.space, limit, trace._keys):
        raise ConfigurationError(f"limit {format_payload(limit)} is not a point of the space")
    if len(trace) == 0:
        raise InsufficientDataError("empty trace")
    eps = np.array(schedule.epsilons)

    if schedule.thresholds is not None:
        _needed_length(trace, schedule, min_tail)
        d = _limit_distances(trace, limit)
        for k, (e, N) in enumerate(zip(schedule.epsilons, schedule.thresholds), start=1):
            lo = max(N - trace.start, 0)
            bad = np.flatnonzero(d[lo:] >= e)
            if bad.size:
                n = lo + int(bad[0])
                return SequenceVerdict("converges_to", False, schedule, {
                    "k": k, "epsilon": e, "threshold": N, "n": trace.start + n, "distance": float(d[n])},
                    trace.last, False)
        return SequenceVerdict("converges_to", True, schedule, None, trace.last, False)

    while True:
        d = _limit_distances(trace, limit)
        viol = d[None, :] >= eps[:, None]
        has = viol.any(axis=1)
        last_bad = np.where(has, len(d) - 1 - np.argmax(viol[:, ::-1], axis=1), -1)
        tails = len(d) - 1 - last_bad
        short = tails < min_tail
        if not short.any() or trace.generator is None or len(trace) >= max_terms:
            break
        trace.extend_to(trace.start + min(2 * len(trace), max_terms) - 1)
    thresholds = tuple(int(trace.start + b + 1) for b in last_bad)
    resolved = ModulusSchedule(schedule.epsilons, thresholds)
    if short.any():
        k = int(np.flatnonzero(short)[0])
        n = int(last_bad[k])
        return SequenceVerdict("converges_to", False, resolved, {
            "k": k + 1, "epsilon": float(eps[k]), "n": trace.start + n, "distance": float(d[n]),
            "reason": f"tail after the last violation has fewer than {min_tail} terms",
        }, trace.last, True)
    return SequenceVerdict("converges_to", True, resolved, None, trace.last, True)


def _forward_tail_max(trace: SequenceTrace, block: int = 512) -> np.ndarray:
    """``out[i]`` is the largest ``d(x_i, x_j)`` over later prefix terms ``j > i``."""
    L = len(trace)
    if L > MAX_PAIRWISE_TERMS:
        raise InsufficientDataError(f"pairwise check limited to {MAX_PAIRWISE_TERMS} terms, prefix has {L}")
    metric = trace.space.metric
    terms = trace.terms
    out = np.zeros(L)
    for a in range(0, L, block):
        b = min(a + block, L)
        D = np.asarray(metric.pairwise(terms[a:b], terms[a:]), dtype=float)
        cols = np.arange(a, L)
        rows = np.arange(a, b)
        D = np.where(cols[None, :] > rows[:, None], D, 0.0)
        out[a:b] = D.max(axis=1) if D.size else 0.0
    return out


def _cauchy_witness(trace: SequenceTrace, row_max: np.ndarray, lo: int, e: float) -> tuple[int, int, float]:
    m = lo + int(np.flatnonzero(row_max[lo:] >= e)[0])
    row = np.asarray(trace.space.metric.pairwise([trace.terms[m]], trace.terms[m + 1:])[0], dtype=float)
    n = m + 1 + int(np.flatnonzero(row >= e)[0])
    return m, n, float(row[n - m - 1])


def is_cauchy_prefix(trace: SequenceTrace, schedule: ModulusSchedule | None = None,
                     min_tail: int = DEFAULT_MIN_TAIL, max_terms: int = 1 << 13) -> SequenceVerdict:
    """Check ``d(x_m, x_n) < eps_k`` for all probed ``m, n >= N_k``.

    The witness on failure is the lexicographically first pair ``(m, n)``.
    A pass certifies the prefix only.
    """
    schedule = schedule or ModulusSchedule.default()
    if len(trace) == 0:
        raise InsufficientDataError("empty trace")
    eps = np.array(schedule.epsilons)

    if schedule.thresholds is not None:
        _needed_length(trace, schedule, min_tail)
        row_max = _forward_tail_max(trace)
        for k, (e, N) in enumerate(zip(schedule.epsilons, schedule.thresholds), start=1):
            lo = max(N - trace.start, 0)
            if (row_max[lo:] >= e).any():
                m, n, dist = _cauchy_witness(trace, row_max, lo, e)
                return SequenceVerdict("cauchy", False, schedule, {
                    "k": k, "epsilon": e, "threshold": N, "m": trace.start + m, "n": trace.start + n,
                    "distance": dist}, trace.last, False)
        return SequenceVerdict("cauchy", True, schedule, None, trace.last, False)

    while True:
        row_max = _forward_tail_max(trace)
        viol = row_max[None, :] >= eps[:, None]
        has = viol.any(axis=1)
        last_bad = np.where(has, len(row_max) - 1 - np.argmax(viol[:, ::-1], axis=1), -1)
        short = (len(row_max) - 1 - last_bad) < min_tail
        if not short.any() or trace.generator is None or len(trace) >= max_terms:
            break
        trace.extend_to(trace.start + min(2 * len(trace), max_terms) - 1)
    thresholds = tuple(int(trace.start + b + 1) for b in last_bad)
    resolved = ModulusSchedule(schedule.epsilons, thresholds)
    if short.any():
        k = int(np.flatnonzero(short)[0])
        m, n, dist = _cauchy_witness(trace, row_max, int(last_bad[k]), float(eps[k]))
        return SequenceVerdict("cauchy", False, resolved, {
            "k": k + 1, "epsilon": float(eps[k]), "m": trace.start + m, "n": trace.start + n, "distance": dist,
            "reason": f"tail after the last violation has fewer than {min_tail} terms",
        }, trace.last, True)
    return SequenceVerdict("cauchy", True, resolved, None, trace.last, True)


def radius_schedule(definer, epsilons: Sequence[float], margin: float = 1e-6) -> list[float]:
    """Radii ``r_k`` with ``r_k * r_k < eps_k``: closeness to a limit at ``r_k`` gives pairs closer than ``eps_k``."""
    return [joint_zero_radius(definer, e, margin) for e in epsilons]


@dataclass
class ForwardCheck:
    radii: list[float]
    convergence: SequenceVerdict
    cauchy: SequenceVerdict | None

    @property
    def passed(self) -> bool:
        return self.convergence.passed and self.cauchy is not None and self.cauchy.passed

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "radii": self.radii,
            "convergence": self.convergence.to_dict(),
            "cauchy": None if self.cauchy is None else self.cauchy.to_dict(),
        }


def cauchy_via_limit(trace: SequenceTrace, limit, epsilons: Sequence[float] | None = None,
                     margin: float = 1e-6, min_tail: int = DEFAULT_MIN_TAIL) -> ForwardCheck:
    """Convergence at radii ``r_k`` supplies thresholds at which the prefix must be Cauchy at ``eps_k``."""
    eps = tuple(epsilons) if epsilons is not None else ModulusSchedule.default().epsilons
    radii = radius_schedule(trace.space.definer, eps, margin)
    conv = converges_to(trace, limit, ModulusSchedule(tuple(radii)), min_tail=min_tail)
    if not conv.passed:
        return ForwardCheck(radii, conv, None)
    cauchy = is_cauchy_prefix(trace, ModulusSchedule(eps, conv.schedule.thresholds), min_tail=min_tail)
    return ForwardCheck(radii, conv, cauchy)


# -- subsequence extraction ---------------------------------------------------

@dataclass
class Extraction:
    indices: list[int]
    levels: list[dict]
    depth: int
    achieved_depth: int
    certificate: bool
    schedule: ModulusSchedule | None
    cauchy: SequenceVerdict | None
    subsequence: SequenceTrace | None

    @property
    def passed(self) -> bool:
        return self.certificate and (self.cauchy is None or self.cauchy.passed)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "indices": self.indices,
            "depth": self.depth,
            "achieved_depth": self.achieved_depth,
            "levels": self.levels,
            "nested_ball_certificate": self.certificate,
            "schedule": None if self.schedule is None else self.schedule.to_dict(),
            "cauchy": None if self.cauchy is None else self.cauchy.to_dict(),
        }


NetOracle = Callable[[StarSpace, float], Sequence[int]]


def _default_net(space: StarSpace, radius: float) -> list[int]:
    return greedy_net(space, radius, "packing").centers


def extract_cauchy_subsequence(trace: SequenceTrace, depth: int | None = None,
                               radii: Sequence[float] | None = None, net_oracle: NetOracle | None = None,
                               margin: float = 1e-6) -> Extraction:
    """Pigeonhole a nested chain of index sets and pick one increasing index per level.

    Level ``k`` nets the distinct prefix values at radius ``radii[k-1]``
    (default ``1/(k+1)``) and keeps the indices in the ball holding the
    most of them, ties going to the lowest center.  The subsequence is
    Cauchy with ``eps_k = (r_k * r_k) / (1 - margin)`` from position ``k-1`` on.
    """
    if len(trace) == 0:
        raise InsufficientDataError("empty trace")
    if radii is None:
        depth = 10 if depth is None else int(depth)
        radii = [1.0 / (k + 1) for k in range(1, depth + 1)]
    else:
        radii = [float(r) for r in radii]
        depth = len(radii) if depth is None else int(depth)
        if len(radii) < depth:
            raise ConfigurationError("fewer radii than requested levels")
        radii = radii[:depth]
    if any(not r > 0 for r in radii):
        raise ConfigurationError("radii must be positive")
    net_oracle = net_oracle or _default_net
    space = trace.space

    codes: dict = {}
    labels = np.array([codes.setdefault(payload_key(t), len(codes)) for t in trace.terms])
    firsts = np.unique(labels, return_index=True)[1]
    distinct = [trace.terms[i] for i in firsts]
    values = StarSpace(space.metric, space.definer, distinct, [format_payload(p) for p in distinct])
    D = values.distance_matrix()

    alive = np.arange(len(trace))
    chosen: list[int] = []
    levels: list[dict] = []
    for k, r in enumerate(radii, start=1):
        centers = sorted(int(c) for c in net_oracle(values, r))
        inside = D[np.ix_(centers, labels[alive])] < r
        counts = inside.sum(axis=1)
        best = int(np.argmax(counts))
        alive = alive[inside[best]]
        later = alive[alive > (chosen[-1] if chosen else -1)]
        if later.size == 0:
            break
        chosen.append(int(later[0]))
        c = centers[best]
        levels.append({
            "level": k, "radius": r, "center": values.ids[c], "center_term": int(trace.start + firsts[c]),
            "retained": int(alive.size), "selected": int(trace.start + later[0]),
        })

    cert = True
    for k, lev in enumerate(levels):
        c = values.ids.index(lev["center"])
        for pos in chosen[k:]:
            if not D[c, labels[pos]] < lev["radius"]:
                cert = False
    indices = [trace.start + p for p in chosen]
    if not chosen:
        return Extraction(indices, levels, depth, 0, cert, None, None, None)
    sub = SequenceTrace(space, [trace.terms[p] for p in chosen])
    used = radii[:len(chosen)]
    eps = tuple(float(space.definer.apply(r, r)) / (1.0 - margin) + 1e-12 for r in used)
    schedule = ModulusSchedule(eps, tuple(range(len(chosen))))
    verdict = is_cauchy_prefix(sub, schedule)
    return Extraction(indices, levels, depth, len(chosen), cert, schedule, verdict, sub)


def project_product_cauchy(trace: SequenceTrace, schedule: ModulusSchedule | None = None,
                           min_tail: int = DEFAULT_MIN_TAIL) -> dict:
    """Cauchy verdicts of the product trace and of each coordinate trace under the same schedule.

    Coordinate distances never exceed the product distance in either mode,
    so a product pass at ``(eps, N)`` must give factor passes there.
    """
    factors = trace.space.factors
    if not factors:
        raise ConfigurationError("trace does not live in a product space")
    schedule = schedule or ModulusSchedule.default()
    whole = is_cauchy_prefix(trace, schedule, min_tail=min_tail)
    factor_schedule = schedule
    if schedule.thresholds is None and whole.passed:
        factor_schedule = whole.schedule
    verdicts = []
    for i, f in enumerate(factors):
        gen = trace.generator.coordinate(i) if trace.generator is not None else None
        coord = SequenceTrace(f, [t[i] for t in trace.terms], trace.start, gen)
        verdicts.append(is_cauchy_prefix(coord, factor_schedule, min_tail=min_tail))
    consistent = not whole.passed or all(v.passed for v in verdicts)
    return {
        "mode": trace.space.metric.mode,
        "product": whole,
        "factors": verdicts,
        "consistent": consistent,
    }


# -- nested closed sets -------------------------------------------------------

class NestedFamily:
    """Closed sets ``F_1, F_2, ...`` of a 1-D analytic space.

    Either closed balls (``centers``, ``radii``) or payload intervals
    (``lows``, ``highs``).  Ball intervals are computed on demand.
    """

    def __init__(self, space: StarSpace, centers=None, radii=None, lows=None, highs=None):
        if space.domain is None:
            raise ConfigurationError("nested families live on analytic 1-D spaces")
        self.space = space
        if radii is not None:
            self.radii = np.asarray(radii, dtype=float).ravel()
            c = np.asarray(centers, dtype=float)
            self.centers = np.broadcast_to(c, self.radii.shape).astype(float) if c.ndim == 0 else c.ravel()
            if self.centers.shape != self.radii.shape:
                raise ConfigurationError("centers and radii differ in length")
            self.lows = self.highs = None
        else:
            self.lows = np.asarray(lows, dtype=float).ravel()
            self.highs = np.asarray(highs, dtype=float).ravel()
            if self.lows.shape != self.highs.shape:
                raise ConfigurationError("lows and highs differ in length")
            self.centers = self.radii = None
        if len(self) == 0:
            raise ConfigurationError("empty family")

    @property
    def is_balls(self) -> bool:
        return self.radii is not None

    def __len__(self):
        return (self.radii if self.is_balls else self.lows).size

    @classmethod
    def reciprocal_balls(cls, space: StarSpace, center: float, count: int, scale: float = 1.0) -> "NestedFamily":
        """``F_n`` is the closed ball of radius ``scale/n`` around ``center``, n = 1..count."""
        n = np.arange(1, int(count) + 1, dtype=float)
        return cls(space, centers=float(center), radii=scale / n)

    @classmethod
    def shrinking_intervals(cls, space: StarSpace, low: float, high: float, count: int) -> "NestedFamily":
        """``F_n = [low, low + (high - low)/n]``."""
        n = np.arange(1, int(count) + 1, dtype=float)
        return cls(space, lows=np.full(n.shape, float(low)), highs=low + (high - low) / n)

    def intervals(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(idx, dtype=np.int64)
        if self.is_balls:
            return ball_intervals(self.space, self.centers[idx], self.radii[idx])
        return self.lows[idx], self.highs[idx]

    def points(self, idx: np.ndarray) -> np.ndarray:
        """The chosen point of each set: its center, or the interval midpoint."""
        idx = np.asarray(idx, dtype=np.int64)
        if self.is_balls:
            return self.centers[idx]
        return 0.5 * (self.lows[idx] + self.highs[idx])

    def member(self, idx: np.ndarray, y: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if self.is_balls:
            return self.space.metric.paired(self.centers[idx], y) <= self.radii[idx]
        return (self.lows[idx] <= y) & (y <= self.highs[idx])


def _probe_indices(count: int, limit: int, rng) -> np.ndarray:
    if count <= limit:
        return np.arange(count)
    head = np.arange(limit // 2)
    spread = np.unique(np.geomspace(1, count, limit // 4).astype(np.int64) - 1)
    rand = rng.integers(0, count, size=limit // 4)
    return np.unique(np.concatenate([head, spread, rand, [count - 1]]))


@dataclass
class CantorResult:
    point: float
    passed: bool
    certificate: dict

    def to_dict(self) -> dict:
        return {"passed": self.passed, "point": self.point, "certificate": self.certificate}


def cantor_intersection(family: NestedFamily, tol: float = 1e-9, samples: int = 16, seed: int = 0,
                        max_checks: int = 20_000) -> CantorResult:
    """The single point common to a nested family whose sets shrink to diameter ``<= tol``.

    Picks ``x_n`` in ``F_n`` and returns the deepest one.  Nesting of
    consecutive sets is checked on interval endpoints and random members
    for up to ``max_checks`` indices; a failure raises
    :class:`InvalidFamilyError` naming the set.
    """
    space, metric = family.space, family.space.metric
    L = len(family)
    rng = np.random.default_rng(seed)
    if family.is_balls:
        if np.any(np.diff(family.radii) >= 0):
            raise PreconditionError("radii must be strictly decreasing")
        if not family.radii[-1] <= tol:
            raise PreconditionError(f"deepest radius {family.radii[-1]!r} exceeds tol {tol!r}")

    probe = _probe_indices(L, max_checks, rng)
    lo, hi = family.intervals(probe)
    empty = np.flatnonzero(lo > hi)
    if empty.size:
        raise InvalidFamilyError(f"F_{int(probe[empty[0]]) + 1} is empty")
    pairs = probe[probe < L - 1]
    lo_a, hi_a = lo[: pairs.size], hi[: pairs.size]
    lo_b, hi_b = family.intervals(pairs + 1)
    outside = (lo_b < lo_a) | (hi_b > hi_a)
    draws = lo_b[:, None] + (hi_b - lo_b)[:, None] * rng.random((pairs.size, samples))
    draws = np.clip(draws, lo_b[:, None], hi_b[:, None])
    for s in range(samples):
        outside |= ~family.member(pairs, draws[:, s]) | (lo_b > hi_b)
    bad = np.flatnonzero(outside)
    if bad.size:
        n = int(pairs[bad[0]])
        raise InvalidFamilyError(f"F_{n + 2} is not contained in F_{n + 1}")

    deepest = np.array([L - 1])
    lo_L, hi_L = family.intervals(deepest)
    answer = float(family.points(deepest)[0])
    diam_L = float(metric.paired([lo_L[0]], [hi_L[0]])[0])

    xs = family.points(probe)
    delta = metric.paired(lo, hi)
    to_answer = metric.paired(xs, np.full(xs.shape, answer))
    cauchy_ok = bool(np.all(to_answer <= delta * (1 + 1e-9) + 1e-12))

    if family.is_balls:
        d_all = metric.paired(family.centers, np.full(L, answer))
        excess = d_all - family.radii
        contained = bool(np.all(excess <= tol))
        worst = float(excess.max())
    else:
        contained = bool(np.all((family.lows <= answer) & (answer <= family.highs)))
        worst = float(max(0.0, (family.lows - answer).max(), (answer - family.highs).max()))

    probes = lo_L[0] + (hi_L[0] - lo_L[0]) * rng.random(samples)
    spread = float(metric.paired(probes, np.full(samples, answer)).max())
    unique_ok = spread <= diam_L * (1 + 1e-9) + 1e-15 and diam_L <= tol

    cert = {
        "sets": L,
        "sets_checked": int(probe.size),
        "nested": True,
        "cauchy_bound_holds": cauchy_ok,
        "inside_every_set": contained,
        "worst_excess": worst,
        "deepest_interval": [float(lo_L[0]), float(hi_L[0])],
        "deepest_diameter": diam_L,
        "uniqueness_spread": spread,
        "diameter_within_tol": diam_L <= tol,
        "tol": tol,
    }
    return CantorResult(answer, cauchy_ok and contained and unique_ok, cert)


# -- Baire construction -------------------------------------------------------

class PointComplement:
    """The open set of points different from the listed ones."""

    kind = "point_complement"

    def __init__(self, points: Sequence[float]):
        self.points = np.asarray(points, dtype=float).ravel()

    def contains(self, space: StarSpace, x: float) -> bool:
        return space.contains(x) and not np.any(self.points == float(x))

    def inner_radius(self, space: StarSpace, x: float) -> float:
        if self.points.size == 0:
            return math.inf
        return float(space.metric.paired(np.full(self.points.size, float(x)), self.points).min())

    def sample(self, space: StarSpace, center: float, radius: float, rng, tries: int = 64):
        lo, hi = space.ball_interval(center, radius * (1.0 - 1e-9))
        for _ in range(tries):
            y = float(lo + (hi - lo) * rng.random())
            if space.payload_distance(center, y) < radius and self.contains(space, y):
                return y
        return None

    def to_spec(self):
        return {"kind": self.kind, "points": self.points.tolist()}


class WholeSpace:
    kind = "whole"

    def contains(self, space, x) -> bool:
        return space.contains(x)

    def inner_radius(self, space, x) -> float:
        return math.inf

    def sample(self, space, center, radius, rng):
        return float(center)

    def to_spec(self):
        return {"kind": self.kind}


class EmptySet:
    kind = "empty"

    def contains(self, space, x) -> bool:
        return False

    def inner_radius(self, space, x) -> float:
        return 0.0

    def sample(self, space, center, radius, rng):
        return None

    def to_spec(self):
        return {"kind": self.kind}


def grid_rationals(count: int, low: float = 0.0, high: float = 1.0) -> list[float]:
    """Distinct rationals ``low + (high - low) * p/q``, listed by denominator then numerator."""
    out: list[float] = []
    seen: set[Fraction] = set()
    q = 1
    while len(out) < count:
        for p in range(q + 1):
            f = Fraction(p, q)
            if f not in seen:
                seen.add(f)
                out.append(float(low + (high - low) * f))
                if len(out) == count:
                    break
        q += 1
    return out


@dataclass
class BaireResult:
    point: float
    passed: bool
    steps: list[dict]
    verdicts: list[bool]
    schedule_ok: bool
    nesting_ok: bool

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "point": self.point,
            "steps": self.steps,
            "membership_at_point": self.verdicts,
            "radius_schedule_ok": self.schedule_ok,
            "nesting_ok": self.nesting_ok,
        }


def _default_open_ball(space: StarSpace) -> tuple[float, float]:
    lo, hi = space.domain
    if math.isfinite(hi):
        return 0.5 * (lo + hi), 0.5 * (hi - lo)
    return lo + 1.0, 1.0


def _fits(space: StarSpace, dense, x: float, eps: float, outer: tuple[float, float], samples: int, rng) -> bool:
    """Closed ball ``B[x, eps]`` inside the open ball ``outer`` and inside the dense set."""
    c, r = outer
    lo, hi = space.ball_interval(x, eps)
    if not (space.payload_distance(c, lo) < r and space.payload_distance(c, hi) < r):
        return False
    inner = getattr(dense, "inner_radius", None)
    if inner is not None:
        return eps < inner(space, x)
    probes = [lo, hi] + [float(lo + (hi - lo) * t) for t in rng.random(samples)]
    return all(dense.contains(space, y) for y in probes)


def baire_point(space: StarSpace, dense_open: Sequence, depth: int | None = None, seed: int = 0,
                start: tuple[float, float] | None = None, samples: int = 64,
                max_halvings: int = 200) -> BaireResult:
    """A point of ``start`` lying in the first ``depth`` dense open sets.

    Step 1 takes ``x_1`` in ``A_1`` inside the open ball ``start`` and
    ``eps_1 < 1/4``; step ``n + 1`` takes ``x_{n+1}`` in ``A_{n+1}`` inside
    ``B(x_n, eps_n)`` and ``eps_{n+1} < eps_n / 2``, each closed ball
    ``B[x_n, eps_n]`` fitting inside the set and the previous open ball.
    Radii start at half their bound and halve until the ball fits.
    """
    if space.domain is None:
        raise ConfigurationError("baire_point needs an analytic space")
    dense_open = list(dense_open)
    depth = len(dense_open) if depth is None else int(depth)
    if depth < 1 or depth > len(dense_open):
        raise ConfigurationError(f"depth must be between 1 and {len(dense_open)}")
    rng = np.random.default_rng(seed)
    outer = start or _default_open_ball(space)
    bound = 0.25
    steps: list[dict] = []
    for n in range(1, depth + 1):
        A = dense_open[n - 1]
        x = A.sample(space, outer[0], outer[1], rng)
        if x is None or not A.contains(space, x) or not space.payload_distance(outer[0], x) < outer[1]:
            raise DensityViolationError(f"set {n} has no sampled member in B({format_payload(outer[0])}, {outer[1]!r})", n)
        eps = bound / 2.0
        for _ in range(max_halvings):
            if _fits(space, A, x, eps, outer, samples, rng):
                break
            eps /= 2.0
        else:
            raise DensityViolationError(f"no closed ball around x_{n} fits inside set {n}", n)
        steps.append({"n": n, "x": x, "epsilon": eps})
        outer = (x, eps)
        bound = eps / 2.0

    point = steps[-1]["x"]
    verdicts = [bool(dense_open[k].contains(space, point)) for k in range(depth)]
    schedule_ok = steps[0]["epsilon"] < 0.25 and all(
        b["epsilon"] < a["epsilon"] / 2.0 for a, b in zip(steps, steps[1:]))
    nesting_ok = True
    for a, b in zip(steps, steps[1:]):
        lo, hi = space.ball_interval(b["x"], b["epsilon"])
        if not (space.payload_distance(a["x"], lo) < a["epsilon"] and space.payload_distance(a["x"], hi) < a["epsilon"]):
            nesting_ok = False
    return BaireResult(point, all(verdicts) and schedule_ok and nesting_ok, steps, verdicts, schedule_ok, nesting_ok)


DENSE_KINDS = {"point_complement": PointComplement, "whole": WholeSpace, "empty": EmptySet}


def dense_sets_from_spec(spec) -> list:
    """Dense open sets from JSON: a list of ``{"kind": ...}`` objects, or ``{"kind": "grid_rationals", "count": k}``."""
    if isinstance(spec, dict) and spec.get("kind") == "grid_rationals":
        qs = grid_rationals(int(spec.get("count", 10)), float(spec.get("low", 0.0)), float(spec.get("high", 1.0)))
        return [PointComplement([q]) for q in qs]
    if not isinstance(spec, list):
        raise ConfigurationError("dense sets must be a list or a grid_rationals object")
    out = []
    for k, item in enumerate(spec):
        kind = item.get("kind") if isinstance(item, dict) else None
        if kind == "point_complement":
            out.append(PointComplement(item.get("points", [])))
        elif kind in ("whole", "empty"):
            out.append(DENSE_KINDS[kind]())
        else:
            raise ConfigurationError(f"sets[{k}]: unknown kind {kind!r}")
    return out
