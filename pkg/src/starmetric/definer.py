"""t-definers: the binary operations that replace ``+`` in the triangle inequality.

A t-definer ``*`` on ``[0, inf)`` is commutative (T1), associative (T2),
monotone (T3), has ``0`` as identity (T4) and is continuous in its first
argument (T5).  The built-ins are

* ``lukasiewicz``: ``a * b = a + b`` (ordinary metrics),
* ``maximum``: ``a * b = max(a, b)`` (ultrametrics),
* ``power(p)``: ``a * b = (a**(1/p) + b**(1/p))**p``; ``power(2)`` is the
  definer under which ``(sqrt(x) - sqrt(y))**2`` is a star-metric.

User definers are expression trees (``composed``) and are never trusted:
run :func:`check_laws` on them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, NoRadiusError

__all__ = [
    "TDefiner",
    "LawReport",
    "LowerInverse",
    "lukasiewicz",
    "maximum",
    "power",
    "composed",
    "evaluate",
    "fold",
    "check_laws",
    "joint_zero_radius",
    "kfold_radius",
    "inverse_lower_array",
    "inverse_lower_closed",
    "radius_array",
    "star_inverse_lower",
]

LAWS = ("range", "T1", "T2", "T3", "T4", "T5")


@dataclass(frozen=True)
class TDefiner:
    """A t-definer value.

    ``kind`` is one of ``"lukasiewicz"``, ``"maximum"``, ``"power"`` or
    ``"composed"``.  ``p`` is only used by ``power``; ``expr`` only by
    ``composed`` (see :func:`composed` for the node grammar).
    """

    kind: str
    p: float | None = None
    expr: Mapping[str, Any] | None = field(default=None, compare=True)
    description: str = ""

    def __post_init__(self):
        if self.kind not in ("lukasiewicz", "maximum", "power", "composed"):
            raise ValueError(f"unknown definer kind {self.kind!r}")
        if self.kind == "power":
            if self.p is None or not math.isfinite(self.p) or self.p <= 0:
                raise ValueError("power definer needs a finite exponent p > 0")
        if self.kind == "composed" and self.expr is None:
            raise ValueError("composed definer needs an expression tree")

    def apply(self, a, b) -> np.ndarray:
        """Vectorised evaluation without input validation."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.kind == "lukasiewicz":
            return a + b
        if self.kind == "maximum":
            return np.maximum(a, b)
        if self.kind == "power":
            p = float(self.p)
            return (a ** (1.0 / p) + b ** (1.0 / p)) ** p
        return np.asarray(_eval_expr(self.expr, a, b), dtype=float) + np.zeros(np.broadcast(a, b).shape)

    def __call__(self, a, b):
        return evaluate(self, a, b)

    def to_spec(self) -> dict:
        spec: dict[str, Any] = {"kind": self.kind}
        if self.kind == "power":
            spec["p"] = float(self.p)
        if self.kind == "composed":
            spec["expr"] = _thaw(self.expr)
        if self.description:
            spec["description"] = self.description
        return spec

    @classmethod
    def from_spec(cls, spec) -> "TDefiner":
        if isinstance(spec, str):
            spec = {"kind": spec}
        if not isinstance(spec, Mapping) or "kind" not in spec:
            raise ValueError(f"definer spec must be an object with a 'kind' field, got {spec!r}")
        kind = spec["kind"]
        if kind == "lukasiewicz":
            return lukasiewicz()
        if kind == "maximum":
            return maximum()
        if kind == "power":
            if "p" not in spec:
                raise ValueError("power definer spec needs field 'p'")
            return power(float(spec["p"]))
        if kind == "composed":
            if "expr" not in spec:
                raise ValueError("composed definer spec needs field 'expr'")
            return composed(spec["expr"], spec.get("description", ""))
        raise ValueError(f"unknown definer kind {kind!r}")

    def __str__(self):
        if self.kind == "power":
            return f"power({self.p:g})"
        if self.kind == "composed":
            return self.description or "composed"
        return self.kind


def lukasiewicz() -> TDefiner:
    return TDefiner("lukasiewicz", description="a + b")


def maximum() -> TDefiner:
    return TDefiner("maximum", description="max(a, b)")


def power(p: float) -> TDefiner:
    return TDefiner("power", p=float(p), description=f"(a^(1/{p:g}) + b^(1/{p:g}))^{p:g}")


def composed(expr: Mapping[str, Any], description: str = "") -> TDefiner:
    """Build a definer from an expression tree.

    Nodes are JSON objects with an ``op`` field:

    ``{"op": "a"}``, ``{"op": "b"}``, ``{"op": "const", "value": c}``,
    ``{"op": "+" | "*" | "max" | "min", "args": [...]}``,
    ``{"op": "-", "args": [x, y]}``, ``{"op": "abs", "args": [x]}`` and
    ``{"op": "power_mean", "p": p, "args": [x, y]}`` for
    ``(x**(1/p) + y**(1/p))**p``.
    """
    _validate_expr(expr)
    return TDefiner("composed", expr=_freeze(expr), description=description or _describe(expr))


_NARY = {"+": np.add, "*": np.multiply, "max": np.maximum, "min": np.minimum}


def _validate_expr(node):
    if not isinstance(node, Mapping) or "op" not in node:
        raise ValueError(f"expression node must be an object with 'op', got {node!r}")
    op = node["op"]
    if op in ("a", "b"):
        return
    if op == "const":
        value = node.get("value")
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ValueError("const node needs a finite numeric 'value'")
        return
    args = node.get("args")
    if not isinstance(args, Sequence) or isinstance(args, str):
        raise ValueError(f"node {op!r} needs an 'args' list")
    arity = {"-": 2, "abs": 1, "power_mean": 2}.get(op)
    if op not in _NARY and arity is None:
        raise ValueError(f"unknown expression op {op!r}")
    if arity is not None and len(args) != arity:
        raise ValueError(f"node {op!r} takes {arity} args")
    if op in _NARY and len(args) < 1:
        raise ValueError(f"node {op!r} needs at least one arg")
    if op == "power_mean":
        p = node.get("p")
        if not isinstance(p, (int, float)) or not p > 0:
            raise ValueError("power_mean node needs 'p' > 0")
    for child in args:
        _validate_expr(child)


def _eval_expr(node, a, b):
    op = node["op"]
    if op == "a":
        return a
    if op == "b":
        return b
    if op == "const":
        return float(node["value"])
    args = [_eval_expr(child, a, b) for child in node["args"]]
    if op in _NARY:
        return reduce(_NARY[op], args)
    if op == "-":
        return args[0] - args[1]
    if op == "abs":
        return np.abs(args[0])
    p = float(node["p"])
    return (np.asarray(args[0]) ** (1.0 / p) + np.asarray(args[1]) ** (1.0 / p)) ** p


def _describe(node) -> str:
    op = node["op"]
    if op in ("a", "b"):
        return op
    if op == "const":
        return f"{node['value']:g}"
    parts = [_describe(child) for child in node["args"]]
    if op in ("+", "*", "-"):
        return "(" + f" {op} ".join(parts) + ")"
    if op == "power_mean":
        return f"pmean_{node['p']:g}({', '.join(parts)})"
    return f"{op}({', '.join(parts)})"


class _FrozenDict(dict):
    def __hash__(self):
        return hash(json.dumps(_thaw(self), sort_keys=True))

    def __setitem__(self, key, value):
        raise TypeError("expression trees are immutable")


def _freeze(node):
    if isinstance(node, Mapping):
        return _FrozenDict({k: _freeze(v) for k, v in node.items()})
    if isinstance(node, (list, tuple)):
        return tuple(_freeze(v) for v in node)
    return node


def _thaw(node):
    if isinstance(node, Mapping):
        return {k: _thaw(v) for k, v in node.items()}
    if isinstance(node, tuple):
        return [_thaw(v) for v in node]
    return node


def _check_value(x, name="value"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be non-negative, got {x!r}")
    return arr


def evaluate(definer: TDefiner, a, b):
    """``a * b`` with domain checks on both inputs and on the result.

    Scalars in, float out; arrays broadcast.
    """
    a_arr = _check_value(a, "a")
    b_arr = _check_value(b, "b")
    out = definer.apply(a_arr, b_arr)
    if not np.all(np.isfinite(out)) or np.any(out < 0):
        raise DomainError(f"{definer} produced an invalid value for ({a!r}, {b!r})")
    if out.ndim == 0:
        return float(out)
    return out


def fold(definer: TDefiner, values: Sequence[float]) -> float:
    """Left fold ``((v0 * v1) * v2) * ...``; the empty fold is 0."""
    vals = [float(v) for v in values]
    for i, v in enumerate(vals):
        _check_value(v, f"values[{i}]")
    if not vals:
        return 0.0
    return reduce(lambda acc, v: float(definer.apply(acc, v)), vals[1:], vals[0])


def fold_arrays(definer: TDefiner, arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Element-wise left fold over equally shaped arrays."""
    if not arrays:
        raise ValueError("nothing to fold")
    return reduce(definer.apply, arrays[1:], np.asarray(arrays[0], dtype=float))


@dataclass
class LawReport:
    """Outcome of :func:`check_laws`.

    ``verdicts`` maps each law name (``range``, ``T1`` .. ``T5``) to a bool;
    ``witnesses`` holds the first violating sample for every failed law.
    """

    definer: TDefiner
    verdicts: dict[str, bool]
    witnesses: dict[str, dict]
    samples_used: int
    tolerance: float
    seed: int

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "definer": self.definer.to_spec(),
            "passed": self.passed,
            "verdicts": dict(self.verdicts),
            "witnesses": {k: dict(v) for k, v in self.witnesses.items()},
            "samples_used": self.samples_used,
            "tolerance": self.tolerance,
            "seed": self.seed,
        }


def _scale(*arrays):
    return np.maximum.reduce([np.ones_like(arrays[0])] + [np.abs(x) for x in arrays])


def _first(mask):
    idx = np.flatnonzero(mask)
    return int(idx[0]) if idx.size else None


def check_laws(
    definer: TDefiner,
    sample_count: int = 1000,
    max_value: float = 10.0,
    seed: int = 0,
    tol: float = 1e-9,
) -> LawReport:
    """Probe T1-T5 on random samples from ``[0, max_value]``.

    A fixed anchor set (1, 0, 0.5, 2, max_value) is checked before the random
    draws, so simple defects get small, readable witnesses.  Relative
    tolerance ``tol`` is applied with a floor of 1 on the magnitude.
    T5 is a finite-difference probe: the jump ``|f(a+h, b) - f(a, b)|`` must
    shrink as ``h`` goes from 1e-1 to 1e-12.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    rng = np.random.default_rng(seed)
    anchors = np.array([v for v in dict.fromkeys([1.0, 0.0, 0.5, 2.0, float(max_value)]) if v <= max_value])
    grid_a, grid_b, grid_c = (g.ravel() for g in np.meshgrid(anchors, anchors, anchors, indexing="ij"))
    a, b, c = rng.uniform(0.0, max_value, size=(3, sample_count))
    a = np.concatenate([grid_a, a])
    b = np.concatenate([grid_b, b])
    c = np.concatenate([grid_c, c])
    f = definer.apply
    verdicts: dict[str, bool] = {}
    witnesses: dict[str, dict] = {}

    with np.errstate(all="ignore"):
        ab = f(a, b)
        bad = ~np.isfinite(ab) | (ab < 0)
        i = _first(bad)
        verdicts["range"] = i is None
        if i is not None:
            witnesses["range"] = {"a": float(a[i]), "b": float(b[i]), "value": float(ab[i])}

        ba = f(b, a)
        bad = ~(np.abs(ab - ba) <= tol * _scale(ab, ba))
        i = _first(bad)
        verdicts["T1"] = i is None
        if i is not None:
            witnesses["T1"] = {"a": float(a[i]), "b": float(b[i]), "a*b": float(ab[i]), "b*a": float(ba[i])}

        left = f(a, f(b, c))
        right = f(ab, c)
        bad = ~(np.abs(left - right) <= tol * _scale(left, right))
        i = _first(bad)
        verdicts["T2"] = i is None
        if i is not None:
            witnesses["T2"] = {
                "a": float(a[i]), "b": float(b[i]), "c": float(c[i]),
                "a*(b*c)": float(left[i]), "(a*b)*c": float(right[i]),
            }

        lo, hi = np.minimum(a, b), np.maximum(a, b)
        flo, fhi = f(lo, c), f(hi, c)
        bad = ~(flo <= fhi + tol * _scale(fhi))
        i = _first(bad)
        verdicts["T3"] = i is None
        if i is not None:
            witnesses["T3"] = {
                "a": float(lo[i]), "b": float(hi[i]), "c": float(c[i]),
                "a*c": float(flo[i]), "b*c": float(fhi[i]),
            }

        a0 = f(a, np.zeros_like(a))
        bad = ~(np.abs(a0 - a) <= tol * _scale(a))
        i = _first(bad)
        verdicts["T4"] = i is None
        if i is not None:
            witnesses["T4"] = {"a": float(a[i]), "a*0": float(a0[i])}

        probe = min(a.size, 256)
        pa, pb = a[:probe], b[:probe]
        base = f(pa, pb)
        steps = 10.0 ** -np.arange(1, 13)
        jumps = np.stack([np.abs(f(pa + h * np.maximum(1.0, pa), pb) - base) for h in steps])
        settled = jumps[-1] <= tol * _scale(base)
        shrinking = jumps[-1] <= 0.5 * jumps[0]
        bad = ~(settled | shrinking)
        i = _first(bad)
        verdicts["T5"] = i is None
        if i is not None:
            witnesses["T5"] = {
                "a": float(pa[i]), "b": float(pb[i]),
                "h": float(steps[-1] * max(1.0, pa[i])), "jump": float(jumps[-1, i]),
            }

    return LawReport(definer, verdicts, witnesses, int(a.size), float(tol), int(seed))


def radius_array(definer: TDefiner, r, k: int = 2, margin: float = 1e-6, iterations: int = 64) -> np.ndarray:
    """Element-wise bisection for the largest ``t`` in ``(0, r]`` whose ``k``-fold is ``<= r (1 - margin)``."""
    r = np.asarray(r, dtype=float)
    if not (np.isfinite(r).all() and (r > 0).all()):
        raise DomainError("radius must be a finite positive real")
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    # a few ulps of headroom so scalar and vectorised pow agree on the verdict
    target = r * (1.0 - margin) * (1.0 - 8 * np.finfo(float).eps)

    def kfold(t):
        acc = t
        for _ in range(k - 1):
            acc = definer.apply(acc, t)
        return acc

    whole = kfold(r) <= target
    lo, hi = np.zeros_like(r), r.copy()
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        ok = kfold(mid) <= target
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    out = np.where(whole, r, lo)
    if (out <= 0).any():
        bad = float(r[out <= 0].flat[0])
        raise NoRadiusError(
            f"{definer}: no t > 0 with {k}-fold t <= {bad * (1 - margin)!r} after {iterations} bisection steps")
    return out


def _radius(definer, r, margin, k, iterations):
    try:
        r = float(r)
    except (TypeError, ValueError):
        raise DomainError(f"radius must be a finite positive real, got {r!r}") from None
    if not (math.isfinite(r) and r > 0):
        raise DomainError(f"radius must be a finite positive real, got {r!r}")
    return float(radius_array(definer, r, k, margin, iterations))


def joint_zero_radius(definer: TDefiner, r: float, margin: float = 1e-6, iterations: int = 64) -> float:
    """Largest bisected ``t`` in ``(0, r]`` with ``t * t <= r (1 - margin)``.

    By monotonicity every ``a, b < t`` then satisfies ``a * b < r``.
    """
    return _radius(definer, r, margin, 2, iterations)


def kfold_radius(definer: TDefiner, k: int, r: float, margin: float = 1e-6, iterations: int = 64) -> float:
    """Like :func:`joint_zero_radius` but for the fold of ``k`` copies."""
    if k < 2:
        raise ValueError("k must be >= 2")
    return _radius(definer, r, margin, int(k), iterations)


class LowerInverse(NamedTuple):
    value: float
    capped: bool


def star_inverse_lower(definer: TDefiner, c: float, b: float, tol: float | None = None, cap: float = 1e300) -> LowerInverse:
    """``inf {t >= 0 : t * b >= c}`` by bisection.

    Returns the upper end of the final bracket, so ``value * b >= c`` holds
    and the true infimum lies in ``[value - tol, value]``.  If no ``t`` up to
    ``cap`` reaches ``c`` the result is ``(cap, True)``; ``cap`` is still a
    valid lower bound in that case.
    """
    value, capped = inverse_lower_array(definer, np.asarray([c], float), np.asarray([b], float), tol, cap)
    return LowerInverse(float(value[0]), bool(capped[0]))


def inverse_lower_array(definer: TDefiner, c, b, tol=None, cap: float = 1e300, max_iter: int = 2000):
    """Vectorised :func:`star_inverse_lower` over broadcast arrays ``c`` and ``b``.

    Returns ``(values, capped)``.  ``tol`` defaults to ``1e-12 * (1 + c)``.
    """
    c = _check_value(c, "c")
    b = _check_value(b, "b")
    c, b = np.broadcast_arrays(c, b)
    shape = c.shape
    c = c.astype(float).ravel()
    b = b.astype(float).ravel()
    tol_arr = 1e-12 * (1.0 + c) if tol is None else np.full(c.shape, float(tol))
    out = np.zeros(c.shape)
    capped = np.zeros(c.shape, dtype=bool)
    todo = b < c
    if not todo.any():
        return out.reshape(shape), capped.reshape(shape)
    cc, bb, tt = c[todo], b[todo], tol_arr[todo]
    lo = np.zeros(cc.shape)
    hi = cc.copy()
    # t * b >= t * 0 = t, so t = c always suffices for a lawful definer
    with np.errstate(all="ignore"):
        short = ~(definer.apply(hi, bb) >= cc)
        while short.any():
            hi[short] *= 2.0
            over = short & (hi > cap)
            hi[over] = cap
            short = short & ~over & ~(definer.apply(hi, bb) >= cc)
        unreachable = ~(definer.apply(hi, bb) >= cc)
        done = unreachable.copy()
        for _ in range(max_iter):
            active = (hi - lo > tt) & ~done
            if not active.any():
                break
            mid = 0.5 * (lo + hi)
            stuck = active & ((mid <= lo) | (mid >= hi))
            done |= stuck
            active &= ~stuck
            ok = definer.apply(mid, bb) >= cc
            hi = np.where(active & ok, mid, hi)
            lo = np.where(active & ~ok, mid, lo)
    out[todo] = hi
    capped[todo] = unreachable
    return out.reshape(shape), capped.reshape(shape)


def inverse_lower_closed(definer: TDefiner, c, b) -> np.ndarray:
    """Closed-form ``inf {t >= 0 : t * b >= c}`` for the built-in definers.

    Composed definers fall back to bisection (upper bracket end).  No
    validation; inputs must be finite and non-negative.
    """
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    if definer.kind == "lukasiewicz":
        return np.maximum(c - b, 0.0)
    if definer.kind == "maximum":
        return np.where(b >= c, 0.0, c + 0.0 * b)
    if definer.kind == "power":
        q = 1.0 / float(definer.p)
        gap = np.maximum(c ** q - b ** q, 0.0)
        return gap ** float(definer.p)
    return inverse_lower_array(definer, c, b)[0]
