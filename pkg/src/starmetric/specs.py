"""Loading spaces, traces, nested families and dense-set lists from JSON and CSV.

A space spec is a JSON object (or a path to one, or a ``.csv`` path):

* ``{"metric": ..., "definer": ..., "points": [...], "ids": [...]}``
* ``{"metric": ..., "definer": ..., "csv": "points.csv"}`` with header ``id,x1,...,xk``
* ``{"definer": ..., "matrix_csv": "dist.csv"}`` with header ``id,<ids>``
* ``{"definer": ..., "matrix": [[...]], "ids": [...]}``
* ``{"exemplar": "halfline_sqrt_diff"}`` optionally with ``"sample": {"n": 50, "seed": 0}``
* ``{"construct": "truncate" | "product" | "union", "inputs": [spec, ...], "mode": ..., "auto_truncate": ...}``

Relative paths resolve against the directory of the file that names them.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from . import construct
from .analysis import Generator, ModulusSchedule, NestedFamily, SequenceTrace, dense_sets_from_spec
from .definer import TDefiner
from .errors import InputError
from .space import EXEMPLARS, Metric, StarSpace, from_matrix, from_points, metric_from_spec

__all__ = [
    "load_json",
    "read_vectors_csv",
    "read_matrix_csv",
    "load_definer",
    "load_space",
    "load_trace",
    "load_family",
    "load_dense_sets",
    "load_schedule",
]


def load_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise InputError(f"{path}: cannot read ({e.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None


def _number(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"{where}: {text!r} is not a number") from None
    if not math.isfinite(v):
        raise InputError(f"{where}: {text!r} is not finite")
    return v


def _rows(path: Path):
    try:
        with path.open(newline="") as fh:
            return [row for row in csv.reader(fh)]
    except OSError as e:
        raise InputError(f"{path}: cannot read ({e.strerror})") from None


def read_vectors_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Rows ``id,x1,...,xk`` under a header whose first column is ``id``."""
    path = Path(path)
    rows = _rows(path)
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "id" or len(header) < 2:
        raise InputError(f"{path}: line 1: header must be 'id,x1,...,xk'")
    k = len(header) - 1
    ids, data = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != k + 1:
            raise InputError(f"{path}: line {lineno}: expected {k + 1} fields, got {len(row)}")
        ids.append(row[0].strip())
        data.append([_number(c.strip(), f"{path}: line {lineno}, field {header[j + 1]}") for j, c in enumerate(row[1:])])
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise InputError(f"{path}: duplicate id {dup!r}")
    return ids, np.array(data, dtype=float).reshape(len(ids), k)


def read_matrix_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Square distance matrix: header ``id,<id_1>,...,<id_n>``, then one row per id in the same order."""
    path = Path(path)
    rows = [r for r in _rows(path) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[0] != "id":
        raise InputError(f"{path}: line 1: header must start with 'id'")
    ids = header[1:]
    n = len(ids)
    if len(rows) - 1 != n:
        raise InputError(f"{path}: header names {n} ids but there are {len(rows) - 1} rows")
    M = np.zeros((n, n))
    for i, row in enumerate(rows[1:]):
        lineno = i + 2
        if len(row) != n + 1:
            raise InputError(f"{path}: line {lineno}: expected {n + 1} fields, got {len(row)}")
        if row[0].strip() != ids[i]:
            raise InputError(f"{path}: line {lineno}: row id {row[0].strip()!r} does not match header id {ids[i]!r}")
        for j, c in enumerate(row[1:]):
            v = _number(c.strip(), f"{path}: line {lineno}, column {ids[j]}")
            if v < 0:
                raise InputError(f"{path}: line {lineno}, column {ids[j]}: negative distance {v!r}")
            M[i, j] = v
    return ids, M


def load_definer(spec) -> TDefiner:
    if isinstance(spec, TDefiner):
        return spec
    if isinstance(spec, str) and spec.lstrip().startswith("{"):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as e:
            raise InputError(f"definer: {e.msg}") from None
    try:
        return TDefiner.from_spec(spec)
    except ValueError as e:
        raise InputError(f"definer: {e}") from None


def _metric(spec) -> Metric:
    try:
        return metric_from_spec(spec)
    except (ValueError, TypeError, AttributeError) as e:
        raise InputError(f"metric: {e}") from None


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def _load_ref(ref, base: Path, definer=None) -> StarSpace:
    if isinstance(ref, str):
        return load_space(_resolve(base, ref), definer=definer)
    return load_space(ref, base=base, definer=definer)


def load_space(spec, base: str | Path | None = None, definer=None) -> StarSpace:
    """Build a space from a spec object, a JSON path or a CSV path.

    ``definer`` (spec or :class:`TDefiner`) overrides the one named in the JSON object.
    """
    if isinstance(spec, (str, Path)):
        path = Path(spec)
        if path.suffix.lower() == ".csv":
            spec, base = {"csv": path.name}, path.parent
        else:
            spec, base = load_json(path), path.parent
    base = Path(base) if base is not None else Path.cwd()
    if not isinstance(spec, dict):
        raise InputError("space spec must be a JSON object")
    override = load_definer(definer) if definer is not None else None

    if "construct" in spec:
        op = spec["construct"]
        if definer is None and "definer" in spec:
            definer = spec["definer"]
        inputs = spec.get("inputs")
        if not isinstance(inputs, list) or not inputs:
            raise InputError("construct: field 'inputs' must be a non-empty list")
        parts = [_load_ref(r, base, definer) for r in inputs]
        try:
            if op == "truncate":
                if len(parts) != 1:
                    raise InputError("construct truncate: needs exactly one input")
                return construct.truncate(parts[0])
            if op == "product":
                return construct.product(parts, spec.get("mode", "fold"), spec.get("materialize"))
            if op == "union":
                return construct.disjoint_union(parts, bool(spec.get("auto_truncate", False)))
        except ValueError as e:
            raise InputError(f"construct {op}: {e}") from None
        raise InputError(f"construct: unknown operation {op!r}")

    if "exemplar" in spec:
        name = spec["exemplar"]
        if name not in EXEMPLARS:
            raise InputError(f"exemplar: unknown name {name!r}; expected one of {sorted(EXEMPLARS)}")
        kwargs = {k: spec[k] for k in ("a", "b") if k in spec}
        space = EXEMPLARS[name](**kwargs)
        if override is not None:
            space = StarSpace(space.metric, override, domain=space.domain, name=space.name)
        sample = spec.get("sample")
        if sample:
            space = space.sample(int(sample.get("n", 32)), int(sample.get("seed", 0)),
                                 sample.get("low"), sample.get("high"))
        return space

    def pick_definer(metric):
        if override is not None:
            return override
        if "definer" in spec:
            return load_definer(spec["definer"])
        if metric.default_definer is None:
            raise InputError("definer: field missing and the metric has no default")
        return metric.default_definer

    name = str(spec.get("name", ""))
    bound = spec.get("bound")
    if "matrix_csv" in spec or "matrix" in spec:
        if "matrix_csv" in spec:
            ids, M = read_matrix_csv(_resolve(base, spec["matrix_csv"]))
        else:
            M = np.asarray(spec["matrix"], dtype=float)
            ids = spec.get("ids")
        if "definer" not in spec and override is None:
            raise InputError("definer: a matrix space needs an explicit definer")
        try:
            space = from_matrix(M, override or load_definer(spec["definer"]), ids=ids, name=name)
        except ValueError as e:
            raise InputError(f"matrix: {e}") from None
        space.bound = bound
        return space

    metric = _metric(spec.get("metric", "euclidean"))
    if "csv" in spec:
        ids, X = read_vectors_csv(_resolve(base, spec["csv"]))
        points = [row for row in X]
    elif "points" in spec:
        points = spec["points"]
        ids = spec.get("ids")
        if not isinstance(points, list):
            raise InputError("points: must be a list")
    else:
        raise InputError("space spec needs one of 'points', 'csv', 'matrix', 'matrix_csv', 'exemplar', 'construct'")
    if ids is not None and len(ids) != len(points):
        raise InputError(f"ids: {len(ids)} ids for {len(points)} points")
    try:
        return from_points(points, metric, pick_definer(metric), ids=None if ids is None else [str(i) for i in ids],
                           bound=bound, name=name)
    except ValueError as e:
        raise InputError(f"points: {e}") from None


def load_schedule(spec, base: Path | None = None) -> ModulusSchedule:
    """``"default"``, a comma-separated epsilon list, a ``.json`` path, or a schedule object."""
    if isinstance(spec, str) and spec != "default":
        if spec.lower().endswith(".json"):
            spec = load_json(_resolve(base or Path.cwd(), spec))
        else:
            try:
                spec = {"epsilons": [float(v) for v in spec.split(",")]}
            except ValueError:
                raise InputError(f"schedule: cannot parse {spec!r}") from None
    try:
        return ModulusSchedule.from_spec(spec)
    except ValueError as e:
        raise InputError(f"schedule: {e}") from None


def _space_field(obj: dict, base: Path, field: str = "space") -> StarSpace:
    if field not in obj:
        raise InputError(f"field {field!r} missing")
    ref = obj[field]
    if isinstance(ref, str) and ref in EXEMPLARS:
        return EXEMPLARS[ref]()
    return _load_ref(ref, base)


def load_trace(path_or_obj, base: Path | None = None) -> tuple[SequenceTrace, dict]:
    """Trace JSON: ``{"space": spec, "terms": [...], "start": 0, "generator": {...}, "length": n}``.

    Returns the trace and the raw object (for optional fields such as ``limit``).
    """
    if isinstance(path_or_obj, (str, Path)):
        base = Path(path_or_obj).parent
        obj = load_json(path_or_obj)
    else:
        obj, base = path_or_obj, base or Path.cwd()
    if not isinstance(obj, dict):
        raise InputError("trace must be a JSON object")
    space = _space_field(obj, base)
    gen = None
    if obj.get("generator") is not None:
        try:
            gen = Generator.from_spec(obj["generator"])
        except ValueError as e:
            raise InputError(f"generator: {e}") from None
    terms = obj.get("terms")
    if terms is not None and not isinstance(terms, list):
        raise InputError("terms: must be a list")
    if terms is not None and space.factors:
        terms = [tuple(t) for t in terms]
    try:
        trace = SequenceTrace(space, terms, int(obj.get("start", 0)), gen, obj.get("length"))
    except ValueError as e:
        raise InputError(f"terms: {e}") from None
    return trace, obj


def load_family(path_or_obj, base: Path | None = None) -> NestedFamily:
    """Family JSON with ``"balls": {"center", "radii"}`` or ``"intervals": {"lows", "highs"}``.

    ``radii`` may be a list or ``{"kind": "reciprocal", "count": n, "scale": 1}``;
    intervals may be ``{"kind": "shrinking", "low", "high", "count"}``.
    """
    if isinstance(path_or_obj, (str, Path)):
        base = Path(path_or_obj).parent
        obj = load_json(path_or_obj)
    else:
        obj, base = path_or_obj, base or Path.cwd()
    space = _space_field(obj, base)
    if space.domain is None:
        raise InputError("space: nested families need an analytic exemplar")
    try:
        if "balls" in obj:
            balls = obj["balls"]
            radii = balls.get("radii")
            if isinstance(radii, dict):
                if radii.get("kind") != "reciprocal":
                    raise InputError(f"balls.radii: unknown kind {radii.get('kind')!r}")
                return NestedFamily.reciprocal_balls(space, float(balls["center"]), int(radii["count"]),
                                                     float(radii.get("scale", 1.0)))
            if radii is None or "center" not in balls and "centers" not in balls:
                raise InputError("balls: needs 'center' (or 'centers') and 'radii'")
            return NestedFamily(space, centers=balls.get("centers", balls.get("center")), radii=radii)
        if "intervals" in obj:
            iv = obj["intervals"]
            if iv.get("kind") == "shrinking":
                return NestedFamily.shrinking_intervals(space, float(iv["low"]), float(iv["high"]), int(iv["count"]))
            return NestedFamily(space, lows=iv["lows"], highs=iv["highs"])
    except KeyError as e:
        raise InputError(f"family: missing field {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"family: {e}") from None
    raise InputError("family needs 'balls' or 'intervals'")


def load_dense_sets(path_or_obj) -> tuple[list, dict]:
    """Dense open sets JSON: ``{"sets": [...] | {"kind": "grid_rationals", "count": k}, "start": [c, r]}``."""
    obj = load_json(path_or_obj) if isinstance(path_or_obj, (str, Path)) else path_or_obj
    if isinstance(obj, list):
        obj = {"sets": obj}
    if not isinstance(obj, dict) or "sets" not in obj:
        raise InputError("dense sets file needs field 'sets'")
    try:
        return dense_sets_from_spec(obj["sets"]), obj
    except ValueError as e:
        raise InputError(f"sets: {e}") from None
