"""``starmetric`` command line.

Every subcommand prints one JSON report (or a short text summary) and
exits 0 when all checks pass, 1 when a violation was found and 2 on bad
input.  Reports are deterministic apart from the ``timing`` field.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analysis, cover, neighbors, specs
from .definer import check_laws, lukasiewicz
from .errors import (BoundError, ConfigurationError, DensityViolationError, InputError, InsufficientDataError,
                     InvalidFamilyError, PreconditionError, SizeError, StarMetricError)
from .space import EXEMPLARS, ball, check_axioms, closed_ball, format_payload

SCHEMA = 1
EXIT_PASS, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


class Violation(Exception):
    """A check failed in a way that still produces a report."""

    def __init__(self, result: dict):
        super().__init__("violation")
        self.result = result


# -- helpers ------------------------------------------------------------------

def _plain(obj):
    """JSON-safe copy: numpy scalars and arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _space(args):
    ref = args.space_opt or args.space
    if ref is None:
        raise InputError("a space is required (positional SPACE or --space)")
    if ref in EXEMPLARS:
        return specs.load_space({"exemplar": ref}, definer=args.definer)
    return specs.load_space(ref, definer=args.definer)


def _index_of(space, token: str) -> int:
    try:
        return space.ids.index(token)
    except ValueError:
        raise InputError(f"no point with id {token!r}") from None


def _id_list(space, text: str | None) -> list[int]:
    if text is None:
        return []
    return [_index_of(space, t.strip()) for t in text.split(",") if t.strip()]


def _floats(text: str, field: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"{field}: cannot parse {text!r} as comma-separated numbers") from None


def _space_summary(space) -> dict:
    out = {"name": space.name, "definer": space.definer.to_spec(), "metric": space.metric.kind}
    if space.is_finite:
        out["size"] = len(space)
    else:
        out["domain"] = list(space.domain)
    return out


def _relative(path: str, anchor: Path) -> str:
    if path in EXEMPLARS:
        return path
    return os.path.relpath(os.path.abspath(path), anchor)


# -- subcommands --------------------------------------------------------------

def cmd_check_laws(args):
    definer = specs.load_definer(args.definer) if args.definer is not None else lukasiewicz()
    rep = check_laws(definer, args.samples, args.max_value, args.seed, args.tol)
    return rep.to_dict(), rep.passed


def cmd_check_axioms(args):
    space = _space(args)
    rep = check_axioms(space, tol=args.tol, cap=args.cap)
    return {"space": _space_summary(space), **rep.to_dict()}, rep.passed


def cmd_ball(args):
    space = _space(args)
    c = _index_of(space, args.center)
    members = (closed_ball if args.closed else ball)(space, c, args.radius)
    return {"space": _space_summary(space), "center": args.center, "radius": args.radius,
            "closed": args.closed, "members": [space.ids[i] for i in sorted(members)],
            "size": len(members)}, True


def cmd_net(args):
    space = _space(args)
    net = cover.greedy_net(space, args.epsilon, args.strategy)
    dense = cover.verify_dense(space, net.centers, args.epsilon)
    return {"space": _space_summary(space), "net": net.to_dict(), "dense": dense.to_dict()}, dense.passed


def cmd_cover_number(args):
    space = _space(args)
    eps = _floats(args.epsilons, "epsilons")
    if not eps:
        raise InputError("epsilons: empty list")
    rows = [{"epsilon": e, "covering_number": cover.covering_number(space, e)} for e in eps]
    ordered = sorted(rows, key=lambda r: r["epsilon"])
    bad = next(((a, b) for a, b in zip(ordered, ordered[1:])
                if b["covering_number"] > a["covering_number"]), None)
    result = {"space": _space_summary(space), "strategy": "farthest", "values": rows,
              "monotone": bad is None}
    if bad is not None:
        result["witness"] = {"smaller": bad[0], "larger": bad[1]}
    return result, bad is None


def cmd_diameter(args):
    space = _space(args)
    subset = None if args.subset is None else _id_list(space, args.subset)
    value = cover.diameter(space, subset)
    return {"space": _space_summary(space), "subset": None if subset is None else [space.ids[i] for i in subset],
            "diameter": value}, True


def cmd_set_distance(args):
    space = _space(args)
    x = _index_of(space, args.point)
    A = _id_list(space, args.subset)
    value = cover.set_distance(space, x, A)
    return {"space": _space_summary(space), "point": args.point, "subset": [space.ids[i] for i in A],
            "distance": value, "empty_set_convention": not A}, True


def cmd_refine_check(args):
    space = _space(args)
    cert = cover.verify_uniformity_base(space, args.n0, minimize=args.minimize)
    return {"space": _space_summary(space), "certificate": cert.to_dict()}, cert.passed


def cmd_metrize(args):
    space = _space(args)
    rep = check_axioms(space, tol=args.tol)
    if not rep.passed:
        raise Violation({"space": _space_summary(space), "axioms": rep.to_dict(),
                         "reason": "space fails its axioms; no chain metric produced"})
    table = cover.chain_metric(space, check=False, tol=args.tol)
    return {"space": _space_summary(space), "chain_metric": table.to_dict()}, table.passed


def _derived(args, spec: dict):
    """Build the derived space, optionally write its spec, and report it."""
    anchor = Path(args.write).resolve().parent if args.write else Path.cwd()
    spec = dict(spec, inputs=[_relative(p, anchor) for p in args.inputs])
    if args.definer is not None:
        spec["definer"] = specs.load_definer(args.definer).to_spec()
    try:
        space = specs.load_space(spec, base=anchor)
    except BoundError as e:
        raise Violation({"spec": spec, "reason": str(e),
                         "witness": {"part": e.part, "pair": list(e.pair), "d": e.value}}) from None
    if args.write:
        Path(args.write).write_text(json.dumps(spec, indent=2, sort_keys=True) + "\n")
    return {"spec": spec, "space": _space_summary(space), "written": args.write}, True


def cmd_truncate(args):
    if len(args.inputs) != 1:
        raise InputError("truncate takes exactly one space spec")
    return _derived(args, {"construct": "truncate"})


def cmd_product(args):
    return _derived(args, {"construct": "product", "mode": args.mode})


def cmd_union(args):
    return _derived(args, {"construct": "union", "auto_truncate": args.auto_truncate})


def cmd_cauchy(args):
    trace, obj = specs.load_trace(args.trace)
    schedule = specs.load_schedule(args.schedule, Path(args.trace).parent)
    verdict = analysis.is_cauchy_prefix(trace, schedule)
    result = {"trace": {"start": trace.start, "length": len(trace)}, "cauchy": verdict.to_dict()}
    passed = verdict.passed
    limit = args.limit if args.limit is not None else obj.get("limit")
    if limit is not None:
        if isinstance(limit, str):
            vals = _floats(limit, "limit")
            limit = vals[0] if len(vals) == 1 else tuple(vals)
        limit = trace.space.metric.normalize(tuple(limit) if isinstance(limit, list) else limit)
        conv = analysis.converges_to(trace, limit, schedule)
        result["limit"] = format_payload(limit)
        result["convergence"] = conv.to_dict()
        passed = passed and conv.passed
    if trace.space.factors:
        proj = analysis.project_product_cauchy(trace, schedule)
        result["projection"] = {"mode": proj["mode"], "product": proj["product"].to_dict(),
                                "factors": [v.to_dict() for v in proj["factors"]],
                                "consistent": proj["consistent"]}
        passed = passed and proj["consistent"]
    return result, passed


def cmd_extract(args):
    trace, _ = specs.load_trace(args.trace)
    radii = _floats(args.radii, "radii") if args.radii else None
    ex = analysis.extract_cauchy_subsequence(trace, depth=args.depth, radii=radii)
    return {"trace": {"start": trace.start, "length": len(trace)}, "extraction": ex.to_dict()}, ex.passed


def cmd_cantor(args):
    family = specs.load_family(args.family)
    res = analysis.cantor_intersection(family, tol=args.tol, seed=args.seed)
    return {"sets": len(family), **res.to_dict()}, res.passed


def cmd_baire(args):
    space = _space(args)
    sets, obj = specs.load_dense_sets(args.predicates)
    start = obj.get("start")
    try:
        res = analysis.baire_point(space, sets, depth=args.depth, seed=args.seed,
                                   start=None if start is None else (float(start[0]), float(start[1])))
    except DensityViolationError as e:
        raise Violation({"reason": str(e), "witness": {"step": e.step}}) from None
    return {"space": _space_summary(space), "depth": len(res.steps), **res.to_dict()}, res.passed


def _query(space, text: str):
    if space.metric.kind != "matrix":
        try:
            vals = [float(t) for t in text.split(",")]
            return space.metric.normalize(vals[0] if len(vals) == 1 else vals)
        except ValueError:
            pass
    return space.payloads[_index_of(space, text)]


def cmd_nn(args):
    space = _space(args)
    q = _query(space, args.query)
    index = neighbors.build_index(space, args.pivot_epsilon)
    hit = neighbors.nn_pruned(index, q)
    result = {"space": _space_summary(space), "query": format_payload(q), "index": index.to_dict(),
              "pruned": {"nearest": space.ids[hit.index], "distance": hit.distance, "evals": hit.evals}}
    passed = True
    if args.compare_linear:
        lin = neighbors.nn_linear(space, q)
        agree = lin.index == hit.index and lin.distance == hit.distance
        result["linear"] = {"nearest": space.ids[lin.index], "distance": lin.distance, "evals": lin.evals}
        result["agree"] = agree
        result["eval_ratio"] = hit.evals / lin.evals
        passed = agree
    return result, passed


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--output", choices=("json", "text"), default="json")
    common.add_argument("--definer", help="definer name or JSON object, overriding the input's")

    with_space = argparse.ArgumentParser(add_help=False, parents=[common])
    with_space.add_argument("space", nargs="?", help="space spec (.json, .csv or exemplar name)")
    with_space.add_argument("--space", dest="space_opt")

    p = argparse.ArgumentParser(prog="starmetric", description="Star-metric space toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check-laws", parents=[common], help="probe the t-definer laws")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--max-value", type=float, default=10.0)
    s.set_defaults(func=cmd_check_laws)

    s = sub.add_parser("check-axioms", parents=[with_space], help="M1-M3 over all pairs and triples")
    s.add_argument("--cap", type=int, default=500)
    s.set_defaults(func=cmd_check_axioms)

    s = sub.add_parser("ball", parents=[with_space], help="members of a ball")
    s.add_argument("--center", required=True)
    s.add_argument("--radius", type=float, required=True)
    s.add_argument("--closed", action="store_true")
    s.set_defaults(func=cmd_ball)

    s = sub.add_parser("net", parents=[with_space], help="greedy epsilon-net")
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--strategy", choices=cover.NET_STRATEGIES, default="packing")
    s.set_defaults(func=cmd_net)

    s = sub.add_parser("cover-number", parents=[with_space], help="covering numbers over an epsilon list")
    s.add_argument("--epsilons", required=True)
    s.set_defaults(func=cmd_cover_number)

    s = sub.add_parser("diameter", parents=[with_space])
    s.add_argument("--subset", help="comma-separated point ids (default: all)")
    s.set_defaults(func=cmd_diameter)

    s = sub.add_parser("set-distance", parents=[with_space])
    s.add_argument("--point", required=True)
    s.add_argument("--subset", default="", help="comma-separated point ids (may be empty)")
    s.set_defaults(func=cmd_set_distance)

    s = sub.add_parser("refine-check", parents=[with_space], help="uniformity-base certificate")
    s.add_argument("--n0", type=int, required=True)
    s.add_argument("--minimize", action="store_true")
    s.set_defaults(func=cmd_refine_check)

    s = sub.add_parser("metrize", parents=[with_space], help="chain metric below the star distance")
    s.set_defaults(func=cmd_metrize)

    for name, func in (("truncate", cmd_truncate), ("product", cmd_product), ("union", cmd_union)):
        s = sub.add_parser(name, parents=[common], help=f"{name} spec for the given inputs")
        s.add_argument("inputs", nargs="+")
        s.add_argument("--write", help="also save the derived spec here")
        if name == "product":
            s.add_argument("--mode", choices=("fold", "max"), default="fold")
        if name == "union":
            s.add_argument("--auto-truncate", action="store_true")
        s.set_defaults(func=func)

    s = sub.add_parser("cauchy", parents=[common], help="Cauchy (and convergence) check of a trace prefix")
    s.add_argument("--trace", required=True)
    s.add_argument("--schedule", default="default")
    s.add_argument("--limit")
    s.set_defaults(func=cmd_cauchy)

    s = sub.add_parser("extract", parents=[common], help="Cauchy subsequence of a trace")
    s.add_argument("--trace", required=True)
    s.add_argument("--depth", type=int)
    s.add_argument("--radii")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("cantor", parents=[common], help="point of a nested closed family")
    s.add_argument("--family", required=True)
    s.set_defaults(func=cmd_cantor)

    s = sub.add_parser("baire", parents=[with_space], help="point in finitely many dense open sets")
    s.add_argument("--predicates", required=True)
    s.add_argument("--depth", type=int)
    s.set_defaults(func=cmd_baire)

    s = sub.add_parser("nn", parents=[with_space], help="exact nearest neighbour with pivot pruning")
    s.add_argument("--query", required=True)
    s.add_argument("--pivot-epsilon", type=float)
    s.add_argument("--compare-linear", action="store_true")
    s.set_defaults(func=cmd_nn)
    return p


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}


def _text(report: dict) -> str:
    lines = [f"{report['command']}: {'PASS' if report['passed'] else 'FAIL'}"]
    for key, value in report["result"].items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
            if len(value) > 160:
                value = value[:157] + "..."
        lines.append(f"  {key}: {value}")
    return "\n".join(lines)


def render(report: dict, mode: str = "json") -> str:
    if mode == "text":
        return _text(report)
    return json.dumps(report, sort_keys=True, indent=2)


def run(argv=None) -> tuple[dict | None, int]:
    """Parse, execute, and return ``(report, exit code)``; the report is None on input errors."""
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        result, passed = args.func(args)
        code = EXIT_PASS if passed else EXIT_VIOLATION
    except Violation as v:
        result, passed, code = v.result, False, EXIT_VIOLATION
    except InvalidFamilyError as e:
        result, passed, code = {"reason": str(e)}, False, EXIT_VIOLATION
    except (InputError, ConfigurationError, InsufficientDataError, PreconditionError, SizeError,
            OSError, ValueError, IndexError, TypeError, StarMetricError) as e:
        print(f"starmetric {args.command}: error: {e}", file=sys.stderr)
        return None, EXIT_INPUT
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "command": args.command,
        "config": _config(args),
        "result": result,
        "passed": bool(passed),
        "timing": {"seconds": round(time.perf_counter() - t0, 6)},
    }
    return _plain(report), code


def main(argv=None) -> int:
    report, code = run(argv)
    if report is not None:
        print(render(report, report["config"]["output"]))
    return code


if __name__ == "__main__":
    sys.exit(main())
