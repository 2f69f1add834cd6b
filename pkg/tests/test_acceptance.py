"""Acceptance suite: one test per criterion, each also timed against its runtime budget.

Every test records a one-line verdict; ``conftest.py`` prints them at the end
of the run, and ``python tests/test_acceptance.py`` runs just this file.
"""

import contextlib
import io
import json
import time

import numpy as np
import pytest

from helpers import FAMILIES, naive_star_refines, random_space
from starmetric.analysis import (ModulusSchedule, NestedFamily, PointComplement, SequenceTrace, baire_point,
                                 cantor_intersection, cauchy_via_limit, extract_cauchy_subsequence, grid_rationals,
                                 is_cauchy_prefix)
from starmetric.cli import main
from starmetric.construct import disjoint_union, product, truncate
from starmetric.cover import (ball_cover, chain_metric, covering_number, greedy_net, product_net, union_net,
                              verify_dense, verify_uniformity_base)
from starmetric.definer import check_laws, composed, joint_zero_radius, lukasiewicz, maximum, power
from starmetric.neighbors import build_index, cluster_dataset, nn_linear, nn_pruned
from starmetric.space import ball, check_axioms, from_points, halfline_sqrt_diff, interval_lukasiewicz

RESULTS: dict[int, str] = {}
BUILTINS = [lukasiewicz(), maximum(), power(0.5), power(1.0), power(2.0), power(3.0)]
PLUS_ONE = composed({"op": "+", "args": [{"op": "a"}, {"op": "b"}, {"op": "const", "value": 1}]})
ABS_DIFF = composed({"op": "abs", "args": [{"op": "-", "args": [{"op": "a"}, {"op": "b"}]}]})


@contextlib.contextmanager
def criterion(number: int, title: str, budget: float | None = None):
    t0 = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - t0
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.2f} s, budget {budget} s"
    except BaseException:
        RESULTS[number] = f"FAIL  criterion {number:2d}: {title}"
        raise
    RESULTS[number] = f"PASS  criterion {number:2d}: {title} ({elapsed:.2f} s)"


def corpus(family: str, count: int = 50, seed: int = 0):
    rng = np.random.default_rng(seed)
    return [random_space(family, rng) for _ in range(count)]


def worked_space(definer):
    return from_points([1, 16, 25], "sqrt_diff", definer, ids=["1", "16", "25"])


def test_c01_counterexample():
    with criterion(1, "M3 fails 16 vs 10 under a+b, passes under power(2)", 1.0):
        rep = check_axioms(worked_space(lukasiewicz()))
        w = rep.witnesses["M3"]
        assert not rep.m3 and w["d(x,y)"] == 16.0 and w["d(x,z)*d(z,y)"] == 10.0
        assert check_axioms(worked_space(power(2))).passed


def test_c02_law_suite():
    with criterion(2, "definer laws on 1e5 samples, broken definers caught", 5.0):
        for d in BUILTINS:
            rep = check_laws(d, 100_000, seed=0, tol=1e-9)
            assert rep.passed, (d, rep.witnesses)
        for bad in (PLUS_ONE, ABS_DIFF):
            a = check_laws(bad, 100_000, seed=1)
            b = check_laws(bad, 100_000, seed=1)
            assert not a.passed and a.to_dict() == b.to_dict()


def test_c03_radius():
    with criterion(3, "joint zero radius on 100 r and 1e3 pairs", 5.0):
        rng = np.random.default_rng(0)
        for d in BUILTINS:
            for r in rng.uniform(0, 10, 100):
                r = float(max(r, 1e-9))
                r1 = joint_zero_radius(d, r)
                assert float(d.apply(r1, r1)) <= r * (1 - 1e-6)
                a, b = rng.uniform(0, r1, (2, 1000))
                assert np.all(d.apply(a, b) < r)
        assert 0.4999 <= joint_zero_radius(lukasiewicz(), 1.0) <= 0.5
        assert 0.2499 <= joint_zero_radius(power(2), 1.0) <= 0.25


def test_c04_uniformity():
    with criterion(4, "uniformity certificate on 50 spaces per definer", 30.0):
        for family in sorted(FAMILIES):
            for s in corpus(family):
                for n0 in (1, 2, 4):
                    cert = verify_uniformity_base(s, n0)
                    assert cert.passed, (family, n0, cert.witnesses)
                    assert naive_star_refines(ball_cover(s, cert.n1).members, ball_cover(s, n0).members)
                    if family == "lukasiewicz" and n0 == 1:
                        assert cert.n1 == 4


def test_c05_chain_metric():
    with criterion(5, "chain metric is a metric below d, equal for a+b", 30.0):
        for family in sorted(FAMILIES):
            for s in corpus(family):
                rho, D = chain_metric(s).rho, s.distance_matrix()
                for y in range(len(s)):
                    assert np.all(rho <= rho[:, y, None] + rho[None, y, :] + 1e-12)
                assert np.all(rho <= D)
                if family == "lukasiewicz":
                    assert np.allclose(rho, D, rtol=0, atol=1e-12)
        assert chain_metric(worked_space(power(2))).rho[0, 2] == 10.0


def test_c06_covering():
    with criterion(6, "nets dense and packed, covering numbers monotone, product and union nets", 30.0):
        rng = np.random.default_rng(6)
        grid = np.geomspace(0.02, 4, 10)
        for family in sorted(FAMILIES):
            for s in corpus(family, 20, seed=6):
                for eps in grid:
                    net = greedy_net(s, eps)
                    assert verify_dense(s, net.centers, eps)
                    D = s.distance_matrix()[np.ix_(net.centers, net.centers)]
                    assert np.all(D[~np.eye(len(net.centers), dtype=bool)] >= eps)
                counts = [covering_number(s, e) for e in grid]
                assert all(b <= a for a, b in zip(counts, counts[1:]))
            for _ in range(10):
                f = [random_space(family, rng, n=int(rng.integers(1, 7))) for _ in range(int(rng.integers(1, 4)))]
                for eps in (0.1, 0.5, 1.5):
                    for mode in ("fold", "max"):
                        p = product(f, mode)
                        assert verify_dense(p, product_net(p, eps).centers, eps)
                    parts = [truncate(x) for x in f]
                    u = disjoint_union(parts)
                    expected, off = [], 0
                    for part in parts:
                        expected += [off + c for c in greedy_net(part, eps).centers]
                        off += len(part)
                    un = union_net(u, eps)
                    assert un.centers == expected and verify_dense(u, un.centers, eps)


def test_c07_construction_closure():
    with criterion(7, "constructions pass axioms on 100 inputs, truncation keeps small balls", 30.0):
        rng = np.random.default_rng(7)
        names = sorted(FAMILIES)
        for k in range(100):
            family = names[k % len(names)]
            spaces = [random_space(family, rng, n=int(rng.integers(1, 9))) for _ in range(int(rng.integers(1, 4)))]
            mode = "fold" if k % 2 else "max"
            assert check_axioms(truncate(spaces[0])).passed
            assert check_axioms(product(spaces, mode)).passed
            assert check_axioms(disjoint_union(spaces, auto_truncate=True)).passed
            t = truncate(spaces[0])
            for eps in np.arange(1, 10) / 10:
                for c in range(len(t)):
                    assert ball(spaces[0], c, eps) == ball(t, c, eps)


def test_c08_sequences():
    with criterion(8, "forward check, extraction, nested balls at 4, Baire schedule", 10.0):
        rng = np.random.default_rng(8)
        h, line = halfline_sqrt_diff(), interval_lukasiewicz(-1e6, 1e6)
        eps = ModulusSchedule.default(6).epsilons
        for k in range(100):
            space = h if k % 2 else line
            limit = float(rng.uniform(0, 20))
            scale = float(rng.uniform(0.1, 3)) * (1 if space is h else float(rng.choice([-1, 1])))
            gen = {"kind": "power_law", "limit": limit, "scale": scale, "exponent": float(rng.uniform(1, 3))}
            fc = cauchy_via_limit(SequenceTrace(space, generator=gen, start=1, length=64), limit, eps)
            assert fc.passed
            terms = rng.uniform(0, 10, int(rng.integers(5, 300))).tolist()
            ex = extract_cauchy_subsequence(SequenceTrace(h, terms), depth=int(rng.integers(2, 10)))
            assert ex.cauchy is None or is_cauchy_prefix(ex.subsequence, ex.schedule).passed
        # deepest ball has diameter 4/n, so 4e6 balls reach 1e-6
        fam = NestedFamily.reciprocal_balls(h, 4.0, 5_000_000)
        res = cantor_intersection(fam, tol=1e-6)
        assert res.passed and abs(res.point - 4.0) <= 1e-6
        qs = grid_rationals(10)
        b = baire_point(interval_lukasiewicz(), [PointComplement([q]) for q in qs], depth=10)
        assert b.passed and b.point not in qs
        e = [s["epsilon"] for s in b.steps]
        assert len(e) == 10 and e[0] < 0.25 and all(y < x / 2 for x, y in zip(e, e[1:]))


def test_c09_pruned_search():
    with criterion(9, "pruned search exact on 1000 queries per family, clusters under 60%", 10.0):
        rng = np.random.default_rng(9)
        for family in sorted(FAMILIES):
            s = random_space(family, rng, n=300)
            idx = build_index(s)
            hi = 1.5 if family == "power3" else 3.0
            qs = rng.uniform(0, hi, 1000)
            if family == "maximum":
                qs = np.round(qs * 64) / 64
            for q in qs.tolist():
                a, b = nn_linear(s, q), nn_pruned(idx, q)
                assert (a.index, a.distance) == (b.index, b.distance)
                assert b.evals <= a.evals
        s = cluster_dataset(500, seed=0)
        idx = build_index(s)
        total = lin = 0
        for q in (np.round(rng.uniform(0, 1, 1000) * 64) / 64).tolist():
            a, b = nn_linear(s, q), nn_pruned(idx, q)
            assert (a.index, a.distance) == (b.index, b.distance)
            total, lin = total + b.evals, lin + a.evals
        assert total <= 0.6 * lin, total / lin


def _cli_bytes(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(io.StringIO()):
        code = main(argv)
    obj = json.loads(buf.getvalue())
    obj.pop("timing")
    return code, json.dumps(obj, sort_keys=True, indent=2)


def test_c10_determinism(tmp_path):
    with criterion(10, "every CLI command reproduces its report byte for byte"):
        def put(name, obj):
            (tmp_path / name).write_text(json.dumps(obj))
            return str(tmp_path / name)

        sp = put("s.json", {"metric": "sqrt_diff", "definer": {"kind": "power", "p": 2},
                            "points": [1, 16, 25, 30, 2], "ids": ["1", "16", "25", "30", "2"]})
        bad = put("bad.json", {"metric": "sqrt_diff", "definer": "lukasiewicz", "points": [1, 16, 25]})
        trace = put("t.json", {"space": {"exemplar": "halfline_sqrt_diff"}, "start": 1, "length": 100,
                               "generator": {"kind": "power_law", "limit": 4, "exponent": 1}, "limit": 4})
        fam = put("f.json", {"space": {"exemplar": "halfline_sqrt_diff"},
                             "balls": {"center": 4, "radii": {"kind": "reciprocal", "count": 10000}}})
        preds = put("p.json", {"sets": {"kind": "grid_rationals", "count": 10}})
        commands = [
            ["check-laws", "--samples", "5000", "--definer", '{"kind": "power", "p": 3}'],
            ["check-axioms", bad],
            ["ball", sp, "--center", "16", "--radius", "1.5"],
            ["net", sp, "--epsilon", "2", "--strategy", "farthest"],
            ["cover-number", sp, "--epsilons", "0.5,1,4"],
            ["diameter", sp],
            ["set-distance", sp, "--point", "1", "--subset", "25,30"],
            ["refine-check", sp, "--n0", "2", "--minimize"],
            ["metrize", sp],
            ["truncate", sp],
            ["product", sp, sp, "--mode", "max"],
            ["union", sp, sp, "--auto-truncate"],
            ["cauchy", "--trace", trace],
            ["extract", "--trace", trace, "--depth", "6"],
            ["cantor", "--family", fam, "--tol", "1e-3"],
            ["baire", "interval_lukasiewicz", "--predicates", preds, "--seed", "4"],
            ["nn", sp, "--query", "17", "--compare-linear"],
        ]
        for argv in commands:
            first = _cli_bytes(argv)
            assert first == _cli_bytes(argv), argv[0]


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
