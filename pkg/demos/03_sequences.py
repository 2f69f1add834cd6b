"""Sequences on the sqrt-difference half line: convergence, Cauchy prefixes, nested balls, Baire points."""

from starmetric.analysis import (NestedFamily, PointComplement, SequenceTrace, baire_point, cantor_intersection,
                                 converges_to, extract_cauchy_subsequence, grid_rationals, is_cauchy_prefix)
from starmetric.space import halfline_sqrt_diff, interval_lukasiewicz

H = halfline_sqrt_diff()

trace = SequenceTrace(H, generator={"kind": "power_law", "limit": 4.0, "exponent": 1}, start=1, length=200)
conv = converges_to(trace, 4.0)
print("x_n = 4 + 1/n converges to 4:", conv.passed, "thresholds", conv.schedule.thresholds[:6])
print("and its prefix is Cauchy:", is_cauchy_prefix(trace).passed)

wobble = SequenceTrace(H, [1.0, 9.0] * 20)
ex = extract_cauchy_subsequence(wobble, depth=6)
print("alternating 1, 9: Cauchy?", is_cauchy_prefix(wobble).passed, "-> subsequence", ex.indices)

family = NestedFamily.reciprocal_balls(H, 4.0, 1_000_000)
res = cantor_intersection(family, tol=1e-5)
print(f"closed balls B[4, 1/n], n <= 1e6, meet at {res.point:.8f}")

qs = grid_rationals(10)
b = baire_point(interval_lukasiewicz(), [PointComplement([q]) for q in qs], depth=10)
print(f"point of [0, 1] avoiding {len(qs)} rationals: {b.point:.10f}, radii {[round(s['epsilon'], 6) for s in b.steps[:4]]}...")
