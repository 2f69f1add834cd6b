"""Three points on the half line where the choice of definer decides the axioms.

d(a, b) = (sqrt(a) - sqrt(b))^2 breaks the ordinary triangle inequality but
satisfies the power(2) one.  The chain metric then recovers a true metric.
"""

from starmetric import check_axioms, from_points, lukasiewicz, power
from starmetric.cover import chain_metric

for definer in (lukasiewicz(), power(2)):
    space = from_points([1, 16, 25], "sqrt_diff", definer, ids=["1", "16", "25"])
    rep = check_axioms(space)
    print(f"{definer.description:>24}: passed={rep.passed}")
    if not rep.passed:
        w = rep.witnesses["M3"]
        print(f"{'':>24}  d({w['x']},{w['y']}) = {w['d(x,y)']} > {w['d(x,z)*d(z,y)']} via {w['z']}")

space = from_points([1, 16, 25], "sqrt_diff", power(2), ids=["1", "16", "25"])
print("distance matrix\n", space.distance_matrix())
print("chain metric\n", chain_metric(space).rho)
