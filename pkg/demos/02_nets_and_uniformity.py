"""Epsilon nets, covering numbers and the uniformity certificate on a random line sample."""

import numpy as np

from starmetric import from_points, lukasiewicz
from starmetric.cover import covering_number, greedy_net, verify_dense, verify_uniformity_base

rng = np.random.default_rng(0)
space = from_points(np.sort(rng.uniform(0, 5, 40)), "euclidean", lukasiewicz())

for eps in (2.0, 1.0, 0.5, 0.25):
    net = greedy_net(space, eps)
    print(f"eps={eps:<5} centers={len(net.centers):2d} dense={bool(verify_dense(space, net.centers, eps))}"
          f" covering_number={covering_number(space, eps)}")

cert = verify_uniformity_base(space, 1, minimize=True)
print(f"n0=1 -> n1={cert.n1} (smallest that works here: {cert.minimal_n1}), passed={cert.passed}")
