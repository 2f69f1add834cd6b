import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import FAMILIES, random_space
from starmetric.construct import (LazyProduct, disjoint_union, part_offsets, product, product_index,
                                  truncate)
from starmetric.definer import fold, lukasiewicz, maximum, power
from starmetric.errors import BoundError, ConfigurationError, SizeError
from starmetric.space import ball, check_axioms, from_points


def line(pts, definer=None):
    return from_points(pts, "euclidean", definer)


def test_truncate_values():
    s = from_points([1, 16, 25], "sqrt_diff", ids=["1", "16", "25"])
    t = truncate(s)
    assert t.dist(0, 2) == 1.0
    assert t.bound == 1.0 and t.definer == s.definer
    half = truncate(line([0.0, 0.5]))
    assert half.dist(0, 1) == 0.5


def test_product_examples():
    a = line([0.0, 1.0])
    b = line([0.0, 2.0])
    fold_space = product([a, b], "fold")
    max_space = product([a, b], "max")
    x = fold_space.payloads.index((0.0, 0.0))
    y = fold_space.payloads.index((1.0, 2.0))
    assert fold_space.dist(x, y) == 3.0
    assert max_space.dist(x, y) == 2.0
    assert fold_space.factors == [a, b]


@pytest.mark.parametrize("mode", ["fold", "max"])
def test_single_factor_product_is_identity(mode):
    s = random_space("power2", np.random.default_rng(0), n=10)
    p = product([s], mode)
    assert np.array_equal(p.distance_matrix(), s.distance_matrix())


def test_product_definer_mismatch():
    with pytest.raises(ConfigurationError):
        product([line([0.0, 1.0]), line([0.0, 1.0], maximum())])
    with pytest.raises(ConfigurationError):
        product([line([0.0])], "sum")


def test_product_lazy_and_cap():
    a = line(np.arange(200.0))
    lazy = product([a, a])
    assert isinstance(lazy.payloads, LazyProduct) and len(lazy) == 40000
    i = product_index([a, a], [3, 7])
    assert lazy.payloads[i] == (3.0, 7.0) and lazy.ids[i] == "(3,7)"
    assert lazy.dist(i, product_index([a, a], [0, 0])) == 10.0
    with pytest.raises(SizeError):
        product([a, a], materialize=True)


def test_union_examples():
    a = line([0.0, 0.5])
    b = line([0.0, 0.25, 0.75])
    u = disjoint_union([a, b])
    assert u.dist(0, 2) == 1.0
    assert u.dist(0, 1) == 0.5 and u.dist(2, 4) == 0.75
    assert part_offsets(u) == [0, 2]
    one = disjoint_union([b])
    assert np.array_equal(one.distance_matrix(), b.distance_matrix())


def test_union_bound_error_names_pair():
    a = from_points([1, 16, 25], "sqrt_diff", ids=["1", "16", "25"])
    b = from_points([1, 4], "sqrt_diff")
    with pytest.raises(BoundError) as exc:
        disjoint_union([b, a])
    assert exc.value.part == 1 and exc.value.pair == ("1", "25") and exc.value.value == 16.0
    u = disjoint_union([a, b], auto_truncate=True)
    assert u.distance_matrix().max() == 1.0
    assert check_axioms(u).passed


def test_union_cross_distance_bit_exact():
    rng = np.random.default_rng(3)
    parts = [truncate(random_space("lukasiewicz", rng, n=6)) for _ in range(3)]
    u = disjoint_union(parts)
    D = u.distance_matrix()
    tags = np.array([p[0] for p in u.payloads])
    cross = tags[:, None] != tags[None, :]
    assert np.all(D[cross] == 1.0)


families = st.sampled_from(sorted(FAMILIES))


@given(st.integers(0, 2**32 - 1), families, st.sampled_from(["fold", "max"]))
def test_constructions_pass_axioms(seed, family, mode):
    rng = np.random.default_rng(seed)
    spaces = [random_space(family, rng, n=int(rng.integers(1, 9))) for _ in range(int(rng.integers(1, 4)))]
    assert check_axioms(truncate(spaces[0])).passed
    assert check_axioms(product(spaces, mode)).passed
    assert check_axioms(disjoint_union(spaces, auto_truncate=True)).passed


@given(st.integers(0, 2**32 - 1), families)
def test_truncated_balls_equal_below_one(seed, family):
    s = random_space(family, np.random.default_rng(seed), n=12)
    t = truncate(s)
    for eps in np.arange(1, 10) / 10:
        for c in range(len(s)):
            assert ball(s, c, eps) == ball(t, c, eps)


@given(st.integers(0, 2**32 - 1), families)
def test_max_product_projection_contracts(seed, family):
    rng = np.random.default_rng(seed)
    f = [random_space(family, rng, n=5) for _ in range(2)]
    for mode in ("max", "fold"):
        p = product(f, mode)
        D = p.distance_matrix()
        for k, fac in enumerate(f):
            idx = np.array(np.unravel_index(np.arange(len(p)), (len(f[0]), len(f[1])))[k])
            Dk = fac.distance_matrix()[np.ix_(idx, idx)]
            assert np.all(Dk <= D * (1 + 1e-12) + 1e-15)


def test_fold_product_matches_fold_of_coordinates():
    rng = np.random.default_rng(9)
    f = [random_space("power2", rng, n=4) for _ in range(3)]
    p = product(f, "fold")
    for _ in range(20):
        i, j = rng.integers(len(p), size=2)
        x, y = p.payloads[i], p.payloads[j]
        coords = [fac.payload_distance(a, b) for fac, a, b in zip(f, x, y)]
        assert p.dist(i, j) == pytest.approx(fold(power(2), coords), rel=1e-12)
