import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starmetric.analysis import (EmptySet, Generator, ModulusSchedule, NestedFamily, PointComplement, SequenceTrace,
                                 WholeSpace, baire_point, cantor_intersection, cauchy_via_limit, converges_to,
                                 extract_cauchy_subsequence, grid_rationals, is_cauchy_prefix,
                                 project_product_cauchy, radius_schedule)
from starmetric.construct import product
from starmetric.definer import joint_zero_radius, lukasiewicz, power
from starmetric.errors import (ConfigurationError, DensityViolationError, InsufficientDataError, InvalidFamilyError,
                               PreconditionError)
from starmetric.space import from_points, halfline_sqrt_diff, interval_lukasiewicz

H = halfline_sqrt_diff()
I = interval_lukasiewicz()


def real_line():
    return interval_lukasiewicz(-1e6, 1e6)


def test_schedule_validation():
    assert ModulusSchedule.default().epsilons[:3] == (0.5, 0.25, 0.125)
    assert len(ModulusSchedule.default().epsilons) == 20
    with pytest.raises(ConfigurationError):
        ModulusSchedule((0.5, 0.5))
    with pytest.raises(ConfigurationError):
        ModulusSchedule((0.5, 0.25), (1,))
    g = ModulusSchedule.from_spec({"kind": "geometric", "ratio": 0.1, "count": 3})
    assert g.epsilons == pytest.approx((0.1, 0.01, 0.001))


def test_generator_round_trip():
    g = Generator.make("product", coordinates=[{"kind": "power_law", "exponent": 2}, {"kind": "constant", "value": 3}])
    assert Generator.from_spec(g.to_spec()) == g
    assert g.values([1, 2]) == [(1.0, 3), (0.25, 3)]
    with pytest.raises(ConfigurationError):
        Generator.make("fibonacci")


def test_constant_converges():
    t = SequenceTrace(H, [2.5] * 40)
    for sched in (None, ModulusSchedule((1.0, 1e-9), (0, 10))):
        assert converges_to(t, 2.5, sched).passed


def test_inverse_square_converges_to_zero():
    t = SequenceTrace(H, generator={"kind": "power_law", "exponent": 2}, start=1, length=100)
    d = H.metric.pairwise([0.0], t.terms)[0]
    assert np.allclose(d, 1.0 / np.arange(1, 101) ** 2, rtol=1e-14)
    v = converges_to(t, 0.0)
    assert v.passed and v.discovered
    # N_k is one past the last n with 1/n^2 >= 2^-k
    for e, N in zip(v.schedule.epsilons, v.schedule.thresholds):
        assert 1.0 / N ** 2 < e <= 1.0 / (N - 1) ** 2


def test_alternating_fails():
    t = SequenceTrace(real_line(), [0, 1] * 20)
    v = converges_to(t, 0.0, ModulusSchedule((0.5,), (4,)))
    assert not v.passed and v.witness["n"] == 5
    c = is_cauchy_prefix(t, ModulusSchedule((0.5,), (10,)))
    assert not c.passed and (c.witness["m"], c.witness["n"]) == (10, 11)
    assert c.to_dict()["scope"] == "finite prefix only"


def test_geometric_sum_cauchy():
    t = SequenceTrace(real_line(), generator={"kind": "geometric_sum", "ratio": 0.5}, length=10)
    sched = ModulusSchedule.default()
    sched = ModulusSchedule(sched.epsilons, tuple(k + 1 for k in range(1, 21)))
    v = is_cauchy_prefix(t, sched)
    assert v.passed and v.probed_until >= 21


def test_insufficient_data():
    t = SequenceTrace(H, [1.0, 1.0])
    with pytest.raises(InsufficientDataError):
        is_cauchy_prefix(t, ModulusSchedule((0.5,), (5,)))
    with pytest.raises(InsufficientDataError):
        SequenceTrace(H)


def test_trace_rejects_foreign_points():
    s = from_points([0.0, 1.0], "euclidean")
    with pytest.raises(ConfigurationError):
        SequenceTrace(s, [0.0, 2.0])
    with pytest.raises(ConfigurationError):
        SequenceTrace(H, [-1.0])


@given(st.integers(0, 2**32 - 1))
def test_forward_check_property(seed):
    rng = np.random.default_rng(seed)
    space = H if rng.random() < 0.5 else real_line()
    limit = float(rng.uniform(0, 20))
    gen = {"kind": "power_law", "limit": limit, "scale": float(rng.choice([-1, 1]) * rng.uniform(0.1, 3)) if
           space is not H else float(rng.uniform(0.1, 3)), "exponent": float(rng.uniform(1, 3))}
    t = SequenceTrace(space, generator=gen, start=1, length=64)
    # keeps the discovered thresholds well under the pairwise term cap
    eps = ModulusSchedule.default(6).epsilons
    fc = cauchy_via_limit(t, limit, eps)
    assert fc.convergence.passed
    assert fc.cauchy is not None and fc.cauchy.passed
    for r, e in zip(fc.radii, eps):
        assert float(space.definer.apply(r, r)) < e


def test_extract_alternating():
    t = SequenceTrace(real_line(), [0, 1] * 10)
    ex = extract_cauchy_subsequence(t, depth=5)
    assert ex.indices == [0, 2, 4, 6, 8]
    assert ex.passed and ex.certificate


def test_extract_constant_is_identity():
    t = SequenceTrace(H, [7.0] * 6)
    ex = extract_cauchy_subsequence(t, depth=6)
    assert ex.indices == list(range(6))


def test_extract_empty():
    with pytest.raises(InsufficientDataError):
        extract_cauchy_subsequence(SequenceTrace(H, []))


@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_extraction_always_cauchy(seed, depth):
    rng = np.random.default_rng(seed)
    space = H if rng.random() < 0.5 else I
    hi = 10 if space is H else 1
    terms = rng.uniform(0, hi, size=int(rng.integers(5, 400))).tolist()
    ex = extract_cauchy_subsequence(SequenceTrace(space, terms), depth=depth)
    assert ex.certificate
    assert all(a < b for a, b in zip(ex.indices, ex.indices[1:]))
    if ex.achieved_depth:
        assert ex.cauchy.passed
        # the schedule comes from the level radii through the definer
        for r, e in zip([lev["radius"] for lev in ex.levels], ex.schedule.epsilons):
            assert e >= float(space.definer.apply(r, r))


def test_already_cauchy_trace_extracts_cauchy():
    t = SequenceTrace(H, generator={"kind": "power_law", "limit": 4, "exponent": 1}, start=1, length=200)
    ex = extract_cauchy_subsequence(t, depth=8)
    assert ex.passed and ex.achieved_depth == 8


def test_product_projection():
    f1, f2 = real_line(), real_line()
    prod_space = product([from_points([0.0], "euclidean"), from_points([0.0], "euclidean")], "fold")
    assert prod_space.factors
    p = product([f1, f2], "fold")
    t = SequenceTrace(p, generator={"kind": "product", "coordinates": [{"kind": "power_law"},
                                                                         {"kind": "constant", "value": 2.0}]},
                      start=1, length=64)
    res = project_product_cauchy(t)
    assert res["product"].passed and all(v.passed for v in res["factors"]) and res["consistent"]
    with pytest.raises(ConfigurationError):
        project_product_cauchy(SequenceTrace(H, [1.0]))


@given(st.integers(0, 2**32 - 1))
def test_product_max_consistency(seed):
    rng = np.random.default_rng(seed)
    p = product([real_line(), real_line()], "max")
    coords = [{"kind": "power_law", "limit": float(rng.uniform(-1, 1)), "scale": float(rng.uniform(0.1, 2)),
               "exponent": float(rng.uniform(0.3, 2))},
              {"kind": "alternating", "values": [0.0, float(rng.choice([0.0, 1e-3, 1.0]))]}]
    t = SequenceTrace(p, generator={"kind": "product", "coordinates": coords}, start=1, length=128)
    sched = ModulusSchedule((0.5, 0.1), (int(rng.integers(1, 40)), int(rng.integers(40, 100))))
    res = project_product_cauchy(t, sched)
    assert res["consistent"]
    if any(not v.passed for v in res["factors"]):
        assert not res["product"].passed


def test_cantor_sqrt_diff_balls():
    fam = NestedFamily.reciprocal_balls(H, 4.0, 200_000)
    res = cantor_intersection(fam, tol=1e-5 * 4)
    assert res.passed and abs(res.point - 4.0) <= 1e-6
    assert res.certificate["deepest_diameter"] <= 4 * 1e-5


def test_cantor_interval():
    fam = NestedFamily.shrinking_intervals(I, 0.0, 1.0, 10_000)
    res = cantor_intersection(fam, tol=1e-3)
    assert res.passed and res.point == pytest.approx(0.0, abs=1e-3)


def test_cantor_errors():
    bad = NestedFamily(I, lows=[0.0, 0.5, 0.1], highs=[1.0, 0.9, 0.8])
    with pytest.raises(InvalidFamilyError, match="F_3"):
        cantor_intersection(bad, tol=1.0)
    with pytest.raises(PreconditionError):
        cantor_intersection(NestedFamily(H, centers=4.0, radii=[1.0, 0.5]), tol=1e-9)
    with pytest.raises(PreconditionError):
        cantor_intersection(NestedFamily(H, centers=4.0, radii=[0.5, 1.0]), tol=1.0)


@given(st.integers(0, 2**32 - 1))
def test_cantor_point_near_every_member(seed):
    rng = np.random.default_rng(seed)
    c = float(rng.uniform(0, 30))
    fam = NestedFamily.reciprocal_balls(H, c, 2000, scale=1e-3)
    res = cantor_intersection(fam, tol=1e-6, seed=seed)
    idx = rng.integers(0, 2000, 50)
    lo, hi = fam.intervals(idx)
    ys = lo + (hi - lo) * rng.random(50)
    delta = H.metric.paired(lo, hi)
    d = H.metric.paired(ys, np.full(50, res.point))
    assert np.all(d <= delta + 1e-6)


def test_baire_grid_rationals():
    qs = grid_rationals(10)
    assert qs[:5] == [0.0, 1.0, 0.5, 1 / 3, 2 / 3]
    res = baire_point(I, [PointComplement([q]) for q in qs], depth=10, seed=0)
    assert res.passed and res.point not in qs
    eps = [s["epsilon"] for s in res.steps]
    assert eps[0] < 0.25 and all(b < a / 2 for a, b in zip(eps, eps[1:]))


def test_baire_whole_and_empty():
    res = baire_point(H, [WholeSpace()] * 5)
    assert res.passed
    with pytest.raises(DensityViolationError) as exc:
        baire_point(I, [EmptySet()])
    assert exc.value.step == 1


@given(st.integers(0, 2**32 - 1))
def test_baire_certificate_property(seed):
    rng = np.random.default_rng(seed)
    sets = [PointComplement(rng.uniform(0, 1, 5)) for _ in range(10)]
    res = baire_point(I, sets, seed=seed)
    assert res.passed and res.schedule_ok and res.nesting_ok
    assert all(res.verdicts)


def test_radius_schedule():
    r = radius_schedule(power(2), [1.0, 0.5])
    assert r == [joint_zero_radius(power(2), 1.0), joint_zero_radius(power(2), 0.5)]
    assert math.isclose(radius_schedule(lukasiewicz(), [1.0])[0], 0.5, rel_tol=1e-5)
