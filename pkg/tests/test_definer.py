import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starmetric.definer import (TDefiner, check_laws, composed, evaluate, fold, inverse_lower_array,
                                inverse_lower_closed, joint_zero_radius, kfold_radius, lukasiewicz, maximum,
                                power, radius_array, star_inverse_lower)
from starmetric.errors import DomainError

BUILTINS = [lukasiewicz(), maximum(), power(0.5), power(1.0), power(2.0), power(3.0)]
nonneg = st.floats(min_value=0.0, max_value=1e3, allow_nan=False, allow_infinity=False)
definers = st.sampled_from(BUILTINS)

PLUS_ONE = composed({"op": "+", "args": [{"op": "a"}, {"op": "b"}, {"op": "const", "value": 1}]})
ABS_DIFF = composed({"op": "abs", "args": [{"op": "-", "args": [{"op": "a"}, {"op": "b"}]}]})


def test_eval_examples():
    assert evaluate(lukasiewicz(), 2, 3) == 5
    assert evaluate(maximum(), 2, 3) == 3
    assert evaluate(power(2), 1, 4) == 9


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
def test_eval_rejects_bad_input(bad):
    with pytest.raises(DomainError):
        evaluate(lukasiewicz(), bad, 1.0)
    with pytest.raises(DomainError):
        fold(maximum(), [1.0, bad])


def test_fold_examples():
    assert fold(lukasiewicz(), [1, 2, 3]) == 6
    assert fold(maximum(), [1, 5, 2]) == 5
    for d in BUILTINS:
        assert fold(d, []) == 0


def test_spec_round_trip():
    for d in BUILTINS + [PLUS_ONE, ABS_DIFF]:
        assert TDefiner.from_spec(d.to_spec()) == d
    assert TDefiner.from_spec("maximum") == maximum()
    with pytest.raises(ValueError):
        TDefiner.from_spec({"kind": "power"})
    with pytest.raises(ValueError):
        composed({"op": "sqrt", "args": [{"op": "a"}]})


def test_laws_builtin_pass():
    for d in BUILTINS:
        rep = check_laws(d, 1000, seed=3)
        assert rep.passed, (d, rep.witnesses)


def test_laws_plus_one_breaks_identity():
    rep = check_laws(PLUS_ONE, 1000, seed=0)
    assert not rep.verdicts["T4"]
    w = rep.witnesses["T4"]
    assert w["a"] == 1.0 and w["a*0"] == 2.0
    assert evaluate(PLUS_ONE, w["a"], 0.0) == w["a*0"]


def test_laws_abs_diff_breaks_monotonicity():
    rep = check_laws(ABS_DIFF, 1000, seed=0)
    assert not rep.verdicts["T3"]
    w = rep.witnesses["T3"]
    assert w["a"] <= w["b"]
    assert evaluate(ABS_DIFF, w["a"], w["c"]) > evaluate(ABS_DIFF, w["b"], w["c"])


def test_laws_deterministic():
    a = check_laws(ABS_DIFF, 500, seed=11).to_dict()
    b = check_laws(ABS_DIFF, 500, seed=11).to_dict()
    assert a == b


def test_continuity_probe_catches_jump():
    step = composed({"op": "+", "args": [{"op": "a"}, {"op": "b"},
                                          {"op": "min", "args": [{"op": "const", "value": 1},
                                                                 {"op": "*", "args": [{"op": "const", "value": 1e300},
                                                                                      {"op": "a"}]}]}]})
    rep = check_laws(step, 200, seed=0)
    assert not rep.verdicts["T4"]


@given(definers, nonneg, nonneg, nonneg)
def test_builtin_laws_property(d, a, b, c):
    f = d.apply
    ab = float(f(a, b))
    assert math.isfinite(ab) and ab >= 0
    assert abs(ab - float(f(b, a))) <= 1e-12 * max(1.0, ab)
    left, right = float(f(a, f(b, c))), float(f(f(a, b), c))
    assert abs(left - right) <= 1e-9 * max(1.0, left, right)
    lo, hi = min(a, b), max(a, b)
    assert float(f(lo, c)) <= float(f(hi, c)) * (1 + 1e-12) + 1e-12
    assert abs(float(f(a, 0.0)) - a) <= 1e-12 * max(1.0, a)


@given(definers, st.lists(nonneg, min_size=1, max_size=16))
def test_fold_order_property(d, values):
    left = fold(d, values)
    right = 0.0
    for v in reversed(values):
        right = float(d.apply(v, right))
    assert abs(left - right) <= 1e-9 * max(1.0, left, right)


def test_radius_closed_forms():
    assert 0.4999 <= joint_zero_radius(lukasiewicz(), 1.0) <= 0.5
    assert 0.9999 <= joint_zero_radius(maximum(), 1.0) < 1.0
    assert 0.2499 <= joint_zero_radius(power(2), 1.0) <= 0.25
    assert kfold_radius(lukasiewicz(), 3, 1.0) == pytest.approx(1 / 3, rel=1e-5)
    assert kfold_radius(maximum(), 3, 1.0) == pytest.approx(1.0, rel=1e-5)
    assert kfold_radius(power(2), 3, 1.0) == pytest.approx(1 / 9, rel=1e-5)
    # frozen values of the bisection
    assert joint_zero_radius(lukasiewicz(), 1.0) == pytest.approx(0.4999995, abs=1e-12)
    assert joint_zero_radius(power(2), 1.0) == pytest.approx(0.24999975, abs=1e-12)


@given(definers, st.floats(min_value=1e-6, max_value=10.0), st.integers(2, 5))
def test_kfold_radius_property(d, r, k):
    r1 = kfold_radius(d, k, r)
    assert fold(d, [r1] * k) <= r * (1 - 1e-6)


def test_radius_array_matches_scalar():
    rs = np.geomspace(1e-4, 10, 25)
    for d in BUILTINS:
        arr = radius_array(d, rs, 2)
        for r, v in zip(rs, arr):
            # vectorised pow may differ from scalar pow in the last bit
            assert v == pytest.approx(joint_zero_radius(d, float(r)), rel=1e-12)
            assert d.apply(v, v) <= r * (1 - 1e-6)


def test_inverse_examples():
    assert star_inverse_lower(lukasiewicz(), 5, 3).value == pytest.approx(2, abs=1e-10)
    assert star_inverse_lower(maximum(), 5, 3).value == pytest.approx(5, abs=1e-10)
    for d in BUILTINS:
        assert star_inverse_lower(d, 2, 3).value == 0


@given(definers, nonneg, nonneg)
def test_inverse_brackets_property(d, c, b):
    tol = 1e-12 * (1 + c)
    v = star_inverse_lower(d, c, b).value
    assert float(d.apply(v, b)) >= c - tol
    if v > 0:
        assert float(d.apply(max(v - tol, 0.0), b)) <= c + tol


def test_closed_inverse_agrees_with_bisection():
    rng = np.random.default_rng(5)
    c = rng.uniform(0, 20, 2000)
    b = rng.uniform(0, 20, 2000)
    for d in BUILTINS:
        closed = inverse_lower_closed(d, c, b)
        bis, capped = inverse_lower_array(d, c, b)
        assert not capped.any()
        assert np.allclose(closed, bis, rtol=1e-9, atol=1e-9), d
        # the closed form is itself a valid lower bound: anything below it misses c
        below = closed * (1 - 1e-9) - 1e-12
        pos = below > 0
        assert np.all(d.apply(below[pos], b[pos]) <= c[pos] * (1 + 1e-9))


def test_inverse_capped_for_bounded_operation():
    capped_op = composed({"op": "min", "args": [{"op": "+", "args": [{"op": "a"}, {"op": "b"}]},
                                                {"op": "const", "value": 1}]})
    res = star_inverse_lower(capped_op, 5.0, 0.5, cap=1e6)
    assert res.capped and res.value == 1e6
