import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from pydantic import ValidationError

from models.errors import DomainError
from models.generator import (
    BarrierConfig,
    GeneratorParams,
    ICVariant,
    UnitArrays,
    UnitKind,
    cost,
    cost_barrier,
    domain,
    dummy_params,
    ic,
    ic_barrier,
    ic_derivative,
    ic_dummy,
    ic_plain,
    variant_for,
)

CFG = BarrierConfig(delta=10.0)


def test_limits_must_be_ordered():
    with pytest.raises(ValidationError, match="p_min"):
        GeneratorParams(b=1.0, c=0.1, p_min=50.0, p_max=50.0)
    with pytest.raises(ValidationError):
        GeneratorParams(b=1.0, c=0.1, p_min=60.0, p_max=50.0)


def test_quadratic_coefficient_must_be_positive():
    with pytest.raises(ValidationError):
        GeneratorParams(b=1.0, c=0.0, p_min=0.0, p_max=1.0)


def test_dummy_params_skip_limit_check():
    dummy = dummy_params()
    assert dummy.kind == UnitKind.DUMMY
    assert dummy.b == 0.0 and dummy.c == 0.1


def test_plain_ic_and_cost(units):
    unit = units[0]
    assert ic_plain(unit, 100.0) == pytest.approx(2.0 + 2 * 0.00375 * 100.0)
    assert cost(unit, 100.0) == pytest.approx(2.0 * 100.0 + 0.00375 * 100.0 ** 2)


def test_barrier_ic_at_midpoint_equals_plain(units):
    for unit in units:
        mid = 0.5 * (unit.p_min + unit.p_max)
        assert ic_barrier(unit, CFG, mid) == pytest.approx(ic_plain(unit, mid), abs=1e-12)


@pytest.mark.parametrize("offset", [0.0, -1.0])
def test_barrier_ic_rejects_limits(units, offset):
    unit = units[2]
    with pytest.raises(DomainError):
        ic_barrier(unit, CFG, unit.p_min + offset)
    with pytest.raises(DomainError):
        ic_barrier(unit, CFG, unit.p_max - offset)


def test_barrier_ic_blows_up_near_limits(units):
    unit = units[3]
    assert ic_barrier(unit, CFG, unit.p_min + 1e-6) < -1e6
    assert ic_barrier(unit, CFG, unit.p_max - 1e-6) > 1e6


def test_dummy_ic_needs_positive_power():
    dummy = dummy_params()
    assert ic_dummy(dummy, CFG, 10.0) == pytest.approx(2 * 0.1 * 10.0 - 10.0 / 10.0)
    with pytest.raises(DomainError):
        ic_dummy(dummy, CFG, 0.0)
    with pytest.raises(DomainError):
        ic_dummy(dummy, CFG, -1.0)


def test_plain_ic_has_no_domain(units):
    assert domain(units[0], CFG, ICVariant.PLAIN) == (-math.inf, math.inf)
    assert ic(units[0], CFG, -50.0, ICVariant.PLAIN) == pytest.approx(2.0 - 2 * 0.00375 * 50.0)


def test_barrier_domain_applies_margin(units):
    unit = units[0]
    lo, hi = domain(unit, CFG, ICVariant.BARRIER)
    assert unit.p_min < lo < unit.p_min + 1e-6
    assert unit.p_max - 1e-6 < hi < unit.p_max


def test_variant_for():
    real = GeneratorParams(b=1.0, c=0.1, p_min=0.0, p_max=10.0)
    assert variant_for(real, barrier=False) == ICVariant.PLAIN
    assert variant_for(real, barrier=True) == ICVariant.BARRIER
    assert variant_for(dummy_params(), barrier=True) == ICVariant.DUMMY_ONE_SIDED


def test_ic_derivative_matches_finite_differences(units):
    rng = np.random.default_rng(7)
    step = 1e-4
    cases = [(u, ICVariant.BARRIER) for u in units] + [(u, ICVariant.PLAIN) for u in units]
    for k in range(100):
        unit, variant = cases[k % len(cases)]
        span = unit.p_max - unit.p_min
        p = unit.p_min + span * rng.uniform(0.05, 0.95)
        numeric = (ic(unit, CFG, p + step, variant) - ic(unit, CFG, p - step, variant)) / (2 * step)
        exact = ic_derivative(unit, CFG, p, variant)
        assert exact > 0
        assert abs(numeric - exact) <= 1e-6 * abs(exact)


def test_dummy_derivative_matches_finite_differences():
    dummy = dummy_params()
    for p in [0.5, 3.0, 15.0, 120.0]:
        numeric = (ic_dummy(dummy, CFG, p + 1e-5) - ic_dummy(dummy, CFG, p - 1e-5)) / 2e-5
        assert numeric == pytest.approx(ic_derivative(dummy, CFG, p, ICVariant.DUMMY_ONE_SIDED), rel=1e-6)


def test_barrier_cost_derivative_is_the_barrier_ic(units):
    for unit in units:
        p = unit.p_min + 0.3 * (unit.p_max - unit.p_min)
        numeric = (
            cost_barrier(unit, CFG, p + 1e-5, ICVariant.BARRIER) - cost_barrier(unit, CFG, p - 1e-5, ICVariant.BARRIER)
        ) / 2e-5
        assert numeric == pytest.approx(ic_barrier(unit, CFG, p), rel=1e-6, abs=1e-8)


@given(st.floats(min_value=0.01, max_value=0.99))
@settings(max_examples=50)
def test_barrier_ic_is_increasing(fraction):
    unit = GeneratorParams(b=3.25, c=0.008324, p_min=10.0, p_max=35.0)
    p = unit.p_min + fraction * (unit.p_max - unit.p_min)
    assert ic_barrier(unit, CFG, p + 1e-3) > ic_barrier(unit, CFG, p)


unit_costs = st.builds(
    GeneratorParams,
    a=st.floats(0.0, 100.0),
    b=st.floats(0.0, 10.0),
    c=st.floats(1e-4, 0.1),
    p_min=st.just(0.0),
    p_max=st.just(500.0),
)


@given(unit_costs, st.floats(-500.0, 500.0), st.floats(-500.0, 500.0), st.floats(0.0, 1.0))
@settings(max_examples=100)
def test_cost_is_convex(unit, x, y, mix):
    left = cost(unit, mix * x + (1.0 - mix) * y)
    right = mix * cost(unit, x) + (1.0 - mix) * cost(unit, y)
    assert left <= right + 1e-9 * (1.0 + abs(right))


@given(unit_costs, st.floats(-500.0, 500.0))
@settings(max_examples=100)
def test_plain_ic_is_the_cost_derivative(unit, p):
    step = 1e-3
    numeric = (cost(unit, p + step) - cost(unit, p - step)) / (2.0 * step)
    assert numeric == pytest.approx(ic_plain(unit, p), rel=1e-9, abs=1e-6)


@given(st.floats(1e-4, 0.1), st.floats(1e-3, 500.0), st.floats(1e-6, 1.0))
@settings(max_examples=100)
def test_dummy_ic_is_increasing(c, p, growth):
    unit = dummy_params(c=c)
    assert ic_dummy(unit, CFG, p * (1.0 + growth)) > ic_dummy(unit, CFG, p)


def test_unit_arrays_match_scalar_functions(units):
    fleet = units + [dummy_params(), dummy_params()]
    arrays = UnitArrays(fleet, CFG, barrier=True)
    p = np.array([125.0, 340.0, 20.0, 11.0, 12.0, 14.0, 5.0, 20.0])
    expected_ic = [ic(u, CFG, x, variant_for(u, True)) for u, x in zip(fleet, p)]
    expected_slope = [ic_derivative(u, CFG, x, variant_for(u, True)) for u, x in zip(fleet, p)]
    expected_cost = [cost_barrier(u, CFG, x, variant_for(u, True)) for u, x in zip(fleet, p)]
    np.testing.assert_allclose(arrays.ic(p), expected_ic, rtol=1e-12)
    np.testing.assert_allclose(arrays.slope(p), expected_slope, rtol=1e-12)
    np.testing.assert_allclose(arrays.cost(p), expected_cost, rtol=1e-12)
    assert arrays.dummy_idx.tolist() == [6, 7]


def test_unit_arrays_check_names_offending_units(units):
    arrays = UnitArrays(units, CFG, barrier=True)
    p = np.array([125.0, 340.0, 20.0, 10.0, 12.0, 45.0])
    with pytest.raises(DomainError) as info:
        arrays.check(p)
    assert info.value.units == [3, 5]
    assert "unit 4" in str(info.value)


def test_unit_arrays_plain_inverse(units):
    arrays = UnitArrays(units, CFG, barrier=False)
    p = np.array([133.3, 287.9, 40.0, 38.0, 15.0, 17.0])
    np.testing.assert_allclose(arrays.powers_from_ic(arrays.ic(p)), p, rtol=1e-12)
