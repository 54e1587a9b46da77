import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svbackbone import channel as ch
from svbackbone.traffic import VehicleClass, VehicleState

from oracles import knife_edge_hand

WL = 0.0508


def test_diffraction_parameter_values():
    assert ch.diffraction_parameter(0.0, 150, 150, WL) == 0.0
    v = ch.diffraction_parameter(1.85, 150, 150, WL)
    assert v == pytest.approx(1.85 * math.sqrt(8 / (WL * 300)), rel=1e-12)
    assert v == pytest.approx(1.340, abs=1e-3)
    assert ch.diffraction_parameter(1.85, 300, 300, WL) == pytest.approx(v / math.sqrt(2))


def test_knife_edge_values():
    assert ch.knife_edge_loss_db(-1.0) == 0.0
    assert ch.knife_edge_loss_db(0.0) == pytest.approx(6.0329, abs=1e-4)
    assert ch.knife_edge_loss_db(1.340) == pytest.approx(15.95, abs=0.01)


@settings(max_examples=100)
@given(st.floats(-5, 20, allow_nan=False))
def test_knife_edge_matches_hand_formula(v):
    assert ch.knife_edge_loss_db(v) == pytest.approx(knife_edge_hand(v), abs=1e-12)


@settings(max_examples=100)
@given(st.floats(-0.5, 20), st.floats(0.01, 1.0))
def test_knife_edge_increasing_above_its_minimum(v, dv):
    assert ch.knife_edge_loss_db(v + dv) >= ch.knife_edge_loss_db(v)


def test_equivalent_height_single_edge():
    g = ch.LinkGeometry(0, 300, 1.5, 1.5)
    h, d1 = ch.equivalent_height(ch.ObstacleProfile(((150, 3.35),)), g)
    assert h == pytest.approx(1.85) and d1 == 150


def test_equivalent_height_two_edges_by_ray_intersection():
    g = ch.LinkGeometry(0, 300, 1.5, 1.5)
    h, d1 = ch.equivalent_height(ch.ObstacleProfile(((100, 3.35), (200, 3.35))), g)
    # tx ray slope 1.85/100, rx ray slope 1.85/100 -> meet at the midpoint
    s = 1.85 / 100
    x = (300 * s) / (2 * s)
    assert d1 == pytest.approx(x)
    assert h == pytest.approx(s * x)
    assert h > 1.85


def test_obstacle_outside_path_rejected():
    g = ch.LinkGeometry(0, 300, 1.5, 1.5)
    with pytest.raises(ValueError):
        ch.equivalent_height(ch.ObstacleProfile(((300, 3.0),)), g)


def test_two_ray_far_field_asymptote():
    radio = ch.RadioParams()
    g = ch.LinkGeometry(0, 5000, 1.5, 1.5)
    assert ch.crossover_distance(1.5, 1.5) < 1000
    p = ch.two_ray_power(g, radio)
    ref = radio.tx_power_w * radio.gain_t * radio.gain_r * (1.5 * 1.5) ** 2 / 5000 ** 4
    assert abs(10 * math.log10(p / ref)) < 1.0


def test_two_ray_field_scaling_and_time_independence():
    g = ch.LinkGeometry(0, 120, 1.6, 2.1)
    r1 = ch.RadioParams(ref_field=1.0)
    r2 = ch.RadioParams(ref_field=2.0)
    assert ch.two_ray_power(g, r2) == pytest.approx(4 * ch.two_ray_power(g, r1), rel=1e-12)
    assert ch.two_ray_power(g, r1, t=0.0) == ch.two_ray_power(g, r1, t=3.7)


def test_small_scale_sigma():
    assert ch.small_scale_sigma(ch.FadingEnvironment(2, 5.3, 0.0)) == 2.0
    assert ch.small_scale_sigma(ch.FadingEnvironment(2, 5.3, 0.25, 0.25)) == pytest.approx(3.65)
    assert ch.small_scale_sigma(ch.FadingEnvironment(3, 3, 0.1)) == 3.0


def test_sigma_clamps_with_warning():
    with pytest.warns(RuntimeWarning):
        s = ch.small_scale_sigma(ch.FadingEnvironment(2, 5.3, 1.0, 0.25))
    assert s == pytest.approx(3.65)


def test_received_power_olos_composition():
    g = ch.LinkGeometry(0, 300, 1.5, 1.5)
    los = ch.received_power_dbm(g)
    olos = ch.received_power_dbm(g, profile=ch.ObstacleProfile(((150, 3.35),)))
    assert los - olos == pytest.approx(15.95, abs=0.01)
    low = ch.received_power_dbm(g, profile=ch.ObstacleProfile(((150, 0.5),)))
    assert low == los


def test_received_power_deterministic_without_rng():
    g = ch.LinkGeometry(0, 200, 1.5, 2.0)
    env = ch.FadingEnvironment()
    assert ch.received_power_dbm(g, env=env) == ch.received_power_dbm(g, env=env)
    a = ch.received_power_dbm(g, env=env, rng=np.random.default_rng(4))
    b = ch.received_power_dbm(g, env=env, rng=np.random.default_rng(4))
    assert a == b


@pytest.mark.parametrize("p,rate", [
    (-85, 3), (-84, 4.5), (-82, 6), (-80, 9), (-77, 12), (-70, 18), (-69, 24), (-67, 27),
    (-75, 12), (-85.01, 0), (-90, 0), (-40, 27),
])
def test_rate_table(p, rate):
    assert ch.rate_from_power(p) == rate


@settings(max_examples=100)
@given(st.floats(-120, -30), st.floats(0, 10))
def test_rate_monotone_in_power(p, dp):
    assert ch.rate_from_power(p + dp) >= ch.rate_from_power(p)


@settings(max_examples=50)
@given(st.floats(-100, -50), st.floats(0.0, 8.0))
def test_rate_distribution_sums_to_one(mean, sigma):
    dist = ch.rate_distribution(mean, sigma)
    assert sum(p for _, p in dist) == pytest.approx(1.0)
    assert all(p >= -1e-15 for _, p in dist)


def _veh(vid, x, vc, h, lane=0):
    return VehicleState(vid, vc, x, 20.0, h, lane=lane)


def test_classify_link_cases():
    a = _veh(0, 0, VehicleClass.COMPACT, 1.5)
    b = _veh(1, 300, VehicleClass.COMPACT, 1.5)
    assert ch.classify_link(a, b, [a, b]).los
    truck = _veh(2, 150, VehicleClass.LARGE, 3.35)
    lc = ch.classify_link(a, b, [a, b, truck])
    assert not lc.los
    assert lc.profile.excess_heights(lc.geometry) == [pytest.approx(1.85)]
    low = _veh(3, 150, VehicleClass.COMPACT, 1.4)
    assert ch.classify_link(a, b, [a, b, low]).los
    far = _veh(4, 150, VehicleClass.LARGE, 3.35, lane=3)
    assert ch.classify_link(a, b, [a, b, far]).los


def test_attenuation_sweep():
    rows = list(ch.attenuation_sweep([10, 150, 300]))
    assert all(auto == pytest.approx(6.03, abs=0.01) for _, auto, _ in rows)
    assert rows[-1][2] == pytest.approx(15.95, abs=0.1)
    assert rows[0][2] == pytest.approx(30.157, abs=0.01)
