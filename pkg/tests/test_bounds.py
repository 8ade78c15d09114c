import json
import math

import pytest
from hypothesis import assume, given, strategies as st

from oracles import binomial_lower_tail
from swlab.bounds import (
    a_d,
    bernoulli_tail,
    bounds_report,
    check_constraints,
    event_bound,
    k_constants,
    rate_function,
    s_interval,
    torpidity_ratio_bound,
    transition_bound,
)
from swlab.disorder import GadgetParams
from swlab.errors import ParameterError, PreconditionError

probs = st.floats(0.001, 0.999)


def test_constants_example():
    K = k_constants(2, 0.25, 0.4995, 0.5)
    assert K.K_tilde_1 == pytest.approx(0.0625)
    assert K.K_1 == pytest.approx(0.015625)
    assert K.K_2 == pytest.approx(0.0005)
    assert K.K_3 == pytest.approx(0.4995 * 0.5 * 0.25 * 2 / 8)


def test_constants_scale_with_dimension():
    k2, k3 = k_constants(2, 0.2, 0.55, 0.5), k_constants(3, 0.2, 0.55, 0.5)
    assert k3.K_tilde_1 / k2.K_tilde_1 == pytest.approx(3)
    assert k3.K_2 / k2.K_2 == pytest.approx(3)
    assert k3.K_3 / k2.K_3 == pytest.approx(3)


def test_s_interval_example():
    lo, hi = s_interval(0.25, 0.5)
    assert hi == 0.5
    assert lo == pytest.approx(max(32 / 64.125, 0.5 - 0.0625 * 0.5 / 16))
    assert lo == pytest.approx(0.499025, abs=1e-6)


@given(st.floats(0.01, 0.49), st.floats(0.05, 1.0), st.floats(0.0, 1.0))
def test_inside_interval_orderings_hold(delta, rho, frac):
    lo, hi = s_interval(delta, rho)
    s = lo + frac * (hi - lo)
    assume(lo < s < hi)
    c = check_constraints(2, delta, s, rho)
    assert c["direct"]["K1_gt_K2"] and c["direct"]["K3_gt_K2"] and c["direct"]["K2_positive"]


def test_constraint_systems_differ():
    # inside the interval both hold
    ok = check_constraints(2, 0.25, 0.4995, 0.5)
    assert ok["literal_all"] and ok["direct_all"]
    assert ok["literal"]["delta2_rho2_gt_16gap"]  # 0.015625 > 0.008
    # just below it the printed second line fails while K1 > K2 still holds
    edge = check_constraints(2, 0.25, 0.499, 0.5)
    assert not edge["literal"]["delta2_rho2_gt_16gap"]
    assert edge["direct"]["K1_gt_K2"]
    assert not edge["literal_all"]
    bad = check_constraints(2, 0.25, 0.6, 0.5)
    assert not bad["literal"]["one_minus_s_minus_2delta_positive"] and not bad["direct"]["K2_positive"]


def test_a_d_matches_gadget_params():
    for delta, rho in [(0.25, 0.5), (0.1, 1.0), (0.4, 0.3)]:
        p = GadgetParams(2, delta, 0.5 * (1 - 2 * delta), (0, 0), rho_d=rho)
        assert p.a_d == a_d(delta, rho)


@given(probs)
def test_rate_function_zero_at_p(p):
    assert rate_function(p, p) == pytest.approx(0.0, abs=1e-15)


@given(probs, probs, probs, st.floats(0, 1))
def test_rate_function_convex_in_x(p, x, y, w):
    mid = w * x + (1 - w) * y
    assert rate_function(mid, p) <= w * rate_function(x, p) + (1 - w) * rate_function(y, p) + 1e-12


@given(probs, st.floats(0, 1), st.floats(0, 1))
def test_rate_function_increases_away_from_p(p, a, b):
    x1, x2 = sorted((a * p, b * p))  # both below p
    assert rate_function(x1, p) >= rate_function(x2, p) - 1e-12


def test_rate_function_edges():
    assert rate_function(0.0, 0.5) == pytest.approx(math.log(2))
    assert rate_function(1.0, 0.0) == math.inf
    assert rate_function(0.0, 0.0) == 0.0
    with pytest.raises(ParameterError):
        rate_function(1.2, 0.5)


@pytest.mark.parametrize("N,p,x", [(10, 0.5, 0.3), (40, 0.7, 0.5), (100, 0.2, 0.1), (60, 0.9, 0.85)])
def test_chernoff_dominates_exact_tail(N, p, x):
    assert binomial_lower_tail(N, p, x) <= bernoulli_tail(N, p, x)


def test_bernoulli_tail_errors():
    with pytest.raises(ParameterError):
        bernoulli_tail(10, 0.3, 0.5)
    with pytest.raises(ParameterError):
        bernoulli_tail(-1, 0.3, 0.2)
    assert bernoulli_tail(0, 0.3, 0.2) == 1.0


def test_event_and_transition_bounds_decay_in_l():
    args = (2, 0.25, 0.4995, 0.5, 8.0)
    ev = [event_bound(*args, l) for l in (2, 3, 4)]
    tr = [transition_bound(*args, l) for l in (2, 3, 4)]
    assert ev[0] > ev[1] > ev[2] and tr[0] > tr[1] > tr[2]
    assert ev[0] == pytest.approx(math.exp(-0.015625 * 16))


def test_ratio_bound():
    assert torpidity_ratio_bound(2, 0.25, 0.4995, 0.5, 8.0, 2, 0)[0] == 0.0
    b1, t_l = torpidity_ratio_bound(2, 0.25, 0.4995, 0.5, 8.0, 2, 1)
    b5, _ = torpidity_ratio_bound(2, 0.25, 0.4995, 0.5, 8.0, 2, 5)
    assert b5 == pytest.approx(5 * b1) and t_l >= 1
    with pytest.raises(PreconditionError):
        torpidity_ratio_bound(2, 0.25, 0.3, 0.5, 8.0, 2, 1)
    with pytest.raises(ParameterError):
        torpidity_ratio_bound(2, 0.25, 0.4995, 0.5, 8.0, 2, -1)


def test_ratio_bound_becomes_small_for_large_boxes():
    b, t_l = torpidity_ratio_bound(2, 0.25, 0.4995, 0.5, 8.0, 200, 1)
    assert b < 1e-3 and t_l > 1000


def test_report_round_trip_and_table():
    rep = bounds_report(2, 0.25, 0.4995, 0.5, 8.0, 2)
    d = json.loads(rep.to_json())
    assert d["K_1"] == pytest.approx(0.015625) and d["t_l"] == rep.t_l
    assert rep.ratio_bound(rep.t_l) == pytest.approx(rep.ratio_bound_at_t_l)
    assert "s-interval (0.499025, 0.500000)" in rep.table()
    off = bounds_report(2, 0.25, 0.3, 0.5)
    assert off.t_l is None and off.ratio_bound_at_t_l is None


def test_parameter_validation():
    for args in [(0, 0.25, 0.4, 0.5), (2, 0.5, 0.4, 0.5), (2, 0.25, 0.4, 0.0), (2, 0.25, 1.0, 0.5)]:
        with pytest.raises(ParameterError):
            k_constants(*args)
