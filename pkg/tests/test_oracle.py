import numpy as np
import pytest
from conftest import random_instance
from hypothesis import given, settings
from hypothesis import strategies as st

from perimdef.adversary import gen_fcfs_killer
from perimdef.core import Environment, InputInstance, Intruder, Side
from perimdef.engine import Segment, Trajectory, simulate
from perimdef.oracle import (
    InfeasibleProfile,
    InterceptQuery,
    RatioReport,
    TooLarge,
    competitive_ratio,
    exhaustive_offline,
    interception_time,
    normalize_extreme_speed,
    optimal_offline,
)
from perimdef.policies import POLICY_NAMES, FollowTrajectory, make_policy

RIGHT0 = Intruder(0, 0.0, Side.RIGHT)
I1 = InputInstance.from_arrivals([(1, -1), (1, 1)])


def test_interception_examples():
    tau, pos = interception_time(InterceptQuery(0.0, 0.0, RIGHT0), Environment(0.5, 0.8))
    assert tau == pytest.approx(1 / 1.8) and pos == pytest.approx(1 / 1.8)
    assert interception_time(InterceptQuery(0.2, 0.0, RIGHT0), Environment(0.2, 0.25)) == pytest.approx((0.64, 0.84))
    assert interception_time(InterceptQuery(-1.0, 0.0, RIGHT0), Environment(0.2, 0.8)) is None


def test_interception_waits_for_arrival():
    # vehicle already at the entry point: capture on arrival
    late = Intruder(0, 3.0, Side.RIGHT)
    assert interception_time(InterceptQuery(1.0, 0.0, late), Environment(0.2, 0.25)) == pytest.approx((3.0, 1.0))
    # too late to reach the entry point: close the 0.4 gap at 1 + v
    assert interception_time(InterceptQuery(0.5, 2.9, late), Environment(0.5, 0.25)) == pytest.approx((3.32, 0.92))


def test_query_validation():
    with pytest.raises(ValueError):
        InterceptQuery(1.5, 0.0, RIGHT0)
    with pytest.raises(ValueError):
        InterceptQuery(0.0, -1.0, RIGHT0)


@settings(max_examples=200)
@given(
    x=st.floats(-1, 1),
    t1=st.floats(0, 5),
    dt=st.floats(0, 5),
    a=st.floats(0, 5),
    side=st.sampled_from([-1, 1]),
    rho=st.floats(0.05, 0.95),
    v=st.floats(0.05, 0.95),
)
def test_interception_monotone_in_time(x, t1, dt, a, side, rho, v):
    env = Environment(rho, v)
    it = Intruder(0, a, side)
    early = interception_time(InterceptQuery(x, t1, it), env)
    late = interception_time(InterceptQuery(x, t1 + dt, it), env)
    if early is None:
        assert late is None
    elif late is not None:
        assert late[0] >= early[0] - 1e-9


def test_optimal_examples():
    env = Environment(0.2, 2 / 3)
    s = optimal_offline(I1, env)
    assert s.value == 2
    # one of the two symmetric witnesses
    assert sorted((round(t, 9), round(abs(x), 9)) for _, t, x in s.captures) == [(1.0, 1.0), (2.2, 0.2)]
    assert optimal_offline(InputInstance(), env).value == 0
    e = Environment(0.5, 0.8)
    assert optimal_offline(gen_fcfs_killer(3, e, 0.01), e).value >= 4


def test_exhaustive_examples():
    env = Environment(0.2, 2 / 3)
    assert exhaustive_offline(I1, env) == 2
    assert exhaustive_offline(InputInstance.from_arrivals([(0, 1)]), Environment(0.2, 0.25)) == 1
    with pytest.raises(TooLarge):
        exhaustive_offline(InputInstance.from_arrivals([(i, 1) for i in range(9)]), env)
    with pytest.raises(TooLarge):
        optimal_offline(InputInstance.from_arrivals([(i, 1) for i in range(16)]), env)


def test_schedule_json():
    s = optimal_offline(I1, Environment(0.2, 2 / 3))
    d = s.to_dict()
    assert d["value"] == 2 and set(d["captures"][0]) == {"id", "t", "x"}


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rho=st.sampled_from([0.1, 0.3, 0.6]), v=st.sampled_from([0.2, 0.5, 0.9]))
def test_dp_matches_brute_force_and_replays(seed, rho, v):
    env = Environment(rho, v)
    inst = random_instance(np.random.default_rng(seed), n_max=7, horizon=4.0, rho=rho)
    s = optimal_offline(inst, env)
    assert s.value == exhaustive_offline(inst, env)
    prev_x, prev_t = 0.0, 0.0
    for _, t, x in s.captures:
        assert abs(x - prev_x) <= t - prev_t + 1e-9
        prev_x, prev_t = x, t
    res = simulate(inst, FollowTrajectory(env, s.trajectory()), env)
    assert res.n_captured == s.value
    for name in POLICY_NAMES:
        assert simulate(inst, make_policy(name, env, force=True), env).n_captured <= s.value


def test_normalize_examples():
    traj = normalize_extreme_speed(None, [(0, 0), (1, 1), (-0.2, 2.2)])
    assert traj.segments == (Segment(0.0, 0.0, 1, 1.0), Segment(1.0, 1.0, -1, 2.2))
    traj = normalize_extreme_speed(None, [(0, 0), (0.5, 2)])
    assert traj.segments == (Segment(0.0, 0.0, 1, 0.5), Segment(0.5, 0.5, 0, 2.0))
    with pytest.raises(InfeasibleProfile):
        normalize_extreme_speed(None, [(0, 0), (1, 0.5)])
    with pytest.raises(InfeasibleProfile):
        normalize_extreme_speed(None, [(0, 0), (1.5, 3)])


def test_normalize_extends_to_original_end():
    orig = Trajectory((Segment(0.0, 0.0, 0, 5.0),))
    traj = normalize_extreme_speed(orig, [(0, 0), (0.5, 2)])
    assert traj.end_time == 5.0 and traj.position(4.0) == 0.5


def test_normalize_covers_policy_captures():
    """A slow policy's capture profile, pushed to extreme speed, still captures the same intruders."""
    env = Environment(0.2, 0.25)
    rng = np.random.default_rng(2)
    for _ in range(20):
        inst = random_instance(rng, n_max=10, rho=0.2)
        res = simulate(inst, make_policy("cac", env), env)
        profile = [(0.0, 0.0)] + [(c.position, c.time) for c in res.captures]
        traj = normalize_extreme_speed(res.trajectory, profile)
        again = simulate(inst, FollowTrajectory(env, traj), env)
        assert res.captured_ids <= again.captured_ids


def test_ratio_report():
    assert RatioReport(0, 0).ratio == 1.0
    assert RatioReport(0, 3).unbounded and RatioReport(0, 3).to_dict()["ratio"] == "Unbounded"
    assert RatioReport(2, 5).ratio == 2.5
    e = Environment(0.5, 0.8)
    rep = competitive_ratio("fcfs", gen_fcfs_killer(3, e, 0.01), e)
    assert (rep.n_alg, rep.n_opt, rep.ratio) == (1, 4, 4.0)
    assert competitive_ratio("sweep", InputInstance(), e).ratio == 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_sweep_ratio_one_in_regime(seed):
    env = Environment(0.2, 0.25)
    inst = random_instance(np.random.default_rng(seed), n_max=12, rho=0.2)
    assert competitive_ratio("sweep", inst, env).ratio == 1.0
