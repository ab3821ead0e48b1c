import math

import pytest

import memmac


def test_analysis_matches_table():
    p = memmac.ProtocolParams(10, 0.1, 0.1051, 0.4786)
    m = memmac.analyze(p)
    assert m["t_s"] == pytest.approx(10.0)
    assert abs(m["t_c"] - 2.4374) <= 5e-5
    assert abs(m["c_norm"] - 0.8040) <= 5e-5
    assert abs(m["d_crit"] - 1.5297) <= 5e-4
    assert memmac.channel_utilization(p) == m["c_norm"]
    w = memmac.stationary_distribution(p)
    assert len(w) == 11
    assert math.isclose(sum(w), 1.0, abs_tol=1e-12)
    assert abs(w[1] - m["c_norm"]) < 1e-10


def test_enhanced_delay():
    p = memmac.ProtocolParams(10, 0.1, 0.105, 0.479)
    assert abs(memmac.enhanced_critical_delay(p) - 0.93) <= 0.005


def test_optimizer():
    s = memmac.maximize_utilization(10, 0.1)
    assert abs(s["q"] - 0.105) <= 0.005
    assert abs(s["r"] - 0.479) <= 0.005
    assert s["status"] == "slack-interior"
    b = memmac.solve_design_problem(10, 0.1, eta=1.0)
    assert b["status"] == "binding-interior"
    assert abs(b["d_crit"] - 1.0) <= 0.005
    assert memmac.solve_design_problem(10, 0.1, eta=0.3)["status"] == "infeasible"
    assert abs(memmac.critical_eta(10, 0.1) - 1.531) <= 0.01


def test_sweep_rows():
    rows = memmac.sweep("nhat", n_users=10, theta=0.1, eta=1.0, start=8, stop=11, step=1)
    assert [r["n_hat"] for r in rows] == [8, 9, 10, 11]
    assert [r["constraint_violated"] for r in rows] == [True, True, False, False]


def test_simulation_is_seeded():
    a = memmac.run_experiment(3, 0.1, 0.3397, 0.4896, rounds=200, seed=4)
    b = memmac.run_experiment(3, 0.1, 0.3397, 0.4896, rounds=200, seed=4, threads=2)
    assert a == b
    assert a["rounds"] == 200
    e = memmac.run_experiment(10, 0.1, 0.1051, 0.4786, rounds=300, enhanced=True)
    assert e["max_d_crit"] <= 5


def test_two_critical():
    s = memmac.summarize_two_critical("two-critical-simultaneous", 10, 0.1, 0.1051, 0.4786, runs=50)
    assert s["runs"] == 50
    assert s["max_slots_to_inference"] == 6
    assert s["sharing_violations"] == 0


def test_oracle():
    p = memmac.ProtocolParams(3, 0.1, 0.3397, 0.4896)
    o = memmac.estimate_metrics_oracle(p, 20000, seed=2)
    assert abs(o["t_c"]["mean"] - memmac.contention_time(p)) <= 3 * o["t_c"]["se"]


def test_errors():
    with pytest.raises(memmac.BadParams):
        memmac.analyze(memmac.ProtocolParams(1, 0.1, 0.1, 0.5))
    with pytest.raises(memmac.Error):
        memmac.contention_time(memmac.ProtocolParams(3, 0.1, 0.0, 0.5))
    with pytest.raises(memmac.ScenarioUnsatisfiable):
        memmac.summarize_two_critical("single", 10, 0.1, 0.1, 0.5, runs=5)
    with pytest.raises(memmac.BadParams):
        memmac.sweep("diagonal")
