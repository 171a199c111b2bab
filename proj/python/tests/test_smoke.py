import numpy as np
import pytest

import mcqn


def test_traffic_on_the_reference_family():
    t = mcqn.traffic_solve(mcqn.modified_krss_family(8 / 9))
    np.testing.assert_allclose(t["rho"][:2], [0.8, 0.8], atol=1e-10)
    np.testing.assert_allclose(t["rho"][2:], [0.1 + 8 / 9] * 2, atol=1e-10)


def test_classify_verdicts():
    assert mcqn.classify(mcqn.modified_krss_family(8 / 9))["verdict"] == "Stable"
    v = mcqn.classify(mcqn.modified_krss_family(1 / 3))
    assert v["verdict"] == "Unstable"
    assert v["witnesses"]["m5/(1-alpha7*m7)"] == pytest.approx(0.15)
    assert mcqn.classify(mcqn.builtin_network("krss"))["verdict"] == "Unstable"


def test_json_round_trip():
    spec = mcqn.builtin_network("modified-lk")
    back = mcqn.parse_network_json(spec.to_json("modified-lk"))
    np.testing.assert_array_equal(back.routing, spec.routing)
    assert back.priority == spec.priority


def test_bad_input_raises_value_error():
    with pytest.raises(ValueError):
        mcqn.parse_network_json("{}")
    with pytest.raises(ValueError):
        mcqn.builtin_network("krss", alpha=[1.0])


def test_fluid_solve_outcomes():
    stable = mcqn.fluid_solve(mcqn.modified_krss_family(8 / 9), np.full(8, 0.125), 1e4)
    assert stable["outcome"] == "Emptied"
    assert stable["levels"][-1].max() == 0.0
    q0 = np.zeros(8)
    q0[[1, 3]] = 1e-3
    assert mcqn.fluid_solve(mcqn.modified_krss_family(1 / 3), q0, 1e4)["outcome"] == "Diverging"


def test_probe_and_audit():
    s = mcqn.modified_krss_family(8 / 9)
    assert mcqn.stability_probe(s, 10)["verdict"] == "Stable"
    audit = mcqn.lyapunov_audit(s, np.full(8, 0.125))
    assert audit["ok"]
    assert audit["tau1"] <= audit["tau1_bound"]


def test_simulate_mm1_style_and_determinism():
    s = mcqn.builtin_network("lk")
    a = mcqn.simulate(s, horizon=2e4, warmup=2e3, seed=3, replications=2)
    b = mcqn.simulate(s, horizon=2e4, warmup=2e3, seed=3, replications=2)
    assert [r["mean_total_queue"] for r in a] == [r["mean_total_queue"] for r in b]
    assert a[0]["seed"] != a[1]["seed"]


def test_sweep_overloaded_point():
    rec = mcqn.sweep("modified-krss", [1.0], horizon=1e4, warmup=1e3, replications=1, probe_samples=2)
    assert rec[0]["diverged"] and not rec[0]["simulated"]


def test_spearman():
    assert mcqn.spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
