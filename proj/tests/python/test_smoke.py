import json
import math

import pytest

import pablo


def test_version():
    assert pablo.__version__ == "0.1.0"


def test_core_metrics():
    u = [[0, 0], [1, 0], [1, 0], [0, 2]]
    assert pablo.path_length(u) == pytest.approx(1 + math.sqrt(5))
    assert pablo.switch_count(u) == 2
    phi, path_phi = pablo.linearithmic_metrics(u, 1.0, 4)
    assert phi == pytest.approx(2 * math.log(9))
    assert path_phi == pytest.approx(math.log(257) + math.sqrt(5) * math.log(256 * math.sqrt(5) + 1))


def test_estimator_enumeration():
    assert pablo.make_lambda([3, 4], 0.1) == pytest.approx(0.02)
    assert pablo.perturb([0, 0], 0, 1.0, 0.5) == pytest.approx([math.sqrt(2), 0])
    assert pablo.estimate_loss(math.sqrt(2), 0, 1.0, 0.5, 2) == pytest.approx([2, 0])
    table = pablo.enumerate_estimates([0.2, -0.7, 1.1], [0.3, 0.1, -0.5], 0.5)
    assert len(table) == 6
    mean = [sum(p * est[i] for _, _, p, est in table) for i in range(3)]
    assert mean == pytest.approx([0.3, 0.1, -0.5], abs=1e-12)


def test_base_learner_and_round():
    b = pablo.DynamicBase([0, 0], alpha=0.01, gamma=0.01, eta=1.0)
    b.update([1, 0])
    assert b.predict()[0] == pytest.approx(-0.01 * math.expm1(0.1225))
    with pytest.raises(pablo.PabloError):
        b.update([2, 0])

    assert len(pablo.DynamicMeta(2, 1.0, 1.0, 1024).grid) == 11
    # Bandit estimates reach 2dG, so the learner is built with that bound.
    m = pablo.DynamicMeta(2, 1.0, 4.0, 1024)
    rec = m.pablo_round(lambda x: x[0], 1.0, 0)
    assert rec["estimate"] == pytest.approx([2, 0])


def test_composite():
    comp = pablo.HuberComponent(1.0, 1.0, 2.0, 1.0)
    assert pablo.huber_value(1.0, 1.0, comp) == pytest.approx(1 / math.sqrt(2))
    assert pablo.huber_grad_coeff(1.0, pablo.HuberComponent(1.0, 1.0, 2.0), 0.0) == pytest.approx(math.sqrt(2))
    point, residual = pablo.solve_fixed_point(
        [1.0], 1.0, 1.0, pablo.HuberComponent(1.0, 1.0, 2.0), pablo.HuberComponent(0.0, 1.0, 2.0)
    )
    assert 0.34 < point[0] < 0.35
    assert residual <= 1e-12
    k = pablo.highprob_constants(1.0, 0.1, 100, 2, 1.0, 0.1, 11)
    assert k["c1"] == pytest.approx(101.4, rel=1e-3)
    assert k["H"] == pytest.approx(k["c1"] * 2 + k["c2"] * math.log(101))


def test_environment_helpers():
    assert pablo.hypercube_delta(64) == 0.015625
    assert pablo.clipped_sigma_sq(4, 100) == pytest.approx(0.0045108, rel=1e-4)
    u = pablo.fenchel_comparator([[0.5, 0.0]] * 4, 1.0, 1.0, 4)
    assert math.hypot(*u) == pytest.approx(math.e)


CONFIG = {
    "name": "smoke",
    "env": {"type": "clipped_hypercube", "d": 2},
    "learner": {"type": "dynamic_meta"},
    "comparator": {"type": "aligned"},
    "T_grid": [64, 128],
    "seeds": {"count": 3, "base": 10},
}


def test_harness_roundtrip():
    text = json.dumps(CONFIG)
    a = pablo.run_trial(text, 64, 10)
    assert a == pablo.run_trial(text, 64, 10)
    rows = pablo.run_all(text)
    assert len(rows) == 6
    assert rows[0]["regret_dynamic"] == a["regret_dynamic"]
    assert pablo.trials_csv(text) == pablo.trials_csv(text, 2)
    out = pablo.sweep(text)
    assert [g["T"] for g in out["aggregates"]] == [64, 128]
    assert out["fit"]["degenerate"]
    assert json.loads(pablo.normalize_config(text))["seeds"]["count"] == 3


def test_config_errors_are_value_errors():
    with pytest.raises(ValueError, match="line"):
        pablo.run_trial('{"env": {"type": "zero", "d": 1},\n "learner": {"typo": 1}}', 8, 1)


def test_check_suite():
    results = pablo.check_suite()
    assert results and all(passed for _, passed, _ in results)
