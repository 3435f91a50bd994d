import math

import pytest

import stimtomo

FLAT = {"phase_slope": 0.0}
NOISELESS_QST = {"expectation_only": True}
NOISELESS_SET = {"intensity_noise_rel": 0.0}


def test_qst_round_trip_on_bell_state():
    records = stimtomo.simulate_qst(FLAT, NOISELESS_QST)
    assert records.startswith("kind,signal,idler,port,value,theta_mrad,rng_seed\n")
    assert records.count("\n") == 37
    result = stimtomo.reconstruct_qst(records)
    assert result["converged"]
    assert result["metrics"]["concurrence"] == pytest.approx(1.0, abs=1e-6)
    assert len(result["audit"]) == 36


def test_set_matches_qst_and_truth():
    source = {"alpha_sq": 0.3, "decoherence": 0.8, "phase_slope": 0.0}
    stim, tomo = stimtomo.simulate_set(
        source, 0.0, {**NOISELESS_SET, "coupling_idler": 3.0}, {"birefringent_phase": 0.2}
    )
    assert stim.count("\n") == 85
    set_result = stimtomo.reconstruct_set(stim, tomo)
    qst_result = stimtomo.reconstruct_qst(stimtomo.simulate_qst(source, NOISELESS_QST))
    truth = stimtomo.state(source)
    expected = 2 * 0.8 * math.sqrt(0.3 * 0.7)
    assert truth["metrics"]["concurrence"] == pytest.approx(expected, abs=1e-9)
    assert set_result["metrics"]["concurrence"] == pytest.approx(expected, abs=1e-6)
    assert qst_result["metrics"]["concurrence"] == pytest.approx(expected, abs=1e-6)
    assert stimtomo.fidelity(set_result["rho"], truth["rho"]) > 1 - 1e-6


def test_metrics_and_state_helpers():
    bell = stimtomo.state(FLAT)
    assert bell["rho"]["dim"] == 4
    m = stimtomo.metrics(bell["rho"])
    assert m["purity"] == pytest.approx(1.0)
    assert m["fidelity_vs_bell"] == pytest.approx(1.0)
    averaged = stimtomo.state({"phase_slope": 0.312}, averaged=True)
    assert averaged["metrics"]["concurrence"] < 1.0


def test_angle_scan_experiment():
    report = stimtomo.run_experiment({"name": "angle_scan", "source": {"phase_slope": 0.461}})
    assert report["summary"]["slope"] == pytest.approx(0.461, abs=1e-8)
    assert len(report["points"]) == 9


def test_errors_map_to_python_exceptions():
    with pytest.raises(stimtomo.ConfigError, match="alpha_sq"):
        stimtomo.simulate_qst({"alpha_sq": 2.0})
    with pytest.raises(stimtomo.ConfigError, match="bogus"):
        stimtomo.simulate_qst({"bogus": 1})
    with pytest.raises(stimtomo.DataError, match="line 2"):
        stimtomo.reconstruct_qst("kind,signal,idler,port,value,theta_mrad,rng_seed\nbad\n")
    with pytest.raises(stimtomo.ConfigError):
        stimtomo.run_experiment({"name": "fig6"})
    assert issubclass(stimtomo.DataError, stimtomo.StimtomoError)
