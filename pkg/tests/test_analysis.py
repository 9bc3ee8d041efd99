from __future__ import annotations

import math
from dataclasses import replace

import pytest
from conftest import NOISE_VAR, make_node, make_scenario

from packetsync import analysis, netsim
from packetsync.clock import Representation
from packetsync.control import TheoryPrediction


def run_and_analyze(node, tolerance, window=50, **kw):
    scenario = make_scenario(node, **kw)
    result = netsim.run(scenario)
    return analysis.analyze(result.records, analysis.node_prediction(node), tolerance, window)


def expected_settling(theta0, asymptote, alpha, tol):
    # independent bound: smallest k with |1-alpha|^k * |theta0 - asymptote| < tol
    return math.ceil(math.log(tol / abs(theta0 - asymptote)) / math.log(abs(1 - alpha)))


def test_noise_free_settling_within_bound():
    node = make_node()
    report = run_and_analyze(node, tolerance=10e-6, num_cycles=100)
    assert report.converged
    assert report.settling_cycle <= 25


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8, 1.5, 1.9])
def test_settling_cycle_matches_geometric_formula(alpha):
    node = make_node(alpha=alpha)
    tol = 1e-5
    report = run_and_analyze(node, tolerance=tol, num_cycles=200, window=100)
    theta0 = netsim.wrap_offset(node.initial_offset, 1.0)
    # offsets are recorded after the cycle's correction, so record k holds
    # the k+1 step of the recursion
    k = expected_settling(theta0, report.theory_asymptote, alpha, tol)
    assert report.settling_cycle == k - 1


def test_unstable_gain_reports_not_converged():
    for alpha in (2.1, 2.0):
        report = run_and_analyze(make_node(alpha=alpha), tolerance=1e-6, num_cycles=120)
        assert not report.converged
        assert report.settling_cycle is None


def test_feedforward_steady_mean_in_noise_band():
    node = make_node(slot=9.15e-3, feedforward=True, noise_var=NOISE_VAR)
    tol = analysis.default_tolerance(node, Representation.CONTINUOUS)
    report = run_and_analyze(node, tolerance=tol, num_cycles=500, window=200)
    assert report.converged
    assert abs(report.steady_mean - 9.15e-3) < 3 * math.sqrt(NOISE_VAR) / math.sqrt(200)
    assert report.abs_error_vs_theory == abs(report.steady_mean - report.theory_asymptote)


def test_analyze_is_pure():
    node = make_node()
    scenario = make_scenario(node, num_cycles=60)
    records = netsim.run(scenario).records
    pred = analysis.node_prediction(node)
    assert analysis.analyze(records, pred, 1e-5, 30) == analysis.analyze(records, pred, 1e-5, 30)


def test_wider_tolerance_never_settles_later():
    node = make_node()
    records = netsim.run(make_scenario(node, num_cycles=80)).records
    pred = analysis.node_prediction(node)
    previous = None
    for tol in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2):
        settling = analysis.analyze(records, pred, tol, 40).settling_cycle
        if previous is not None:
            assert settling <= previous
        previous = settling


def test_analyze_validates_inputs():
    node = make_node()
    records = netsim.run(make_scenario(node, num_cycles=10)).records
    pred = analysis.node_prediction(node)
    with pytest.raises(ValueError):
        analysis.analyze([], pred, 1e-6, 5)
    with pytest.raises(ValueError):
        analysis.analyze(records, pred, 1e-6, 11)
    two_nodes = netsim.run(make_scenario((make_node("a"), make_node("b")), num_cycles=5)).records
    with pytest.raises(ValueError):
        analysis.analyze(two_nodes, pred, 1e-6, 5)


def test_never_in_band_is_not_converged():
    record = netsim.CycleRecord(0, "s1", 0, 0, 0, 0, 0, 1.0, 0, 0, False)
    records = [replace(record, cycle=k) for k in range(5)]
    pred = TheoryPrediction(eigenvalue=0.5, asymptote=0.0, stable=True)
    report = analysis.analyze(records, pred, 1e-3, 5)
    assert not report.converged
    assert report.max_abs_delta == 0.0


def test_constant_offset_at_asymptote_settles_immediately():
    record = netsim.CycleRecord(0, "s1", 0, 0, 0, 0, 0, -1.377e-3, 0, 0, False)
    records = [replace(record, cycle=k) for k in range(3)]
    pred = TheoryPrediction(eigenvalue=0.5, asymptote=-1.377e-3, stable=True)
    assert analysis.analyze(records, pred, 1e-6, 3).settling_cycle == 0


def test_default_tolerance():
    quiet = make_node()
    assert analysis.default_tolerance(quiet, Representation.CONTINUOUS) == 1e-9
    noisy = make_node(noise_var=NOISE_VAR)
    assert analysis.default_tolerance(noisy, Representation.CONTINUOUS) == pytest.approx(
        3 * math.sqrt(NOISE_VAR)
    )
    assert analysis.default_tolerance(noisy, Representation.TICKS) == pytest.approx(
        3 * math.sqrt(NOISE_VAR) + 1 / 32768
    )


def test_sweep_alpha_stability_region():
    scenario = make_scenario(make_node(), num_cycles=400)
    reports = analysis.sweep_alpha(scenario, [0.1, 0.5, 1.0, 1.5])
    assert [alpha for alpha, _ in reports] == [0.1, 0.5, 1.0, 1.5]
    assert all(report.converged for _, report in reports)
    marginal = analysis.sweep_alpha(scenario, [2.0])
    assert not marginal[0][1].converged
    diverging = analysis.sweep_alpha(scenario, [2.5])
    assert not diverging[0][1].converged


def test_sweep_alpha_rejects_multinode():
    scenario = make_scenario((make_node("a"), make_node("b")), num_cycles=5)
    with pytest.raises(ValueError):
        analysis.sweep_alpha(scenario, [0.5])
