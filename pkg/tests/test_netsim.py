from __future__ import annotations

import math

import pytest
from conftest import EXP_DELAYS, NOISE_VAR, BASELINE, make_node, make_scenario

from packetsync import control as ctl
from packetsync import netsim
from packetsync.clock import Representation
from packetsync.netsim import SimulationError, delta_metric, wrap_offset

TICK = 1.0 / 32768.0


def run_single(node, **kw):
    return netsim.run(make_scenario(node, **kw))


def test_already_synchronized_slave_is_a_fixed_point():
    node = make_node(kappa=0.0, eta=0.0, theta0=0.0)
    records = run_single(node, num_cycles=3).records
    for r in records:
        assert r.timestamp == 0.0
        assert r.offset_estimate == 0.0
        assert r.correction == 0.0
        assert r.offset_after == 0.0
        assert r.fire_time_rel == 0.0
        assert r.delta == 0.0


def test_offsets_match_closed_form_trajectory():
    # the central oracle: per-cycle engine output against the geometric
    # closed form, noise-free, within accumulated rounding
    node = make_node()
    records = run_single(node, num_cycles=60).records
    resolved = ctl.resolve(node.controller, node.kappa.mean, node.eta.mean)
    theta0 = wrap_offset(node.initial_offset, 1.0)
    for r in records:
        expected = ctl.expected_trajectory(
            resolved, node.kappa.mean, node.eta.mean, theta0, r.cycle + 1
        )
        assert abs(r.offset_after - expected) <= 1e-12 * (r.cycle + 1)


def test_estimate_is_previous_offset_plus_kappa():
    node = make_node(kappa_var=(20e-6) ** 2)
    records = run_single(node, num_cycles=40).records
    for prev, r in zip(records, records[1:]):
        assert r.offset_estimate == pytest.approx(
            prev.offset_after + r.kappa_sample, abs=1e-12
        )


def test_delta_metric_examples():
    assert delta_metric(1.0, 0.0, 1.0) == 0.0
    # a slave firing exactly one slot early scores a perfect zero
    assert delta_metric(1.0, 12.81e-3, 0.98719) == pytest.approx(0.0, abs=1e-15)
    assert delta_metric(1.0, 0.0, 1.0000263) == pytest.approx(-26.3e-6, rel=1e-9)


def test_wrap_offset_balanced_interval():
    assert wrap_offset(0.6, 1.0) == pytest.approx(-0.4, abs=1e-15)
    assert wrap_offset(-0.6, 1.0) == pytest.approx(0.4, abs=1e-15)
    assert wrap_offset(0.25, 1.0) == 0.25
    assert wrap_offset(0.5, 1.0) == -0.5
    for x in (-0.97, -0.2, 0.0, 0.31, 0.88):
        w = wrap_offset(x, 1.0)
        assert -0.5 <= w < 0.5
        assert (w - x) % 1.0 == pytest.approx(0.0, abs=1e-12)


def test_run_is_deterministic():
    node = make_node(noise_var=NOISE_VAR, kappa_var=(5e-6) ** 2)
    a = run_single(node, num_cycles=50, seed=7).records
    b = run_single(node, num_cycles=50, seed=7).records
    assert a == b


def test_records_ordered_by_cycle_then_node():
    nodes = (make_node("zeta"), make_node("alpha"))
    records = netsim.run(make_scenario(nodes, num_cycles=3)).records
    keys = [(r.cycle, r.node_id) for r in records]
    assert keys == sorted(keys)


def test_spillover_is_an_error_with_context():
    node = make_node(kappa=0.7, eta=0.4)
    with pytest.raises(SimulationError, match=r"cycle 0.*'s1'"):
        run_single(node, num_cycles=2)


def test_final_states_allow_chained_runs():
    node = make_node(noise_var=NOISE_VAR)
    result = run_single(node, num_cycles=10)
    final = result.final_states["s1"]
    assert final.cycle_index == 10
    # at a cycle boundary the master phase is zero, so slave phase and
    # offset must agree modulo the threshold
    residue = (final.phase - final.offset) % 1.0
    assert min(residue, 1.0 - residue) < 1e-9


def test_feedforward_tracks_slot_reference():
    node = make_node(slot=9.15e-3, feedforward=True)
    records = run_single(node, num_cycles=80).records
    last = records[-1]
    assert last.offset_after == pytest.approx(9.15e-3, abs=1e-9)
    assert last.fire_time_rel == pytest.approx(-9.15e-3, abs=1e-9)
    assert last.delta == pytest.approx(0.0, abs=1e-9)
    # the precision metric is the firing-time identity with the master as reference
    for r in records:
        assert r.delta == pytest.approx(0.0 - 9.15e-3 - r.fire_time_rel, abs=1e-15)


def test_stochastic_trailing_mean_stays_on_the_asymptote():
    node = make_node(slot=9.15e-3, feedforward=True, noise_var=NOISE_VAR)
    records = run_single(node, num_cycles=500).records
    offsets = [r.offset_after for r in records]
    band = 3 * math.sqrt(NOISE_VAR) / math.sqrt(200)
    # every post-transient 200-cycle window mean sits inside the band
    for start in range(100, 301, 25):
        window = offsets[start : start + 200]
        assert abs(sum(window) / len(window) - 9.15e-3) < band


def test_master_proximity_collision():
    # an uncompensated slave parks about 1.4 ms behind the master: inside a
    # 10 ms guard window, outside a 1 ms one
    node = make_node()
    records = run_single(node, num_cycles=60, guard_window=10e-3).records
    assert records[-1].collided
    records = run_single(node, num_cycles=60, guard_window=1e-3).records
    assert not records[-1].collided


def test_equal_slots_collide_every_converged_cycle():
    nodes = tuple(
        make_node(f"s{i}", feedforward=True, noise_var=NOISE_VAR) for i in range(1, 4)
    )
    records = netsim.run(make_scenario(nodes, num_cycles=120)).records
    post = [r for r in records if r.cycle >= 60]
    assert post and all(r.collided for r in post)


def test_separated_slots_do_not_collide():
    nodes = tuple(
        make_node(f"s{i}", slot=i * 12.81e-3, feedforward=True, noise_var=NOISE_VAR)
        for i in range(3)
    )
    records = netsim.run(make_scenario(nodes, num_cycles=120)).records
    assert not any(r.collided for r in records if r.cycle >= 60)


def test_zero_guard_window_never_collides():
    nodes = tuple(make_node(f"s{i}", feedforward=True) for i in range(3))
    records = netsim.run(make_scenario(nodes, num_cycles=30, guard_window=0.0)).records
    assert not any(r.collided for r in records)


def test_ticks_mode_quantization_floor():
    # experimental delays on a 32768 Hz counter: the loop parks within a
    # couple of ticks of the slot and the residual bias stays under a tick
    node = make_node(theta0=0.2, feedforward=True, **EXP_DELAYS)
    records = run_single(node, num_cycles=300, mode=Representation.TICKS).records
    post = [r.delta for r in records if r.cycle >= 100]
    assert max(abs(d) for d in post) <= 2 * TICK
    assert sum(abs(d) for d in post) / len(post) < TICK
    assert abs(sum(post) / len(post)) < TICK


def test_ticks_mode_timestamps_are_whole_ticks():
    node = make_node(theta0=0.2, feedforward=True, **EXP_DELAYS)
    records = run_single(node, num_cycles=20, mode=Representation.TICKS).records
    for r in records:
        ticks = r.timestamp / TICK
        assert ticks == pytest.approx(round(ticks), abs=1e-6)


def test_scenario_validation():
    node = make_node()
    with pytest.raises(ValueError, match="duplicate"):
        netsim.run(make_scenario((node, node), num_cycles=1))
    with pytest.raises(ValueError, match="threshold"):
        netsim.run(make_scenario(node, num_cycles=1, cycle_period=2.0))
    with pytest.raises(ValueError, match="initial_offset"):
        netsim.run(make_scenario(make_node(theta0=1.5), num_cycles=1))
    with pytest.raises(ValueError, match="slot_reference"):
        netsim.run(make_scenario(make_node(slot=1.0), num_cycles=1))


def test_unstable_gain_diverges():
    # small initial error so the divergence is observed before any wrap
    for alpha in (2.1, -0.1):
        node = make_node(alpha=alpha, theta0=0.01)
        records = run_single(node, num_cycles=100).records
        resolved = ctl.resolve(node.controller, node.kappa.mean, node.eta.mean)
        asymptote = ctl.predict(resolved, node.kappa.mean, node.eta.mean).asymptote
        d0 = abs(0.01 - asymptote)
        devs = [abs(r.offset_after - asymptote) for r in records]
        crossing = next(i for i, d in enumerate(devs) if d > 10 * d0)
        assert crossing < 100
        for earlier, later in zip(devs[:crossing], devs[1 : crossing + 1]):
            assert later >= earlier
