"""Per-cycle discrete-event engine for one master and N slave clocks.

Each synchronization cycle k runs the same script per slave: the master
fires and broadcasts at ``t_k = k * T``; the packet arrives after the
sampled exchange delay and the slave timestamps it; the timestamp is
unwrapped into an offset estimate; after the sampled processing delay the
proportional correction is written to the counter; the cycle's phase noise
is injected; finally the slave's own firing time (its next threshold
crossing) is recorded relative to the master's closing firing and the
precision metric is computed. Firings closer than the guard window, to
each other or to the cycle-opening master firing, are flagged as packet
collisions.

Offsets are tracked as the balanced representative in
``[-threshold/2, threshold/2)`` at initialization: two initial offsets that
differ by a whole threshold describe the same physical phase relation and
the timestamp estimator can only ever observe the wrapped value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import clock as clk
from . import control as ctl
from . import delay as dly
from .clock import ClockParams, ClockState, Representation
from .control import ControllerConfig
from .delay import DelayModel, RngStream

NOISE_SOURCES = ("kappa", "eta", "offset-noise")


class SimulationError(RuntimeError):
    """A cycle could not be simulated (e.g. delays spilling past the cycle)."""


@dataclass(frozen=True)
class NodeConfig:
    """One slave: clock, delay models, controller and initial offset."""

    node_id: str
    clock: ClockParams
    kappa: DelayModel
    eta: DelayModel
    controller: ControllerConfig
    initial_offset: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    """A full experiment: slaves, cycle period, horizon, seed, mode, guard."""

    nodes: tuple[NodeConfig, ...]
    cycle_period: float
    num_cycles: int
    seed: int
    mode: Representation = Representation.CONTINUOUS
    guard_window: float = 1e-3  # default: roughly one packet airtime

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if self.num_cycles < 1:
            raise ValueError("num_cycles must be >= 1")
        if self.guard_window < 0.0:
            raise ValueError("guard_window must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class CycleRecord:
    """Everything observed for one slave in one cycle."""

    cycle: int
    node_id: str
    kappa_sample: float
    eta_sample: float
    timestamp: float
    offset_estimate: float
    correction: float
    offset_after: float
    fire_time_rel: float
    delta: float
    collided: bool


@dataclass
class RunResult:
    records: list[CycleRecord]
    final_states: dict[str, ClockState] = field(default_factory=dict)


def wrap_offset(value: float, threshold: float) -> float:
    """Balanced representative of an offset, in [-threshold/2, threshold/2)."""
    half = threshold / 2.0
    wrapped = (value + half) % threshold
    if wrapped >= threshold:  # float edge of the modulo
        wrapped -= threshold
    return wrapped - half


def delta_metric(master_fire: float, slot: float, slave_fire: float) -> float:
    """Synchronized-state precision: master firing minus slot minus slave firing."""
    return master_fire - slot - slave_fire


def validate_scenario(scenario: ScenarioConfig) -> None:
    seen: set[str] = set()
    for node in scenario.nodes:
        if node.node_id in seen:
            raise ValueError(f"duplicate node_id {node.node_id!r}")
        seen.add(node.node_id)
        params = node.clock
        if abs(params.threshold - scenario.cycle_period) > 1e-12 * scenario.cycle_period:
            raise ValueError(
                f"node {node.node_id!r}: threshold {params.threshold} != "
                f"cycle period {scenario.cycle_period}"
            )
        if abs(node.initial_offset) >= params.threshold:
            raise ValueError(
                f"node {node.node_id!r}: |initial_offset| must be < threshold"
            )
        if scenario.mode is Representation.TICKS:
            expected = params.cycle_ticks * params.tick_period
            if abs(params.threshold - expected) > 1e-12 * params.threshold:
                raise ValueError(
                    f"node {node.node_id!r}: ticks mode requires "
                    f"threshold == cycle_ticks * tick_period"
                )
        if node.controller.slot_reference >= params.threshold:
            raise ValueError(
                f"node {node.node_id!r}: slot_reference must be < threshold"
            )


def initial_states(scenario: ScenarioConfig) -> dict[str, ClockState]:
    """Clock states at t=0, offsets wrapped to the balanced interval."""
    states = {}
    for node in scenario.nodes:
        threshold = node.clock.threshold
        offset = wrap_offset(node.initial_offset, threshold)
        phase = offset % threshold
        if phase >= threshold:
            phase -= threshold
        states[node.node_id] = clk.make_state(node.clock, phase, offset, scenario.mode)
    return states


def make_streams(scenario: ScenarioConfig) -> dict[tuple[str, str], RngStream]:
    return {
        (node.node_id, source): dly.stream_for(scenario.seed, node.node_id, source)
        for node in scenario.nodes
        for source in NOISE_SOURCES
    }


def step_cycle(
    scenario: ScenarioConfig,
    states: dict[str, ClockState],
    cycle_index: int,
    rng_streams: dict[tuple[str, str], RngStream],
) -> list[CycleRecord]:
    """Simulate cycle ``cycle_index`` for every slave; updates states in place.

    Records are ordered by node_id. The recorded offset is the state right
    after the correction write (before this cycle's noise); the recorded
    firing is the slave's first threshold crossing after correction and
    noise, expressed relative to the master's closing firing and wrapped to
    the nearest cycle.
    """
    period = scenario.cycle_period
    t_open = cycle_index * period
    records: list[CycleRecord] = []
    fire_times: dict[str, float] = {}
    for node in sorted(scenario.nodes, key=lambda n: n.node_id):
        params = node.clock
        controller = ctl.resolve(node.controller, node.kappa.mean, node.eta.mean)
        state = states[node.node_id]

        kappa = dly.sample(node.kappa, rng_streams[(node.node_id, "kappa")])
        state = clk.advance(state, params, kappa)
        timestamp = state.phase
        estimate = ctl.estimate_offset(timestamp, params.threshold, controller.estimator_kappa)

        eta = dly.sample(node.eta, rng_streams[(node.node_id, "eta")])
        if kappa + eta >= period:
            raise SimulationError(
                f"cycle {cycle_index}, node {node.node_id!r}: kappa + eta = "
                f"{kappa + eta:.6g} s spills past the cycle period {period:.6g} s"
            )
        state = clk.advance(state, params, eta)

        u = ctl.control_input(controller, estimate, eta)
        state, _, _ = clk.correct(state, params, -u)
        offset_after = state.offset
        state = clk.apply_offset_noise(state, params, rng_streams[(node.node_id, "offset-noise")])

        t_corrected = t_open + kappa + eta
        t_fire = t_corrected + clk.time_until_fire(state, params)
        fire_rel = wrap_offset(t_fire - (t_open + period), period)
        delta = 0.0 - controller.slot_reference - fire_rel

        state = clk.advance(state, params, period - kappa - eta)
        states[node.node_id] = state
        fire_times[node.node_id] = t_fire
        records.append(
            CycleRecord(
                cycle=cycle_index,
                node_id=node.node_id,
                kappa_sample=kappa,
                eta_sample=eta,
                timestamp=timestamp,
                offset_estimate=estimate,
                correction=u,
                offset_after=offset_after,
                fire_time_rel=fire_rel,
                delta=delta,
                collided=False,
            )
        )

    collided = _find_collisions(records, fire_times, t_open, scenario.guard_window)
    if collided:
        records = [replace(r, collided=r.node_id in collided) for r in records]
    return records


def _find_collisions(
    records: list[CycleRecord],
    fire_times: dict[str, float],
    t_open: float,
    guard: float,
) -> set[str]:
    """Nodes whose firing lands within the guard window of another transmission.

    Checked against the cycle-opening master firing and pairwise between
    slaves; "closer than" is strict, so a zero guard never collides.
    """
    hit: set[str] = set()
    ids = [r.node_id for r in records]
    for i, a in enumerate(ids):
        if abs(fire_times[a] - t_open) < guard:
            hit.add(a)
        for b in ids[i + 1 :]:
            if abs(fire_times[a] - fire_times[b]) < guard:
                hit.add(a)
                hit.add(b)
    return hit


def run(scenario: ScenarioConfig) -> RunResult:
    """Run the full scenario; deterministic given (scenario, seed).

    Returns records ordered by (cycle, node_id) plus the final clock states
    for chained runs. Simulation failures carry cycle/node context.
    """
    validate_scenario(scenario)
    states = initial_states(scenario)
    streams = make_streams(scenario)
    records: list[CycleRecord] = []
    for k in range(scenario.num_cycles):
        records.extend(step_cycle(scenario, states, k, streams))
    return RunResult(records=records, final_states=states)
