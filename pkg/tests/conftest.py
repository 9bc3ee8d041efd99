"""Shared scenario builders for the test suite."""

from __future__ import annotations

from packetsync.clock import ClockParams, Representation
from packetsync.control import ControllerConfig
from packetsync.delay import DelayModel
from packetsync.netsim import NodeConfig, ScenarioConfig

# baseline single-slave configuration used throughout: 1 s cycle on a
# 32768 Hz counter, 349/514 us mean delays, gain 0.5, initial offset 0.6 s
BASELINE = dict(kappa=349e-6, eta=514e-6, alpha=0.5, theta0=0.6)
NOISE_VAR = 244.4990e-12
EXP_DELAYS = dict(kappa=518.5e-6, eta=335.5e-6)


def make_node(
    node_id: str = "s1",
    kappa: float = BASELINE["kappa"],
    eta: float = BASELINE["eta"],
    alpha: float = BASELINE["alpha"],
    theta0: float = BASELINE["theta0"],
    slot: float = 0.0,
    feedforward: bool = False,
    noise_var: float = 0.0,
    kappa_var: float = 0.0,
    eta_var: float = 0.0,
    frequency: float = 32768.0,
    cycle_ticks: int = 32768,
    skew_ppm: float = 0.0,
) -> NodeConfig:
    params = ClockParams.from_frequency(
        frequency, cycle_ticks, offset_noise_variance=noise_var, skew_ppm=skew_ppm
    )
    return NodeConfig(
        node_id=node_id,
        clock=params,
        kappa=DelayModel(kappa, kappa_var),
        eta=DelayModel(eta, eta_var),
        controller=ControllerConfig(
            alpha=alpha, slot_reference=slot, feedforward_enabled=feedforward
        ),
        initial_offset=theta0,
    )


def make_scenario(
    nodes,
    num_cycles: int = 100,
    seed: int = 2024,
    mode: Representation = Representation.CONTINUOUS,
    guard_window: float = 1e-3,
    cycle_period: float = 1.0,
) -> ScenarioConfig:
    if isinstance(nodes, NodeConfig):
        nodes = (nodes,)
    return ScenarioConfig(
        nodes=tuple(nodes),
        cycle_period=cycle_period,
        num_cycles=num_cycles,
        seed=seed,
        mode=mode,
        guard_window=guard_window,
    )
