"""Post-processing of cycle records: convergence, steady state, sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import control as ctl
from . import netsim
from .clock import Representation
from .control import TheoryPrediction
from .netsim import CycleRecord, NodeConfig, ScenarioConfig

DEFAULT_WINDOW = 200


@dataclass(frozen=True)
class ConvergenceReport:
    """Summary of one node's trajectory against its theory prediction."""

    converged: bool
    settling_cycle: int | None
    steady_mean: float
    steady_std: float
    theory_asymptote: float
    abs_error_vs_theory: float
    max_abs_delta: float
    collision_count: int


def default_tolerance(node: NodeConfig, mode: Representation) -> float:
    """Convergence band: 3 sigma of offset noise, plus a tick in ticks mode."""
    tol = 3.0 * math.sqrt(node.clock.offset_noise_variance)
    if mode is Representation.TICKS:
        tol += node.clock.tick_period
    return tol if tol > 0.0 else 1e-9


def analyze(
    records: list[CycleRecord],
    prediction: TheoryPrediction,
    tolerance: float,
    window: int,
) -> ConvergenceReport:
    """Convergence report for a single node's records.

    The settling cycle is the first cycle after which the offset stays
    within ``tolerance`` of the predicted asymptote for the rest of the
    run; transient visits do not count. Steady statistics use the trailing
    ``window`` records; the delta maximum and collision count cover the
    post-settling records (trailing window when not converged).
    """
    if not records:
        raise ValueError("records must be non-empty")
    node_ids = {r.node_id for r in records}
    if len(node_ids) != 1:
        raise ValueError(f"analyze expects a single node, got {sorted(node_ids)}")
    if not 1 <= window <= len(records):
        raise ValueError(f"window must be in [1, {len(records)}], got {window}")

    offsets = np.array([r.offset_after for r in records])
    out_of_band = np.nonzero(np.abs(offsets - prediction.asymptote) >= tolerance)[0]
    if out_of_band.size == 0:
        settling: int | None = 0
    elif out_of_band[-1] == len(records) - 1:
        settling = None
    else:
        settling = int(out_of_band[-1]) + 1
    converged = settling is not None

    tail = offsets[-window:]
    steady_mean = float(np.mean(tail))
    steady_std = float(np.std(tail))
    scope = records[settling:] if converged else records[-window:]
    return ConvergenceReport(
        converged=converged,
        settling_cycle=settling,
        steady_mean=steady_mean,
        steady_std=steady_std,
        theory_asymptote=prediction.asymptote,
        abs_error_vs_theory=abs(steady_mean - prediction.asymptote),
        max_abs_delta=max(abs(r.delta) for r in scope),
        collision_count=sum(r.collided for r in scope),
    )


def node_prediction(node: NodeConfig) -> TheoryPrediction:
    resolved = ctl.resolve(node.controller, node.kappa.mean, node.eta.mean)
    return ctl.predict(resolved, node.kappa.mean, node.eta.mean)


def with_alpha(scenario: ScenarioConfig, alpha: float) -> ScenarioConfig:
    """Copy of the scenario with every node's proportional gain replaced."""
    nodes = tuple(
        replace(node, controller=replace(node.controller, alpha=alpha))
        for node in scenario.nodes
    )
    return replace(scenario, nodes=nodes)


def sweep_alpha(
    base_scenario: ScenarioConfig,
    alphas: list[float],
    tolerance: float | None = None,
    window: int | None = None,
) -> list[tuple[float, ConvergenceReport]]:
    """Run the single-node base scenario once per gain, same seed throughout."""
    if not alphas:
        raise ValueError("alphas must be non-empty")
    if len(base_scenario.nodes) != 1:
        raise ValueError("sweep_alpha expects a single-node scenario")
    out = []
    for alpha in alphas:
        scenario = with_alpha(base_scenario, alpha)
        node = scenario.nodes[0]
        result = netsim.run(scenario)
        tol = tolerance if tolerance is not None else default_tolerance(node, scenario.mode)
        win = window if window is not None else min(DEFAULT_WINDOW, scenario.num_cycles)
        out.append((alpha, analyze(result.records, node_prediction(node), tol, win)))
    return out
