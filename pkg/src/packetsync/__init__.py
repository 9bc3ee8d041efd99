"""Deterministic simulator for packet-coupled clock synchronization.

Counter-based clocks exchange periodic sync packets over links with
Gaussian exchange and processing delays; each slave applies a proportional
correction, optionally with a feedforward term that cancels the mean
delays and steers its firing into an allotted time slot. The package pairs
the cycle-level simulator with closed-form theory oracles, convergence
analysis and a batch CLI.
"""

from .analysis import ConvergenceReport, analyze, default_tolerance, node_prediction, sweep_alpha
from .clock import ClockParams, ClockState, CorrectionResult, Representation
from .control import (
    ControllerConfig,
    TheoryPrediction,
    control_input,
    estimate_offset,
    expected_trajectory,
    feedforward_term,
    predict,
)
from .delay import DelayModel, RngStream, sample, stream_for
from .netsim import (
    CycleRecord,
    NodeConfig,
    RunResult,
    ScenarioConfig,
    SimulationError,
    delta_metric,
    run,
    step_cycle,
    wrap_offset,
)

__version__ = "0.1.0"

__all__ = [
    "ClockParams",
    "ClockState",
    "ControllerConfig",
    "ConvergenceReport",
    "CorrectionResult",
    "CycleRecord",
    "DelayModel",
    "NodeConfig",
    "Representation",
    "RngStream",
    "RunResult",
    "ScenarioConfig",
    "SimulationError",
    "TheoryPrediction",
    "analyze",
    "control_input",
    "default_tolerance",
    "delta_metric",
    "estimate_offset",
    "expected_trajectory",
    "feedforward_term",
    "node_prediction",
    "predict",
    "run",
    "sample",
    "step_cycle",
    "stream_for",
    "sweep_alpha",
    "wrap_offset",
    "__version__",
]
