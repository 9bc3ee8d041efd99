"""Offset estimation and the proportional / feedforward control laws.

The slave timestamps the master's sync packet, unwraps the timestamp into
a signed offset estimate, and applies a proportional correction each cycle:

    u[k] = alpha * (slot_reference - estimate[k]) - eta[k] + mu

where ``eta`` is the processing delay actually elapsed this cycle and
``mu`` is the optional feedforward term. The closed loop is first order
with eigenvalue ``1 - alpha``; this module also provides the closed-form
steady state and trajectory used as independent oracles for the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ControllerConfig:
    """Per-node controller settings.

    ``feedforward=None`` with ``feedforward_enabled=True`` means "derive the
    term that cancels the mean delays" (see :func:`feedforward_term`); a
    float pins an explicit value instead. ``estimator_kappa=None`` defaults
    to the node's mean packet exchange delay when the scenario is resolved.
    Gains outside (0, 2) are accepted but flagged unstable by
    :func:`predict`, so the unstable region remains a runnable experiment.
    """

    alpha: float
    slot_reference: float = 0.0
    feedforward_enabled: bool = False
    feedforward: float | None = None
    estimator_kappa: float | None = None

    def __post_init__(self) -> None:
        if self.alpha == 0.0:
            raise ValueError("alpha must be nonzero")
        if self.slot_reference < 0.0:
            raise ValueError("slot_reference must be >= 0")


@dataclass(frozen=True)
class TheoryPrediction:
    """Closed-form behaviour of the synchronization loop."""

    eigenvalue: float
    asymptote: float
    stable: bool
    dc_gain: float = 1.0


def estimate_offset(timestamp: float, threshold: float, estimator_kappa: float) -> float:
    """Unwrap a sync-packet timestamp into a signed offset estimate.

    A timestamp below ``threshold/2 + estimator_kappa`` is taken at face
    value; anything above is interpreted as a negative offset one wrap
    back. The result equals the true ``offset + kappa`` whenever that sum
    lies in ``(-threshold/2 + estimator_kappa, threshold/2 + estimator_kappa)``.
    """
    if not 0.0 <= timestamp < threshold:
        raise ValueError(f"timestamp {timestamp} outside [0, {threshold})")
    if timestamp < threshold / 2.0 + estimator_kappa:
        return timestamp
    return timestamp - threshold


def control_input(config: ControllerConfig, offset_estimate: float, eta_actual: float) -> float:
    """Control input u for one cycle; the clock offset moves by exactly u.

    ``eta_actual`` is the processing delay that physically elapsed between
    timestamping and the correction write this cycle; the feedforward term
    (when enabled) compensates delays only in the mean.
    """
    u = config.alpha * (config.slot_reference - offset_estimate) - eta_actual
    if config.feedforward_enabled:
        if config.feedforward is None:
            raise ValueError("feedforward enabled but unresolved; call resolve() first")
        u += config.feedforward
    return u


def feedforward_term(alpha: float, kappa_mean: float, eta_mean: float) -> float:
    """Feedforward input that pins the steady-state offset at the slot reference.

    Derived from the fixed point of the control law: with mean delays the
    update vanishes at offset == slot_reference exactly when
    ``mu = alpha * kappa_mean + eta_mean``.
    """
    return alpha * kappa_mean + eta_mean


def resolve(config: ControllerConfig, kappa_mean: float, eta_mean: float) -> ControllerConfig:
    """Fill derived defaults (feedforward term, estimator kappa) for a node."""
    feedforward = config.feedforward
    if config.feedforward_enabled and feedforward is None:
        feedforward = feedforward_term(config.alpha, kappa_mean, eta_mean)
    estimator_kappa = config.estimator_kappa
    if estimator_kappa is None:
        estimator_kappa = kappa_mean
    return replace(config, feedforward=feedforward, estimator_kappa=estimator_kappa)


def predict(config: ControllerConfig, kappa_mean: float, eta_mean: float) -> TheoryPrediction:
    """Eigenvalue, stability flag and steady-state offset for a configuration.

    Without feedforward and a zero slot reference the loop settles at
    ``-kappa_mean - eta_mean/alpha``; the derived feedforward term moves the
    steady state to the slot reference regardless of the delay means. Delay
    variances spread the steady state but do not move its mean, so they do
    not appear here.
    """
    resolved = resolve(config, kappa_mean, eta_mean)
    mu = resolved.feedforward if resolved.feedforward_enabled else 0.0
    if mu is None:
        mu = 0.0
    asymptote = (
        resolved.slot_reference - kappa_mean - eta_mean / resolved.alpha + mu / resolved.alpha
    )
    eigenvalue = 1.0 - resolved.alpha
    return TheoryPrediction(
        eigenvalue=eigenvalue,
        asymptote=asymptote,
        stable=abs(eigenvalue) < 1.0,
    )


def expected_trajectory(
    config: ControllerConfig,
    kappa_mean: float,
    eta_mean: float,
    theta0: float,
    k: int,
) -> float:
    """Noise-free offset after k cycles under mean delays (closed form).

    The recursion contracts geometrically toward the steady state:
    ``theta[k] = asymptote + (1 - alpha)^k * (theta0 - asymptote)``. This is
    the independent oracle the cycle engine is checked against.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    prediction = predict(config, kappa_mean, eta_mean)
    return prediction.asymptote + (1.0 - config.alpha) ** k * (theta0 - prediction.asymptote)
