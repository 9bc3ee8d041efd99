"""Counter-based clock model.

A node's clock is a counter driven by a crystal oscillator: the counter
value (the clock *phase*) grows linearly with time and resets to zero when
it reaches the firing threshold, at which instant the node broadcasts its
sync packet. Alongside the phase we track the signed offset of the clock
relative to the ideal reference clock, per-cycle Gaussian phase noise and
an optional frequency skew.

Two representations are supported:

* ``continuous`` -- the phase is a real number of seconds and corrections
  apply exactly.
* ``ticks`` -- the phase is an integer number of oscillator periods, as
  read from a counter register. Elapsed time flows through a persistent
  fractional-tick accumulator so quantisation never loses drift, and
  corrections are rounded to whole ticks with the rounding residue
  surfaced to the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

from .delay import RngStream


class Representation(str, Enum):
    CONTINUOUS = "continuous"
    TICKS = "ticks"


@dataclass(frozen=True)
class ClockParams:
    """Static parameters of a counter-based clock.

    ``threshold`` is the firing/reset level in seconds and equals
    ``cycle_ticks * tick_period`` for a clock used in ticks representation.
    ``skew_ppm`` is the fractional frequency error in parts per million;
    zero models a crystal running exactly at nominal frequency.
    """

    nominal_frequency: float
    threshold: float
    cycle_ticks: int
    tick_period: float = 0.0  # filled from nominal_frequency when omitted
    offset_noise_variance: float = 0.0
    skew_ppm: float = 0.0

    def __post_init__(self) -> None:
        if self.nominal_frequency <= 0.0:
            raise ValueError("nominal_frequency must be > 0")
        if self.tick_period == 0.0:
            object.__setattr__(self, "tick_period", 1.0 / self.nominal_frequency)
        if self.tick_period <= 0.0:
            raise ValueError("tick_period must be > 0")
        if self.threshold <= 0.0:
            raise ValueError("threshold must be > 0")
        if self.cycle_ticks < 1:
            raise ValueError("cycle_ticks must be >= 1")
        if self.offset_noise_variance < 0.0:
            raise ValueError("offset_noise_variance must be >= 0")

    @classmethod
    def from_frequency(cls, frequency: float, cycle_ticks: int, **kwargs) -> "ClockParams":
        """Build params with threshold derived as cycle_ticks / frequency."""
        return cls(
            nominal_frequency=frequency,
            threshold=cycle_ticks / frequency,
            cycle_ticks=cycle_ticks,
            **kwargs,
        )

    @property
    def rate(self) -> float:
        """Phase growth per second of reference time."""
        return 1.0 + self.skew_ppm * 1e-6

    @property
    def noise_std(self) -> float:
        return math.sqrt(self.offset_noise_variance)


@dataclass(frozen=True)
class ClockState:
    """Snapshot of one clock: phase in [0, threshold), signed offset, cycle count.

    In ticks representation ``phase`` is always an exact whole number of
    tick periods (the counter register value) and ``tick_fraction`` holds
    the sub-tick part of the true oscillator phase, in units of one tick.
    """

    phase: float
    offset: float
    cycle_index: int = 0
    representation: Representation = Representation.CONTINUOUS
    tick_fraction: float = 0.0


class CorrectionResult(NamedTuple):
    state: ClockState
    applied: float
    residue: float


def make_state(
    params: ClockParams,
    phase: float,
    offset: float,
    representation: Representation = Representation.CONTINUOUS,
) -> ClockState:
    """Initial state at the given phase; ticks mode splits off the sub-tick part."""
    if not 0.0 <= phase < params.threshold:
        raise ValueError(f"phase {phase} outside [0, {params.threshold})")
    if representation is Representation.CONTINUOUS:
        return ClockState(phase=phase, offset=offset)
    ticks = phase / params.tick_period
    whole = math.floor(ticks)
    return ClockState(
        phase=whole * params.tick_period,
        offset=offset,
        representation=Representation.TICKS,
        tick_fraction=ticks - whole,
    )


def continuous_phase(state: ClockState, params: ClockParams) -> float:
    """True oscillator phase, sub-tick part included."""
    if state.representation is Representation.CONTINUOUS:
        return state.phase
    return state.phase + state.tick_fraction * params.tick_period


def time_until_fire(state: ClockState, params: ClockParams) -> float:
    """Reference-time interval until the next threshold crossing."""
    return (params.threshold - continuous_phase(state, params)) / params.rate


def advance(state: ClockState, params: ClockParams, duration: float) -> ClockState:
    """Free-run the clock for ``duration`` seconds of reference time.

    The phase grows by ``duration * (1 + skew_ppm * 1e-6)`` and wraps
    modulo the threshold; every wrap is a firing and increments
    ``cycle_index``. The offset drifts by the skew-induced excess. In ticks
    representation the growth is quantised to whole ticks through the
    fractional accumulator, so chained advances lose nothing to rounding.
    """
    if duration < 0.0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    growth = duration * params.rate
    drift = duration * (params.rate - 1.0)
    if state.representation is Representation.CONTINUOUS:
        raw = state.phase + growth
        wraps = int(raw // params.threshold)
        phase = raw - wraps * params.threshold
        if phase >= params.threshold:  # float edge of the division above
            phase -= params.threshold
            wraps += 1
        if phase < 0.0:
            phase += params.threshold
            wraps -= 1
        return replace(
            state,
            phase=phase,
            offset=state.offset + drift,
            cycle_index=state.cycle_index + wraps,
        )
    ticks, fraction, wraps = _shift_ticks(state, params, growth)
    return replace(
        state,
        phase=ticks * params.tick_period,
        offset=state.offset + drift,
        cycle_index=state.cycle_index + wraps,
        tick_fraction=fraction,
    )


def apply_offset_noise(state: ClockState, params: ClockParams, rng: RngStream) -> ClockState:
    """Inject this cycle's Gaussian phase noise (one draw per sync cycle).

    The offset moves by the draw and the phase shifts consistently, modulo
    the threshold.
    """
    w = rng.normal(0.0, params.noise_std)
    return _shift(state, params, w)


def correct(state: ClockState, params: ClockParams, amount: float) -> CorrectionResult:
    """Subtract ``amount`` from phase and offset (the servo write).

    In ticks representation the amount is rounded to the nearest whole tick
    before application (a counter register can only move by integers; ties
    round away from zero) and the rounding residue ``amount - applied`` is
    reported to the caller.
    """
    if state.representation is Representation.CONTINUOUS:
        new = replace(
            state,
            phase=_wrap(state.phase - amount, params.threshold),
            offset=state.offset - amount,
        )
        return CorrectionResult(new, amount, 0.0)
    whole = _round_half_away(amount / params.tick_period)
    applied = whole * params.tick_period
    ticks = _tick_count(state.phase, params)
    ticks = (ticks - whole) % params.cycle_ticks
    new = replace(
        state,
        phase=ticks * params.tick_period,
        offset=state.offset - applied,
    )
    return CorrectionResult(new, applied, amount - applied)


def _shift(state: ClockState, params: ClockParams, delta: float) -> ClockState:
    """Move phase and offset together by ``delta`` without counting firings."""
    if state.representation is Representation.CONTINUOUS:
        return replace(
            state,
            phase=_wrap(state.phase + delta, params.threshold),
            offset=state.offset + delta,
        )
    ticks, fraction, _ = _shift_ticks(state, params, delta)
    return replace(
        state,
        phase=ticks * params.tick_period,
        offset=state.offset + delta,
        tick_fraction=fraction,
    )


def _shift_ticks(state: ClockState, params: ClockParams, delta: float) -> tuple[int, float, int]:
    """Apply a signed continuous shift to a ticks-mode state.

    Returns (counter value, new fractional accumulator, completed wraps).
    """
    total = state.tick_fraction + delta / params.tick_period
    whole = math.floor(total)
    fraction = total - whole
    if fraction >= 1.0:  # float edge
        whole += 1
        fraction -= 1.0
    ticks = _tick_count(state.phase, params) + whole
    wraps = ticks // params.cycle_ticks
    return ticks - wraps * params.cycle_ticks, fraction, wraps


def _tick_count(phase: float, params: ClockParams) -> int:
    return int(round(phase / params.tick_period))


def _round_half_away(x: float) -> int:
    if x >= 0.0:
        return math.floor(x + 0.5)
    return -math.floor(-x + 0.5)


def _wrap(x: float, threshold: float) -> float:
    p = x % threshold
    if p >= threshold:  # x slightly below 0 can round the modulo up to threshold
        p -= threshold
    return p
