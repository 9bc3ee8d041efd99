#!/usr/bin/env python3
"""Tour of the counter-based clock: firing, tick quantisation, corrections.

A clock is a counter: its phase climbs to the threshold, fires, resets.
In ticks mode the counter only knows whole oscillator periods; the
fractional accumulator keeps the sub-tick remainder so nothing drifts
away, and corrections are rounded to whole ticks with the residue
reported back.
"""

from packetsync import clock as clk
from packetsync.clock import ClockParams, Representation
from packetsync.delay import RngStream

params = ClockParams.from_frequency(32768, 32768)  # 1 s cycle at 32768 Hz
print(f"tick period: {params.tick_period * 1e6:.4f} us, threshold: {params.threshold} s")

# --- continuous phase: advance, wrap, fire -------------------------------
state = clk.make_state(params, phase=0.4, offset=0.0)
state = clk.advance(state, params, 0.2)
print(f"\nafter 0.2 s the phase is {state.phase:.3f} s (no firing yet)")
state = clk.advance(state, params, 0.4)
print(f"after 0.4 s more: phase {state.phase:.3f} s, firings so far: {state.cycle_index}")

# --- ticks mode: the accumulator never loses the sub-tick part -----------
state = clk.make_state(params, 0.0, 0.0, Representation.TICKS)
step = 30.5176e-6  # a hair more than one tick
for _ in range(32768):
    state = clk.advance(state, params, step)
print(f"\n32768 advances of {step * 1e6} us -> exactly {state.cycle_index} firing,")
print(f"counter back at {state.phase} s with {state.tick_fraction:.4f} ticks carried over")

# --- corrections: exact in continuous mode, whole ticks otherwise --------
state = clk.make_state(params, 0.5, 0.5, Representation.TICKS)
for amount_us in (45.7, 45.8):
    _, applied, residue = clk.correct(state, params, amount_us * 1e-6)
    print(
        f"\nasked to correct {amount_us} us -> applied "
        f"{applied * 1e6:.2f} us ({round(applied / params.tick_period)} ticks), "
        f"residue {residue * 1e6:+.2f} us"
    )

# --- per-cycle phase noise is deterministic given the stream -------------
noisy = ClockParams.from_frequency(32768, 32768, offset_noise_variance=244.4990e-12)
a = clk.apply_offset_noise(clk.make_state(noisy, 0.1, 0.0), noisy, RngStream(42, 1))
b = clk.apply_offset_noise(clk.make_state(noisy, 0.1, 0.0), noisy, RngStream(42, 1))
print(f"\nsame stream, same draw: {a.offset * 1e6:.3f} us == {b.offset * 1e6:.3f} us")
