#!/usr/bin/env python3
"""Sweep the proportional gain across and beyond the stable region.

The closed loop has eigenvalue 1 - alpha: gains in (0, 2) contract, the
boundary oscillates forever, anything outside diverges. alpha = 1 is the
deadbeat gain that lands on the steady state in a single correction.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from packetsync import analysis, netsim
from packetsync.clock import ClockParams
from packetsync.control import ControllerConfig
from packetsync.delay import DelayModel
from packetsync.netsim import NodeConfig, ScenarioConfig

node = NodeConfig(
    node_id="s1",
    clock=ClockParams.from_frequency(32768, 32768),
    kappa=DelayModel(349e-6),
    eta=DelayModel(514e-6),
    controller=ControllerConfig(alpha=0.5),
    initial_offset=0.6,
)
base = ScenarioConfig(nodes=(node,), cycle_period=1.0, num_cycles=400, seed=3)

alphas = [0.1, 0.5, 1.0, 1.5, 1.9, 2.0, 2.1]
print(f"{'alpha':>6} {'eigenvalue':>11} {'converged':>10} {'settling':>9} {'steady [ms]':>12}")
for alpha, report in analysis.sweep_alpha(base, alphas):
    settling = "-" if report.settling_cycle is None else report.settling_cycle
    print(f"{alpha:>6} {1 - alpha:>11.2f} {str(report.converged):>10} "
          f"{settling:>9} {report.steady_mean * 1e3:>12.4f}")

fig, ax = plt.subplots(figsize=(7, 4))
for alpha in (0.1, 0.5, 1.0, 1.5, 2.0):
    records = netsim.run(analysis.with_alpha(base, alpha)).records[:40]
    ax.plot([r.cycle for r in records], [r.offset_after for r in records],
            lw=1, label=f"alpha = {alpha}")
ax.set_xlabel("synchronization cycle")
ax.set_ylabel("offset [s]")
ax.legend()
ax.set_title("Gain sweep: contraction, deadbeat, sustained oscillation")
out = Path(__file__).parent / "figures"
out.mkdir(exist_ok=True)
fig.savefig(out / "04_stability_sweep.png", dpi=120, bbox_inches="tight")
print(f"\nfigure written to {out / '04_stability_sweep.png'}")
