"""
Adapting the duty cycle when a second AP shows up
=================================================

A second AP switches on at 20 s.  A small model trained on the delay
placement streams the energy readings, each new class is confirmed by a
second agreeing decision, and the cell moves from the 1-AP duty (50 %) to
the 2-AP fair share (1/3).  The model here is trained for only 10 epochs,
so after the change it still flips back to 1 AP now and then; the debounce
removes single stray decisions but not runs of two.  The detection delays of
HD, ED, AC and the model are printed at the end.

Run:  python3 demos/04_closed_loop.py   (about half a minute)
"""

import numpy as np

from coexlab import presets
from coexlab.bench import SuiteRun, arrival_delays, build_delay_kit
from coexlab.runtime import run_closed_loop
from coexlab.sim import CoexistenceSimulator

kit = build_delay_kit(seed=0, run=SuiteRun(duration_s=100.0, w=512, epochs=10))

cfg = presets.arrival_scenario(seed=11, duration_s=40.0, change_s=20.0)
sim = CoexistenceSimulator(cfg)
rows = run_closed_loop(sim, kit.model, cfg.duration_s, initial=1)
last = None
for t, c, duty in rows:
    if duty != last:
        print(f"t={t:6.2f} s  class {c}  duty -> {duty:.3f}")
        last = duty

delays = arrival_delays(kit, seeds=range(3))
for name, d in delays.items():
    print(f"{name}: mean delay {np.mean(d):.2f} s over {len(d)} arrivals")
