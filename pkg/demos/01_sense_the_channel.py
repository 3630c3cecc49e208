"""
Counting Wi-Fi APs from an LTE-U small cell
===========================================

An LTE-U cell only hears the air during its OFF phases.  This script
simulates a few stationary scenes (0 to 3 APs at 6 ft, NLOS), then asks the
three classic detectors how many APs are around:

* HD decodes beacon headers and counts BSSIDs per 0.512 s slot,
* ED averages the energy readings over 1 s and bins them,
* AC counts preamble correlation hits per 1 s.

Run:  python3 demos/01_sense_the_channel.py
"""

import numpy as np

from coexlab import presets
from coexlab.bench import detector_accuracy, fixed_distance_maker, simulate_classes
from coexlab.detectors import hd_detect

make = fixed_distance_maker(6.0, "NLOS")
traces = simulate_classes(make, range(4), seed=1, duration_s=60.0)

# what the cell sees: energy samples during OFF only
for n, (tr,) in traces.items():
    print(f"{n} APs: {len(tr.energy_t):5d} samples, mean {tr.energy_dbm.mean():6.1f} dBm, "
          f"{len(tr.beacon_t):4d} beacons")

# header decoding is exact when every beacon is heard
tr = traces[3][0]
print("HD counts over the first 2 s:", hd_detect(tr.beacons, t_end=2.048).value.tolist())

# ED and AC thresholds are fit on even windows and scored on the odd ones
acc = detector_accuracy(traces, ks=(2, 3, 4), class_sets={2: [1, 2], 3: [0, 1, 2], 4: [0, 1, 2, 3]})
print("\nk   HD     ED     AC")
for k, row in acc.items():
    print(f"{k}  " + "  ".join(f"{row[d]:.3f}" for d in ("HD", "ED", "AC")))
print("\nclass sets used:", {k: presets.class_set(k) for k in (2, 3, 4)})
