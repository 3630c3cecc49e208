"""
Learning the AP count from raw energy
=====================================

The energy readings are cut into overlapping chunks of w samples (stride
w/4), standardized with train-only statistics, and fed to a small fully
convolutional network.  A 4-class model is trained here in about a minute
with a narrow FCN; the full 128/256/128 network is what the acceptance run
trains.

Run:  python3 demos/02_learn_from_energy.py
"""

import numpy as np

from coexlab.bench import fixed_distance_maker, ml_dataset, simulate_classes, train_ml
from coexlab.nn import TrainConfig, evaluate

W = 128
traces = simulate_classes(fixed_distance_maker(), range(4), seed=3, duration_s=80.0)
data = ml_dataset(traces, W, seed=0)
print(f"{len(data.x_train)} train / {len(data.x_test)} test chunks, "
      f"mu={data.stats.mu:.1f} dBm sigma={data.stats.sigma:.1f} dB, {data.n_clipped} outliers clipped")

model = train_ml(data, 4, W, filters=(16, 32, 16), cfg=TrainConfig.adam(epochs=10, seed=0))
loss, acc = evaluate(model, data.x_test, data.y_test)
print(f"test loss {loss:.3f}, accuracy {acc:.3f}")

pred = model.predict(data.x_test)
conf = np.zeros((4, 4), dtype=int)
np.add.at(conf, (data.y_test, pred), 1)
print("confusion (rows = true AP count):")
print(conf)

# restricting the argmax answers the 2-class question with the same model
sel = np.isin(data.y_test, [1, 2])
print("1-vs-2 APs:", np.mean(model.predict(data.x_test[sel], [1, 2]) == data.y_test[sel]).round(3))
