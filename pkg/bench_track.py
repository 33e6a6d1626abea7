import time

import numpy as np

from pointline.catalog import entry_by_label
from pointline.equations import ConstraintSystem, encode
from pointline.monodromy import TrackerSettings, _seed_pair, track_segment

entry = entry_by_label("3200_3", m=2)
rng = np.random.default_rng(7)
sys_ = ConstraintSystem(encode(entry, rng))

c0, y0 = _seed_pair(entry, sys_, np.random.default_rng(1))
B = 12
C = np.tile(c0, (B, 1))
t = np.zeros(B)
dim = sys_.chart.dim
y1 = (rng.normal(size=dim) + 1j * rng.normal(size=dim)) / np.sqrt(2)

t0 = time.time()
for _ in range(50):
    F, J, Ft = sys_.tangent_eval(C, t, y0, y1)
dt = (time.time() - t0) / 50
print(f"tangent_eval B={B}: {dt * 1000:.2f} ms, F shape {F.shape}")

t0 = time.time()
end, ok = track_segment(sys_, C[:1], y0, y1)
print(f"track 1 path: {time.time() - t0:.2f}s ok={ok}")

t0 = time.time()
end, ok = track_segment(sys_, C, y0, y1)
print(f"track {B} paths: {time.time() - t0:.2f}s ok={ok.sum()}/{B}")
