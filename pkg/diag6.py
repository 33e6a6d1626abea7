from __future__ import annotations
import time
import numpy as np
from pointline.catalog import entry_by_label
from pointline.equations import ConstraintSystem, encode
from pointline.monodromy import _seed_pair, _random_chart, track_segment, TrackerSettings

entry = entry_by_label("2111_1", m=3)
sig = entry.signature
rng = np.random.default_rng([7, sig.m, *entry.label.encode()])
enc = encode(entry, rng)
sys_ = ConstraintSystem(enc)
c0, y0 = _seed_pair(entry, sys_, rng)

for name, st in (
    ("tight  (tol 1e-11, it4)", TrackerSettings()),
    ("loose  (tol 1e-9,  it6)", TrackerSettings(newton_tol=1e-9, max_newton_iters=6)),
    ("looser (tol 1e-8,  it6)", TrackerSettings(newton_tol=1e-8, max_newton_iters=6)),
):
    rng2 = np.random.default_rng(1234)
    surv = 0
    valid = 0
    t0 = time.time()
    for k in range(8):
        y1 = _random_chart(rng2, sys_.chart.dim)
        cs, okm = track_segment(sys_, c0[None, :], y0, y1, st)
        if okm[0]:
            surv += 1
            r = float(np.max(sys_.scaled_residual(cs[0], y1)))
            if r < 1e-9:
                valid += 1
    print(f"{name}: survived {surv}/8, valid {valid}/8, {time.time()-t0:.1f}s", flush=True)
