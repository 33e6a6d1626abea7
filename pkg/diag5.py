from __future__ import annotations
import numpy as np
from pointline.catalog import entry_by_label
from pointline.equations import ConstraintSystem, encode
from pointline.monodromy import _seed_pair, _random_chart, _tangent, _newton, TrackerSettings

entry = entry_by_label("2111_1", m=3)
sig = entry.signature
rng = np.random.default_rng([7, sig.m, *entry.label.encode()])
enc = encode(entry, rng)
sys_ = ConstraintSystem(enc)
c0, y0 = _seed_pair(entry, sys_, rng)
y1 = _random_chart(rng, sys_.chart.dim)

ca = c0[None, :].astype(np.complex128)
t = 0.0
h = 5e-4
last_report = -1.0
while t < 1.0:
    hc = min(h, 1.0 - t)
    half = 0.5 * hc
    k1, _ = _tangent(sys_, ca, t, y0, y1)
    k2, _ = _tangent(sys_, ca + half * k1, t + half, y0, y1)
    k3, _ = _tangent(sys_, ca + half * k2, t + half, y0, y1)
    k4, _ = _tangent(sys_, ca + hc * k3, t + hc, y0, y1)
    pred = ca + (hc / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    corr, conv = _newton(sys_, pred, t + hc, y0, y1, 1e-9, 6)
    if not conv[0]:
        print(f"newton fail at t={t + hc:.4f}; halving", flush=True)
        h = hc * 0.5
        if h < 1e-8:
            print("dead", flush=True)
            break
        continue
    ca, t = corr, t + hc
    h = min(h * 1.2, 5e-3)
    if t - last_report > 0.02 or t > 0.999:
        y_t = (1 - t) * y0 + t * y1
        Jt = sys_.jacobian(ca[0], y_t, subset="track")
        Jf = sys_.jacobian(ca[0], y_t, subset="full")
        svt = np.linalg.svd(Jt, compute_uv=False)
        svf = np.linalg.svd(Jf, compute_uv=False)
        kap = sys_.kappas(ca[0])
        print(f"t={t:.4f} |C|={np.abs(ca).max():.2e} svmin_track={svt[-1]:.2e} svmin_full={svf[-1]:.2e} min|kappa|={np.abs(kap).min():.2e}", flush=True)
        last_report = t
print("end t=", t, flush=True)
