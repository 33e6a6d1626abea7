from __future__ import annotations
import numpy as np
from pointline.catalog import entry_by_label
from pointline.equations import ConstraintSystem, encode
from pointline.monodromy import _seed_pair, _random_chart, _tangent, _newton, _solve_normal, TrackerSettings

entry = entry_by_label("2111_1", m=3)
sig = entry.signature
rng = np.random.default_rng([7, sig.m, *entry.label.encode()])
enc = encode(entry, rng)
sys_ = ConstraintSystem(enc)
c0, y0 = _seed_pair(entry, sys_, rng)
y1 = _random_chart(rng, sys_.chart.dim)
st = TrackerSettings()

# fast-forward to the trouble zone with a crude tracker at loose tol
ca = c0[None, :].astype(np.complex128)
t, h = 0.0, 0.01
while t < 0.684:
    hc = min(h, 0.684 - t)
    half = 0.5 * hc
    k1, _ = _tangent(sys_, ca, t, y0, y1)
    k2, _ = _tangent(sys_, ca + half * k1, t + half, y0, y1)
    k3, _ = _tangent(sys_, ca + half * k2, t + half, y0, y1)
    k4, _ = _tangent(sys_, ca + hc * k3, t + hc, y0, y1)
    pred = ca + (hc / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    corr, conv = _newton(sys_, pred, t + hc, y0, y1, 1e-6, 8)
    if conv[0]:
        ca, t = corr, t + hc
    else:
        h = hc * 0.5
        if h < 1e-9:
            print("crude tracker stuck at", t, flush=True)
            break

print("reached t =", t, flush=True)
# now examine Newton behavior at t ~ 0.6864 and J conditioning on the curve
for tt in (0.685, 0.686, 0.6864, 0.687, 0.689, 0.695, 0.71):
    # walk slowly to tt
    while t < tt - 1e-12:
        hc = min(0.0005, tt - t)
        half = 0.5 * hc
        k1, _ = _tangent(sys_, ca, t, y0, y1)
        k2, _ = _tangent(sys_, ca + half * k1, t + half, y0, y1)
        k3, _ = _tangent(sys_, ca + half * k2, t + half, y0, y1)
        k4, _ = _tangent(sys_, ca + hc * k3, t + hc, y0, y1)
        pred = ca + (hc / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        corr, conv = _newton(sys_, pred, t + hc, y0, y1, 1e-5, 10)
        ca, t = corr, t + hc
    f, jac, _ = sys_.tangent_eval(ca, t, y0, y1)
    sv = np.linalg.svd(jac[0], compute_uv=False)
    # newton iteration trace at this point
    cc = ca.copy()
    steps = []
    for it in range(8):
        ff, jj, _ = sys_.tangent_eval(cc, t, y0, y1)
        d, bad = _solve_normal(jj, -ff)
        cc = cc + d
        steps.append(float(np.abs(d).max()))
    print(f"t={t:.4f} |C|={np.abs(ca).max():.3e} sv_min={sv[-1]:.3e} cond={sv[0]/sv[-1]:.2e} newton_steps={['%.1e' % s for s in steps]}", flush=True)
