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
st = TrackerSettings()

ca = c0[None, :].astype(np.complex128)
t, h = 0.0, st.initial_step
n_fail = 0
while t < 1.0 and n_fail < 60:
    hc = min(h, 1.0 - t)
    half = 0.5 * hc
    k1, b1 = _tangent(sys_, ca, t, y0, y1)
    k2, b2 = _tangent(sys_, ca + half * k1, t + half, y0, y1)
    k3, b3 = _tangent(sys_, ca + half * k2, t + half, y0, y1)
    k4, b4 = _tangent(sys_, ca + hc * k3, t + hc, y0, y1)
    pred = ca + (hc / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    corr, conv = _newton(sys_, pred, t + hc, y0, y1, st.newton_tol, st.max_newton_iters)
    bad_t = bool((b1 | b2 | b3 | b4)[0])
    if conv[0] and not bad_t:
        ca, t = corr, t + hc
        print(f"step ok  t={t:.4f} h={hc:.2e} |C|={np.abs(ca).max():.3e}", flush=True)
    else:
        n_fail += 1
        # report why
        f, jac, _ = sys_.tangent_eval(pred, t + hc, y0, y1)
        sv = np.linalg.svd(jac[0], compute_uv=False)
        print(f"step FAIL t={t:.4f} h={hc:.2e} bad_tan={bad_t} conv={bool(conv[0])} "
              f"|F(pred)|={np.abs(f).max():.2e} sv_min={sv[-1]:.2e} sv_max={sv[0]:.2e}", flush=True)
        h = hc * 0.5
        if h < st.min_step:
            print("DEAD: h below min_step", flush=True)
            break
        continue
    if t >= 1.0 - 1e-12:
        print("REACHED END", flush=True)
        break
