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

# verbatim copy of track_segment with prints
c_cur = np.array(np.atleast_2d(c0), dtype=np.complex128)
npaths = c_cur.shape[0]
t = np.zeros(npaths)
h = np.full(npaths, st.initial_step)
ok = np.ones(npaths, dtype=bool)
done = np.zeros(npaths, dtype=bool)
streak = np.zeros(npaths, dtype=int)
iterations = 0
nprint = 0
while True:
    active = ok & ~done
    if not active.any():
        break
    iterations += 1
    if iterations > st.max_iterations:
        ok[active] = False
        print("KILL: max_iterations", flush=True)
        break
    idx = np.flatnonzero(active)
    hc = np.minimum(h[idx], 1.0 - t[idx])
    ca, ta = c_cur[idx], t[idx]
    half = 0.5 * hc
    k1, b1 = _tangent(sys_, ca, ta, y0, y1)
    k2, b2 = _tangent(sys_, ca + half[:, None] * k1, ta + half, y0, y1)
    k3, b3 = _tangent(sys_, ca + half[:, None] * k2, ta + half, y0, y1)
    k4, b4 = _tangent(sys_, ca + hc[:, None] * k3, ta + hc, y0, y1)
    pred = ca + (hc / 6.0)[:, None] * (k1 + 2.0 * (k2 + k3) + k4)
    corr, conv = _newton(sys_, pred, ta + hc, y0, y1, st.newton_tol, st.max_newton_iters)
    with np.errstate(invalid="ignore"):
        norm = np.abs(corr).max(axis=-1)
        good = conv & ~(b1 | b2 | b3 | b4) & np.isfinite(corr).all(axis=-1) & (norm < st.divergence_bound)
    gi = idx[good]
    c_cur[gi] = corr[good]
    t[gi] = ta[good] + hc[good]
    done[gi] = t[gi] >= 1.0 - 1e-12
    streak[gi] += 1
    grown = gi[streak[gi] >= st.grow_after]
    h[grown] = np.minimum(h[grown] * st.step_factor, st.max_step)
    streak[grown] = 0
    bi = idx[~good]
    h[bi] = hc[~good] * 0.5
    streak[bi] = 0
    ok[bi] = h[bi] >= st.min_step
    if len(bi) and not ok[bi].all():
        print(f"KILL at iter {iterations}: t={t[bi]}, h={h[bi]}", flush=True)
    if iterations % 100 == 0:
        print(f"iter {iterations}: t={t[0]:.5f} h={h[0]:.2e} ok={ok[0]} done={done[0]}", flush=True)
print("final:", "iterations=", iterations, "t=", t, "ok=", ok, "done=", done, flush=True)
