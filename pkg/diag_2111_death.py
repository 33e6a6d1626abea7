import numpy as np

import pointline.monodromy as M
from pointline.catalog import entry_by_label
from pointline.equations import ConstraintSystem, encode
from pointline.monodromy import TrackerSettings

d = np.load("/tmp/sols_2111_seed0.npz")
sols, y0 = d["sols"], d["y0"]
entry = entry_by_label("2111_1", m=3)
rng = np.random.default_rng([0, 3, *b"2111_1"])
system = ConstraintSystem(encode(entry, rng))

print("y0 scale:", np.abs(y0).min(), np.abs(y0).max(), flush=True)

hunt = np.random.default_rng(777)
y1 = M._random_chart(hunt, system.chart.dim)


def track_with_autopsy(system, c_start, ya, yb, st):
    c_cur = np.array(np.atleast_2d(c_start), dtype=np.complex128)
    npaths = c_cur.shape[0]
    t = np.zeros(npaths)
    h = np.full(npaths, st.initial_step)
    ok = np.ones(npaths, dtype=bool)
    done = np.zeros(npaths, dtype=bool)
    streak = np.zeros(npaths, dtype=int)
    attempts = np.zeros(npaths, dtype=int)
    while True:
        active = ok & ~done
        if not active.any():
            break
        idx = np.flatnonzero(active)
        hc = np.minimum(h[idx], 1.0 - t[idx])
        ca, ta = c_cur[idx], t[idx]
        half = 0.5 * hc
        k1, b1 = M._tangent(system, ca, ta, ya, yb)
        k2, b2 = M._tangent(system, ca + half[:, None] * k1, ta + half, ya, yb)
        k3, b3 = M._tangent(system, ca + half[:, None] * k2, ta + half, ya, yb)
        k4, b4 = M._tangent(system, ca + hc[:, None] * k3, ta + hc, ya, yb)
        pred = ca + (hc / 6.0)[:, None] * (k1 + 2.0 * (k2 + k3) + k4)
        corr, conv = M._newton(system, pred, ta + hc, ya, yb, st.newton_tol, st.max_newton_iters)
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
        attempts[idx] += 1
        capped = idx[attempts[idx] >= st.max_path_steps]
        ok[capped] &= done[capped]
    return c_cur, t, ok, done, attempts


st = TrackerSettings()


def autopsy_segment(tag, starts, ya, yb):
    c_end, t_end, ok, done, att = track_with_autopsy(system, starts, ya, yb, st)
    dead = np.flatnonzero(~(ok & done))
    for i in dead:
        c = c_end[i]
        ti = t_end[i]
        y_t = (1 - ti) * ya + ti * yb
        _, jac, _ = system.tangent_eval(c[None, :], np.array([ti]), ya, yb)
        sv = np.linalg.svd(jac[0], compute_uv=False)
        res = system.scaled_residual(c, y_t, "track").max()
        kmin = np.abs(system.kappas(c)).min()
        print(f"  {tag} path {i:2d}: died t={ti:.6f} att={att[i]} res={res:.2e} "
              f"sv_min={sv.min():.3e} sv_ratio={sv.min()/sv.max():.3e} "
              f"kappa={kmin:.3e} |c|={np.abs(c).max():.2f}", flush=True)
    alive = ok & done
    return c_end[alive], len(dead)


total_dead = 0
for loop in range(1, 7):
    y1 = M._random_chart(hunt, system.chart.dim)
    y2 = M._random_chart(hunt, system.chart.dim)
    print(f"loop {loop}:", flush=True)
    cur, d1 = autopsy_segment("seg1", sols, y0, y1)
    cur, d2 = autopsy_segment("seg2", cur, y1, y2)
    cur, d3 = autopsy_segment("seg3", cur, y2, y0)
    total_dead += d1 + d2 + d3
    print(f"  deaths {d1}+{d2}+{d3}, {len(cur)} arrived", flush=True)
print(f"total deaths over 6 loops: {total_dead}", flush=True)
