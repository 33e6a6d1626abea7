import time

import numpy as np

import pointline.monodromy as M
from pointline.catalog import entry_by_label
from pointline.equations import ConstraintSystem, encode
from pointline.monodromy import StopPolicy, TrackerSettings, compute_degree, track_segment


def profile(system, sols, y0, tag):
    print(f"--- {tag}: {len(sols)} solutions", flush=True)
    for i, c in enumerate(sols):
        kmin = np.abs(system.kappas(c)).min()
        res = system.scaled_residual(c, y0, "full").max()
        d = 1e9
        for j, o in enumerate(sols):
            if j != i:
                d = min(d, M._pair_distance(o[None, :], c[None, :])[0])
        print(f"  sol {i:2d}: min|kappa|={kmin:.3e} res={res:.2e} nearest={d:.3e} |c|={np.abs(c).max():.3f}",
              flush=True)


entry = entry_by_label("2111_1", m=3)
rng = np.random.default_rng([0, 3, *b"2111_1"])
system = ConstraintSystem(encode(entry, rng))

t0 = time.time()
rep = compute_degree(entry, seed=0, system=system)
print(f"regen: degree={rep.degree} stop={rep.stop_reason} [{time.time()-t0:.1f}s]", flush=True)
sols = rep.solutions
y0 = rep.chart_point
np.savez("/tmp/sols_2111_seed0.npz", sols=sols, y0=y0)
profile(system, sols, y0, "found set")

# ultra-generous hunt for anything novel
hunt_rng = np.random.default_rng(777)
st = TrackerSettings(
    min_step=1e-10,
    max_newton_iters=10,
    max_path_steps=8000,
    max_iterations=2_000_000,
    tube_min_step=np.inf,
)
t0 = time.time()
known = sols.copy()
for loop in range(1, 41):
    y1 = M._random_chart(hunt_rng, system.chart.dim)
    y2 = M._random_chart(hunt_rng, system.chart.dim)
    cur, ok1 = track_segment(system, known, y0, y1, st)
    cur2, ok2 = track_segment(system, cur[ok1], y1, y2, st)
    cur3, ok3 = track_segment(system, cur2[ok2], y2, y0, st)
    finals = cur3[ok3]
    accepted, rejected = M._accept_candidates(
        system, finals, y0, known, st, 1e-9, 1e-8, 1e-6
    )
    print(f"hunt loop {loop}: survived={len(finals)}/{len(known)} new={len(accepted)} "
          f"rej={rejected} [{time.time()-t0:.1f}s]", flush=True)
    if accepted:
        fresh = np.vstack(accepted)
        profile(system, fresh, y0, f"NOVEL at loop {loop}")
        known = np.vstack([known, fresh])
        np.savez("/tmp/sols_2111_seed0.npz", sols=known, y0=y0)
        if len(known) >= 40:
            print("reached 40", flush=True)
            break
print(f"hunt done: total={len(known)} [{time.time()-t0:.1f}s]", flush=True)
