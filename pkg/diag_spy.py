import sys
import time

import numpy as np

import pointline.monodromy as M
from pointline.catalog import entry_by_label
from pointline.monodromy import StopPolicy, compute_degree

label = sys.argv[1]
m = int(sys.argv[2])
target = int(sys.argv[3])
budget = float(sys.argv[4])
seed = int(sys.argv[5]) if len(sys.argv) > 5 else 0


def spy(system, candidates, y0, solutions, settings, residual_tol, reproj_tol, dedup_tol):
    accepted = []
    rejected = 0
    kappa_floor = 1e-8
    for cand in candidates:
        if not np.isfinite(cand).all():
            rejected += 1
            print("REJ nonfinite", flush=True)
            continue
        if np.abs(cand).max() >= settings.divergence_bound:
            rejected += 1
            print(f"REJ big |c|={np.abs(cand).max():.3e}", flush=True)
            continue
        pool = solutions if not accepted else np.vstack([solutions] + accepted)
        if not M._is_novel(cand, pool, dedup_tol):
            d = M._pair_distance(pool, cand[None, :]).min()
            if d > 1e-9:
                print(f"DUP-BAND d={d:.3e}", flush=True)
            continue
        kmin = np.abs(system.kappas(cand)).min()
        res = system.scaled_residual(cand, y0, "full").max()
        if kmin <= kappa_floor:
            rejected += 1
            print(f"REJ kappa={kmin:.3e} res={res:.3e}", flush=True)
            continue
        stacks = system.seed_stacks_ok(cand, y0)
        try:
            reproj = M._reprojection_gap(system, cand, y0)
        except Exception:
            reproj = float("nan")
        if res >= residual_tol:
            rejected += 1
            print(f"REJ res={res:.3e} kappa={kmin:.3e} stacks={stacks} reproj={reproj:.3e}", flush=True)
            continue
        if not stacks:
            rejected += 1
            print(f"REJ stacks res={res:.3e} kappa={kmin:.3e} reproj={reproj:.3e}", flush=True)
            continue
        if reproj >= reproj_tol:
            rejected += 1
            print(f"REJ reproj={reproj:.3e} res={res:.3e} kappa={kmin:.3e}", flush=True)
            continue
        accepted.append(cand)
    return accepted, rejected


M._accept_candidates = spy

t0 = time.time()
entry = entry_by_label(label, m=m)
rep = compute_degree(entry, seed=seed, stop=StopPolicy(target=target, stall_loops=60, wall_time=budget))
for r in rep.loops:
    print(f"loop {r.loop}: tracked={r.tracked} survived={r.survived} new={r.new_found} "
          f"total={r.total_after} [{r.seconds:.1f}s]", flush=True)
print(f"degree={rep.degree} stop={rep.stop_reason} fail={rep.path_failures} "
      f"rej={rep.rejected} [{time.time()-t0:.1f}s]", flush=True)
