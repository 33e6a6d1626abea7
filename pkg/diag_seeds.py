import sys
import time

from pointline.catalog import entry_by_label
from pointline.monodromy import StopPolicy, compute_degree

label = sys.argv[1]
m = int(sys.argv[2])
target = int(sys.argv[3])
budget = float(sys.argv[4]) if len(sys.argv) > 4 else 600.0
entry = entry_by_label(label, m=m)
for seed in [int(s) for s in sys.argv[5].split(",")] if len(sys.argv) > 5 else [0, 1, 2]:
    t0 = time.time()
    rep = compute_degree(entry, seed=seed, stop=StopPolicy(target=target, stall_loops=60, wall_time=budget))
    dt = time.time() - t0
    if "-v" in sys.argv:
        for r in rep.loops:
            print(f"  loop {r.loop}: tracked={r.tracked} new={r.new_found} "
                  f"total={r.total_after} [{r.seconds:.1f}s]", flush=True)
    print(
        f"{label} seed={seed}: degree={rep.degree} stop={rep.stop_reason} loops={len(rep.loops)} "
        f"fail={rep.path_failures} rej={rep.rejected} [{dt:.1f}s]",
        flush=True,
    )
