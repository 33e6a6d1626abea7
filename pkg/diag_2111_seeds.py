import sys
import time

from pointline.catalog import entry_by_label
from pointline.monodromy import StopPolicy, compute_degree

entry = entry_by_label("2111_1", m=3)
for seed in [int(s) for s in sys.argv[1].split(",")]:
    t0 = time.time()
    rep = compute_degree(entry, seed=seed, stop=StopPolicy(target=40, stall_loops=60, wall_time=600.0))
    dt = time.time() - t0
    found_at = None
    for r in rep.loops:
        if r.total_after >= 40:
            found_at = r.loop
            break
    print(
        f"seed={seed}: degree={rep.degree} stop={rep.stop_reason} loops={len(rep.loops)} "
        f"found_at={found_at} fail={rep.path_failures} rej={rep.rejected} [{dt:.1f}s]",
        flush=True,
    )
