import sys
import time

from pointline.catalog import entry_by_label
from pointline.monodromy import StopPolicy, compute_degree

cases = [
    ("3200_3", 2, 12),
    ("5000_2", 2, 20),
    ("4100_3", 2, 16),
    ("3100_0", 3, 64),
    ("2111_1", 3, 40),
]
if len(sys.argv) > 1:
    sel = sys.argv[1].split(",")
    cases = [c for c in cases if c[0] in sel]

for label, m, want in cases:
    t0 = time.time()
    entry = entry_by_label(label, m=m)
    rep = compute_degree(entry, seed=0)
    dt = time.time() - t0
    lt = sum(r.seconds for r in rep.loops) / max(1, len(rep.loops))
    print(
        f"{label}: degree={rep.degree} (want {want}) stop={rep.stop_reason} "
        f"loops={len(rep.loops)} avg_loop={lt:.2f}s fail={rep.path_failures} "
        f"rej={rep.rejected} [{dt:.1f}s]",
        flush=True,
    )
