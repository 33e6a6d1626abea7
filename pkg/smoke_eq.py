import time

import numpy as np

from pointline import algebra
from pointline.catalog import entry_by_label
from pointline.equations import ConstraintSystem, encode, _ring_walk
from pointline.scene import sample_instance

P = 32749

LABELS = [
    ("5000_2", 2, True),
    ("3200_3", 2, True),
    ("2013_2", 3, True),
    ("2111_1", 3, True),
    ("2005_5", 3, True),
    ("1021_1", 6, True),
    ("2300_5", 2, False),
    ("2201_1", 3, False),
    ("1013_3", 6, False),
    ("3200_4", 2, False),
]

for label, m, minimal in LABELS:
    entry = entry_by_label(label, m=m)
    rng = np.random.default_rng(7)
    enc = encode(entry, rng)
    sys_ = ConstraintSystem(enc)
    n = sys_.n_unknowns

    def accept(inst):
        return sys_.seed_stacks_ok(inst.cameras.params(), inst.chart_point, P)

    t0 = time.time()
    inst = sample_instance(entry, rng, P, accept=accept)
    C = inst.cameras.params()
    y = inst.chart_point
    f_full = sys_.residual(C, y, P, "full")
    f_track = sys_.residual(C, y, P, "track")
    assert f_full.shape[-1] == sys_.n_full
    assert f_track.shape[-1] == sys_.n_track
    ok_full = not np.any(f_full % P)
    ok_track = not np.any(f_track % P)
    jt = sys_.jacobian(C, y, P, "track")
    jf = sys_.jacobian(C, y, P, "full")
    rt = algebra.matrix_rank(jt, modulus=P)
    rf = algebra.matrix_rank(jf, modulus=P)
    verdict = rt == n
    dt = time.time() - t0

    # complex seed
    rngc = np.random.default_rng(11)
    instc = sample_instance(
        entry,
        rngc,
        None,
        accept=lambda i: sys_.seed_stacks_ok(i.cameras.params(), i.chart_point),
    )
    sr = sys_.scaled_residual(instc.cameras.params(), instc.chart_point, "full")
    print(
        f"{label} m={m} n={n} full={sys_.n_full} track={sys_.n_track} "
        f"res0 mod p: full={ok_full} track={ok_track} "
        f"rank(track)={rt} rank(full)={rf} minimal? {verdict} (expect {minimal}) "
        f"cx scaled res max={sr.max():.2e} [{dt:.2f}s]"
    )
    assert ok_full and ok_track, label
    assert rt == rf, (label, rt, rf)
    assert verdict == minimal, (label, rt, n)
    assert sr.max() < 1e-10, (label, sr.max())

print("all seed checks passed")
