from __future__ import annotations
import numpy as np
from pointline.catalog import entry_by_label
from pointline.equations import ConstraintSystem, encode
from pointline.monodromy import _seed_pair, _random_chart, TrackerSettings, track_segment

entry = entry_by_label("2111_1", m=3)
sig = entry.signature
rng = np.random.default_rng([7, sig.m, *entry.label.encode()])
enc = encode(entry, rng)
sys_ = ConstraintSystem(enc)
print("n_unknowns:", sys_.n_unknowns, "n_full:", sys_.n_full, "n_track:", sys_.n_track, flush=True)

c0, y0 = _seed_pair(entry, sys_, rng)
print("c0 shape:", c0.shape, "y0 shape:", y0.shape, flush=True)
F, J = sys_.residual_and_jacobian(c0, y0, subset="track")
print("seed |F| max:", np.abs(F).max(), flush=True)
sv = np.linalg.svd(J, compute_uv=False)
print("J_track sv: max=%.3e min=%.3e cond=%.3e" % (sv[0], sv[-1], sv[0] / sv[-1]), flush=True)

Ff = sys_.residual(c0, y0, subset="full")
print("seed full |F| max:", np.abs(Ff).max(), flush=True)

y1 = _random_chart(rng, sys_.chart.dim)
F0, Jc, Jt = sys_.tangent_eval(c0[None, :], 0.0, y0, y1, subset="track")
sv2 = np.linalg.svd(Jc[0], compute_uv=False)
print("Jc sv at t=0: max=%.3e min=%.3e" % (sv2[0], sv2[-1]), flush=True)

st = TrackerSettings()
res = track_segment(sys_, c0[None, :], y0, y1, st)
cs, ok = res
print("ok:", ok, flush=True)
