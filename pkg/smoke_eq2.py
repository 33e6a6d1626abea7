import numpy as np

from pointline import algebra
from pointline.catalog import entry_by_label
from pointline.equations import ConstraintSystem, _PolyRing, _ring_walk, encode
from pointline.scene import sample_instance

P = 32749

for label, m in [("3200_3", 2), ("2111_1", 3), ("2013_2", 3)]:
    entry = entry_by_label(label, m=m)
    rng = np.random.default_rng(3)
    enc = encode(entry, rng)
    sys_ = ConstraintSystem(enc)
    n, d = sys_.n_unknowns, sys_.chart.dim

    # 1. ring walk over Z_p vs vectorized evaluation at random points
    ring = algebra.PrimeRing(P)
    for trial in range(3):
        cv = [int(x) for x in rng.integers(0, P, n)]
        yv = [int(x) for x in rng.integers(0, P, d)]
        for subset in ("track", "full"):
            walked = np.array(_ring_walk(sys_, ring, cv, yv, subset))
            fast = sys_.residual(np.array(cv), np.array(yv), P, subset)
            assert np.array_equal(walked % P, fast % P), (label, subset, trial)

    # 2. polynomial export evaluates identically (track subset)
    polys = sys_.polynomials("track")
    cv = [int(x) for x in rng.integers(0, P, n)]
    yv = [int(x) for x in rng.integers(0, P, d)]
    pv = np.array([p.evaluate(cv + yv, P) for p in polys])
    fast = sys_.residual(np.array(cv), np.array(yv), P, "track")
    assert np.array_equal(pv % P, fast % P), label

    # 3. complex comparison ring walk vs vectorized
    crng = np.random.default_rng(5)
    cz = crng.normal(size=n) + 1j * crng.normal(size=n)
    yz = crng.normal(size=d) + 1j * crng.normal(size=d)

    class _CRing:
        modulus = None

        @staticmethod
        def const(c):
            return complex(c)

        @staticmethod
        def add(a, b):
            return a + b

        @staticmethod
        def sub(a, b):
            return a - b

        @staticmethod
        def mul(a, b):
            return a * b

        @staticmethod
        def neg(a):
            return -a

    walked = np.array(_ring_walk(sys_, _CRing, list(cz), list(yz), "full", normalize_ghosts=True))
    fast = sys_.residual(cz, yz, None, "full")
    scale = np.abs(walked).max()
    assert np.abs(walked - fast).max() < 1e-9 * scale, label

    # 4. jacobian vs finite differences (complex)
    jac = sys_.jacobian(cz, yz, None, "track")
    f0 = sys_.residual(cz, yz, None, "track")
    h = 1e-7
    for i in range(0, n, max(1, n // 4)):
        czp = cz.copy()
        czp[i] += h
        fd = (sys_.residual(czp, yz, None, "track") - f0) / h
        err = np.abs(fd - jac[:, i]).max() / max(1.0, np.abs(jac[:, i]).max())
        assert err < 1e-5, (label, i, err)

    # 5. tangent_eval: t=0 matches residual/jacobian; Ft matches FD
    yb = crng.normal(size=d) + 1j * crng.normal(size=d)
    C2 = np.stack([cz, cz + 0.01])
    t = np.array([0.0, 0.3])
    F, Jc, Ft = sys_.tangent_eval(C2, t, yz, yb)
    assert np.abs(F[0] - f0).max() < 1e-12 * max(1.0, np.abs(f0).max())
    assert np.abs(Jc[0] - jac).max() < 1e-12 * max(1.0, np.abs(jac).max())
    ya2 = yz + 0.3 * (yb - yz)
    f03 = sys_.residual(C2[1], ya2, None, "track")
    assert np.abs(F[1] - f03).max() < 1e-10 * max(1.0, np.abs(f03).max())
    fd_t = (
        sys_.residual(C2[1], yz + (0.3 + h) * (yb - yz), None, "track") - f03
    ) / h
    errt = np.abs(fd_t - Ft[1]).max() / max(1.0, np.abs(Ft[1]).max())
    assert errt < 1e-5, (label, errt)

    # 6. batched residual equals per-item residual
    Cb = crng.normal(size=(4, n)) + 1j * crng.normal(size=(4, n))
    fb = sys_.residual(Cb, yz, None, "full")
    for i in range(4):
        fi = sys_.residual(Cb[i], yz, None, "full")
        assert np.abs(fb[i] - fi).max() < 1e-12 * max(1.0, np.abs(fi).max())

    print(f"{label}: ring walk, poly export, AD, tangent, batching all agree")

ent = entry_by_label("3200_3", m=2)
rng = np.random.default_rng(0)
sys_ = ConstraintSystem(encode(ent, rng))
text = sys_.export_text("track")
print("--- export sample (first 6 lines) ---")
print("\n".join(text.splitlines()[:6]))
