from __future__ import annotations

import numpy as np
import pytest

from pointline.algebra import DEFAULT_PRIMES, ComplexRing, PrimeRing
from pointline.equations import ConstraintSystem, _ring_walk, encode
from pointline.scene import sample_instance

ORACLE_LABELS = ["5000_2", "3200_3", "2103_1", "1040_0", "2111_1", "3100_0", "1013_3"]


def _system(by_label, label):
    entry = by_label[label]
    rng = np.random.default_rng([17, entry.signature.m, *label.encode()])
    return ConstraintSystem(encode(entry, rng))


def test_every_point_meets_two_lines_everywhere(catalog39):
    for entry in catalog39:
        rng = np.random.default_rng(0)
        enc = encode(entry, rng)
        for pt, ids in enumerate(enc.incident):
            assert len(ids) >= 2, (entry.label, pt)
        # ghosts appear only where visible lines fall short
        visible = set(enc.visible_ids())
        for pt, ids in enumerate(enc.incident):
            n_vis = sum(1 for j in ids if j in visible)
            n_ghost = sum(1 for j in ids if j not in visible)
            assert n_ghost == max(0, 2 - n_vis)


def test_two_view_systems_have_line_blocks_but_no_line_minors(by_label):
    sys_ = _system(by_label, "3200_3")
    assert sys_.m == 2
    # the blocks exist (they feed the rank-2 nondegeneracy check) but a
    # two-plane stack can never violate rank <= 2, so no minors are emitted
    assert len(sys_.lc_blocks) > 0
    assert len(sys_._lc_full_cols) == 0
    assert sys_.n_full == len(sys_._cp_full)


def test_block_shapes(by_label):
    sys_ = _system(by_label, "2103_1")
    assert sys_.n_unknowns == 11
    assert len(sys_.cp_blocks) == sys_.encoding.entry.incidence.p
    assert len(sys_.lc_blocks) == len(sys_.encoding.visible_ids())


@pytest.mark.parametrize("label", ORACLE_LABELS)
@pytest.mark.parametrize("subset", ["track", "full"])
def test_ring_walk_oracle_mod_p(label, subset, by_label):
    entry = by_label[label]
    sys_ = _system(by_label, label)
    p = DEFAULT_PRIMES[0]
    rng = np.random.default_rng(100)
    c = rng.integers(0, p, size=sys_.n_unknowns)
    y = rng.integers(0, p, size=sys_.chart.dim)
    fast = sys_.residual(c, y, modulus=p, subset=subset)
    slow = _ring_walk(sys_, PrimeRing(p), list(c), list(y), subset)
    assert np.array_equal(np.asarray(fast) % p, np.asarray(slow) % p)


@pytest.mark.parametrize("label", ORACLE_LABELS)
def test_ring_walk_oracle_complex(label, by_label):
    sys_ = _system(by_label, label)
    rng = np.random.default_rng(101)
    c = rng.standard_normal(sys_.n_unknowns) + 1j * rng.standard_normal(sys_.n_unknowns)
    y = rng.standard_normal(sys_.chart.dim) + 1j * rng.standard_normal(sys_.chart.dim)
    fast = sys_.residual(c, y, subset="full")
    slow = np.array(
        _ring_walk(sys_, ComplexRing(), list(c), list(y), "full", normalize_ghosts=True)
    )
    scale = np.abs(slow).max() + 1.0
    assert np.abs(fast - slow).max() < 1e-9 * scale


@pytest.mark.parametrize("label", ["5000_2", "2103_1", "2111_1"])
def test_polynomial_export_matches_residual(label, by_label):
    sys_ = _system(by_label, label)
    p = DEFAULT_PRIMES[2]
    polys = sys_.polynomials("track")
    rng = np.random.default_rng(102)
    c = rng.integers(0, p, size=sys_.n_unknowns)
    y = rng.integers(0, p, size=sys_.chart.dim)
    vals = list(c) + list(y)
    res = sys_.residual(c, y, modulus=p, subset="track")
    assert len(polys) == len(res)
    for poly, want in zip(polys, res):
        assert poly.evaluate(vals, modulus=p) == int(want) % p


def test_export_text_labels_variables(by_label):
    sys_ = _system(by_label, "5000_2")
    text = sys_.export_text("track")
    assert "c1" in text and "y1" in text
    assert len(text.splitlines()) > len(sys_.polynomials("track"))


@pytest.mark.parametrize("label", ["5000_2", "2103_1", "2111_1", "1040_0"])
def test_jacobian_matches_finite_differences(label, by_label):
    sys_ = _system(by_label, label)
    rng = np.random.default_rng(103)
    c = rng.standard_normal(sys_.n_unknowns) + 1j * rng.standard_normal(sys_.n_unknowns)
    y = rng.standard_normal(sys_.chart.dim) + 1j * rng.standard_normal(sys_.chart.dim)
    jac = sys_.jacobian(c, y, subset="track")
    h = 1e-6
    for i in range(sys_.n_unknowns):
        e = np.zeros(sys_.n_unknowns, dtype=complex)
        e[i] = h
        fd = (sys_.residual(c + e, y, subset="track") - sys_.residual(c - e, y, subset="track")) / (2 * h)
        scale = np.abs(jac[:, i]).max() + np.abs(fd).max() + 1.0
        assert np.abs(jac[:, i] - fd).max() < 1e-5 * scale


@pytest.mark.parametrize("label", ORACLE_LABELS)
def test_seed_residual_is_exactly_zero_mod_p(label, by_label):
    entry = by_label[label]
    sys_ = _system(by_label, label)
    for p in DEFAULT_PRIMES[:2]:
        inst = sample_instance(entry, np.random.default_rng(104), p)
        res = sys_.residual(inst.cameras.params(), inst.chart_point, modulus=p, subset="full")
        assert np.all(np.asarray(res) % p == 0)


@pytest.mark.parametrize("label", ORACLE_LABELS)
def test_complex_seed_residual_and_nondegeneracy(label, by_label):
    entry = by_label[label]
    sys_ = _system(by_label, label)
    inst = sample_instance(entry, np.random.default_rng(105))
    c, y = inst.cameras.params(), inst.chart_point
    assert float(np.max(sys_.scaled_residual(c, y, subset="full"))) < 1e-10
    assert sys_.seed_stacks_ok(c, y)


@pytest.mark.parametrize("label", ORACLE_LABELS)
def test_track_and_full_jacobians_agree_on_rank(label, by_label):
    entry = by_label[label]
    sys_ = _system(by_label, label)
    p = DEFAULT_PRIMES[3]
    inst = sample_instance(entry, np.random.default_rng(106), p)
    c, y = inst.cameras.params(), inst.chart_point
    from pointline.algebra import pf_rank

    jt = sys_.jacobian(c, y, modulus=p, subset="track")
    jf = sys_.jacobian(c, y, modulus=p, subset="full")
    assert pf_rank(jt, p) == pf_rank(jf, p)


def test_tangent_eval_matches_residual_on_segment(by_label):
    sys_ = _system(by_label, "2103_1")
    rng = np.random.default_rng(107)
    d = sys_.chart.dim
    n = sys_.n_unknowns
    c = (rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n)))
    ya = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    yb = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    t = np.array([0.3, 0.8])
    f, jac, ft = sys_.tangent_eval(c, t, ya, yb)
    for k in range(2):
        y_t = (1.0 - t[k]) * ya + t[k] * yb
        want = sys_.residual(c[k], y_t, subset="track")
        assert np.abs(f[k] - want).max() < 1e-9 * (np.abs(want).max() + 1.0)
        # dF/dt by central differences
        h = 1e-7
        fp = sys_.residual(c[k], (1.0 - t[k] - h) * ya + (t[k] + h) * yb, subset="track")
        fm = sys_.residual(c[k], (1.0 - t[k] + h) * ya + (t[k] - h) * yb, subset="track")
        fd = (fp - fm) / (2 * h)
        scale = np.abs(ft[k]).max() + np.abs(fd).max() + 1.0
        assert np.abs(ft[k] - fd).max() < 1e-5 * scale
        jk = sys_.jacobian(c[k], y_t, subset="track")
        assert np.abs(jac[k] - jk).max() < 1e-9 * (np.abs(jk).max() + 1.0)


def test_ghost_normalization_scales_are_powers_of_two(by_label):
    sys_ = _system(by_label, "2111_1")
    assert sys_.encoding.n_ghosts > 0
    scales = getattr(sys_, "_ghost_scale")
    for j, sc in scales.items():
        for s in np.asarray(sc).ravel():
            m, e = np.frexp(s)
            assert m == 0.5 and s >= 1.0  # exact powers of two
