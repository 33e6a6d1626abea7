"""Line encodings and determinantal constraint systems.

A world line seen in view v back-projects to the plane ``P_v^T l``.  For a
consistent joint image, the planes of one line across views span at most a
2-dimensional space (rank condition LC), and the planes of all lines through
one world point span at most a 3-dimensional one (rank condition CP).  To
make every point expressible this way, the encoding augments the observed
lines with synthetic visible lines (collinear-group lines and lines joining
point pairs) and, where a point still meets fewer than two lines, with
view-local ghost lines through random fixed directions.

Minors of the stacked planes, with rotation denominators cleared through
the Cayley parametrization, are polynomials in the camera unknowns C and
the image-chart coordinates y.  The full system lists every non-vacuous
minor; the tracking subsystem keeps only bordered minors around fixed
anchor columns, which generate the same local ideal wherever the anchor
minors are invertible, so Jacobian ranks and solution paths agree with the
full system at validated seeds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import algebra
from .catalog import CatalogEntry
from .scene import Chart

__all__ = [
    "EquationsError",
    "EncodingError",
    "EncodedLine",
    "Encoding",
    "encode",
    "ConstraintSystem",
    "Poly",
    "GHOST_COORD_BOUND",
]

GHOST_COORD_BOUND = 1 << 13


class EquationsError(Exception):
    """Base class for constraint-system failures."""


class EncodingError(EquationsError):
    """The encoding synthesis produced an inconsistent structure."""


# ---------------------------------------------------------------------------
# encoding synthesis


@dataclass(frozen=True)
class EncodedLine:
    """One line of the encoding.

    kind 'adjacent'/'free' are observed lines (``observed`` is their index
    in the incidence), 'group' is the common line of a collinear group,
    'pair' joins two points not sharing a group, and 'ghost' is a view-local
    random line through one point (``ghost_points`` holds the fixed integer
    direction point for each view; there is no cross-view correspondence).
    """

    kind: str
    observed: int | None = None
    anchor: int | None = None
    pair: tuple[int, int] | None = None
    group: int | None = None
    ghost_points: tuple[tuple[int, int, int], ...] | None = None

    @property
    def visible(self) -> bool:
        return self.kind != "ghost"


@dataclass
class Encoding:
    """Encoded line set of a problem plus point-line incidences."""

    entry: CatalogEntry
    m: int
    lines: tuple[EncodedLine, ...]
    incident: tuple[tuple[int, ...], ...]  # per point: encoded line ids

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    def visible_ids(self) -> list[int]:
        return [j for j, ln in enumerate(self.lines) if ln.visible]

    @property
    def n_added_visible(self) -> int:
        return sum(1 for ln in self.lines if ln.kind in ("group", "pair"))

    @property
    def n_ghosts(self) -> int:
        return sum(1 for ln in self.lines if ln.kind == "ghost")

    def summary(self) -> dict:
        return {
            "observed": self.entry.incidence.l,
            "added_visible": self.n_added_visible,
            "ghosts": self.n_ghosts,
            "total": self.n_lines,
        }


def encode(entry: CatalogEntry, rng: np.random.Generator) -> Encoding:
    """Synthesize the line encoding of a problem.

    Observed lines come first, then one line per collinear group, one line
    per point pair not already sharing a group, and finally ghost lines so
    every point meets at least two encoded lines in every view.
    """
    inc = entry.incidence
    m = entry.signature.m
    lines: list[EncodedLine] = []
    for j, a in enumerate(inc.anchors):
        lines.append(EncodedLine("adjacent", observed=j, anchor=a))
    for j in range(inc.la, inc.l):
        lines.append(EncodedLine("free", observed=j))
    for gi, _ in enumerate(inc.groups):
        lines.append(EncodedLine("group", group=gi))
    group_sets = [set(g) for g in inc.groups]
    for i, k in itertools.combinations(range(inc.p), 2):
        if any({i, k} <= g for g in group_sets):
            continue
        lines.append(EncodedLine("pair", pair=(i, k)))

    def through(pt: int) -> list[int]:
        out = []
        for j, ln in enumerate(lines):
            if ln.kind == "adjacent" and ln.anchor == pt:
                out.append(j)
            elif ln.kind == "group" and pt in inc.groups[ln.group]:
                out.append(j)
            elif ln.kind == "pair" and pt in ln.pair:
                out.append(j)
            elif ln.kind == "ghost" and ln.anchor == pt:
                out.append(j)
        return out

    for pt in range(inc.p):
        need = 2 - len(through(pt))
        for _ in range(max(0, need)):
            pts = tuple(
                tuple(int(x) for x in rng.integers(1, GHOST_COORD_BOUND, size=3))
                for _ in range(m)
            )
            lines.append(EncodedLine("ghost", anchor=pt, ghost_points=pts))

    incident = tuple(tuple(through(pt)) for pt in range(inc.p))
    for pt, ids in enumerate(incident):
        if len(ids) < 2:
            raise EncodingError(f"point {pt} still meets fewer than two lines")
    return Encoding(entry, m, tuple(lines), incident)


# ---------------------------------------------------------------------------
# dual arrays: values with optional forward-mode gradient slots


class _DA:
    """Array with an optional gradient block in a trailing axis."""

    __slots__ = ("v", "g")

    def __init__(self, v, g=None):
        self.v = v
        self.g = g


def _gadd(red, g1, g2):
    if g1 is None:
        return g2
    if g2 is None:
        return g1
    return red(g1 + g2)


def _add(red, a, b):
    return _DA(red(a.v + b.v), _gadd(red, a.g, b.g))


def _sub(red, a, b):
    g2 = None if b.g is None else red(-b.g)
    return _DA(red(a.v - b.v), _gadd(red, a.g, g2))


def _neg(red, a):
    return _DA(red(-a.v), None if a.g is None else red(-a.g))


def _scaleg(red, v, g):
    if g is None:
        return None
    v = np.asarray(v)
    return red(v[..., None] * g) if v.ndim else red(v * g)


def _mul(red, a, b):
    v = red(a.v * b.v)
    return _DA(v, _gadd(red, _scaleg(red, a.v, b.g), _scaleg(red, b.v, a.g)))


def _stack(red, das, k, dtype, axis=-1):
    """Stack dual scalars, materializing zero grads only when some exist."""
    vals = [np.asarray(d.v, dtype=dtype) for d in das]
    shape = np.broadcast_shapes(*[v.shape for v in vals])
    vs = np.stack([np.broadcast_to(v, shape) for v in vals], axis=axis)
    if all(d.g is None for d in das):
        return _DA(vs, None)
    gs = []
    for d in das:
        if d.g is None:
            gs.append(np.zeros(shape + (k,), dtype=dtype))
        else:
            gs.append(np.broadcast_to(d.g, shape + (k,)))
    gaxis = axis - 1 if axis < 0 else axis
    return _DA(vs, np.stack(gs, axis=gaxis))


# ---------------------------------------------------------------------------
# exact integer polynomials (for the plain-text export)


class Poly:
    """Multivariate polynomial with integer coefficients.

    Terms map exponent tuples to coefficients.  Supports ring arithmetic,
    exact evaluation, and the plain-text export grammar (see ``to_text``).
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict | None = None):
        self.nvars = nvars
        self.terms = {e: c for e, c in (terms or {}).items() if c != 0}

    @classmethod
    def const(cls, nvars: int, c: int) -> "Poly":
        return cls(nvars, {(0,) * nvars: int(c)} if c else {})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    def __add__(self, other):
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return Poly(self.nvars, terms)

    def __sub__(self, other):
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) - c
        return Poly(self.nvars, terms)

    def __neg__(self):
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return Poly(self.nvars, terms)

    def evaluate(self, vals, modulus: int | None = None):
        if modulus is not None:
            # numpy integers would overflow; python ints are exact
            vals = [int(v) for v in vals]
        total = 0
        for e, c in self.terms.items():
            term = c
            for i, exp in enumerate(e):
                if exp:
                    term *= vals[i] ** exp
            total += term
            if modulus is not None:
                total %= modulus
        return total

    def to_text(self, names: list[str]) -> str:
        if not self.terms:
            return "0"
        keys = sorted(self.terms, key=lambda e: (-sum(e), tuple(-x for x in e)))
        parts = []
        for e in keys:
            c = self.terms[e]
            factors = [
                f"{names[i]}^{x}" if x > 1 else names[i]
                for i, x in enumerate(e)
                if x > 0
            ]
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if c > 0 else f"- {body}")
        return " ".join(parts)


class _PolyRing:
    """Ring adapter for Poly scalars (export / oracle path)."""

    def __init__(self, nvars: int):
        self.nvars = nvars
        self.modulus = None

    def const(self, c):
        return Poly.const(self.nvars, c)

    def var(self, i):
        return Poly.variable(self.nvars, i)

    def add(self, x, y):
        return x + y

    def sub(self, x, y):
        return x - y

    def mul(self, x, y):
        return x * y

    def neg(self, x):
        return -x


# ---------------------------------------------------------------------------
# the constraint system


@dataclass
class _CpBlock:
    point: int
    cols: np.ndarray  # global column ids, view-major
    anchors: np.ndarray  # three global ids: two from view 0, one from view 1
    borders: np.ndarray  # global ids of tracked border columns


@dataclass
class _LcBlock:
    line: int
    cols: np.ndarray  # global ids, one per view


class ConstraintSystem:
    """Polynomial system F(C; y) = 0 for one encoded problem.

    Columns are indexed view-major: column ``v * L + j`` is encoded line
    ``j`` back-projected from view ``v`` (L = number of encoded lines).
    Equations are ordered CP blocks first (per point, minors in generation
    order) then LC blocks (per visible line).
    """

    def __init__(self, encoding: Encoding):
        self.encoding = encoding
        self.entry = encoding.entry
        self.m = encoding.m
        self.chart = Chart(self.entry)
        self.n_unknowns = 6 * self.m - 7
        self.n_lines = encoding.n_lines
        self.n_cols = self.m * self.n_lines
        self._build_line_recipes()
        self._build_blocks()
        self._build_minor_index()
        self._build_eval_tables()

    # -- construction -----------------------------------------------------

    def _col(self, line: int, view: int) -> int:
        return view * self.n_lines + line

    def _build_line_recipes(self):
        inc = self.entry.incidence
        chart = self.chart
        recipes = []
        for j, ln in enumerate(self.encoding.lines):
            if ln.kind == "adjacent":
                recipes.append(("adjacent", ln.observed, ln.anchor))
            elif ln.kind == "free":
                recipes.append(("free", ln.observed, None))
            elif ln.kind == "group":
                g = inc.groups[ln.group]
                recipes.append(("join", (g[0], g[1]), None))
            elif ln.kind == "pair":
                recipes.append(("join", ln.pair, None))
            else:
                recipes.append(("ghost", ln.anchor, ln.ghost_points))
        self._recipes = recipes
        # chart slot tables (mirror scene.Chart layout)
        self._pt_slot = chart._pt_slot
        self._dep_slot = chart._dep_slot
        self._adj_slot = chart._adj_slot
        self._free_slot = chart._free_slot
        self._per_view = chart.per_view

    def _build_blocks(self):
        enc = self.encoding
        self.cp_blocks: list[_CpBlock] = []
        for pt, ids in enumerate(enc.incident):
            cols = [self._col(j, v) for v in range(self.m) for j in ids]
            k = len(ids)
            anchors = [cols[0], cols[1], cols[k]]
            border = [c for c in cols[k:] if c != cols[k]]
            self.cp_blocks.append(
                _CpBlock(
                    pt,
                    np.array(cols),
                    np.array(anchors),
                    np.array(border, dtype=int),
                )
            )
        # LC blocks exist for every view count: with two views they emit no
        # minors (a 4x2 stack never has rank 3) but the block still drives
        # the rank-2 nondegeneracy check on candidate solutions, which is
        # what distinguishes an actual 3D line from a pair of coincident
        # planes.
        self.lc_blocks: list[_LcBlock] = []
        for j in enc.visible_ids():
            cols = [self._col(j, v) for v in range(self.m)]
            self.lc_blocks.append(_LcBlock(j, np.array(cols)))

    def _build_minor_index(self):
        # CP quadruples: at most two columns per view, deduplicated globally
        full_q: list[tuple[int, int, int, int]] = []
        seen: set[frozenset] = set()
        for blk in self.cp_blocks:
            k = len(blk.cols) // self.m
            views = np.repeat(np.arange(self.m), k)
            for quad in itertools.combinations(range(len(blk.cols)), 4):
                vcounts = np.bincount(views[list(quad)], minlength=self.m)
                if vcounts.max() > 2:
                    continue
                cols = tuple(int(blk.cols[i]) for i in quad)
                key = frozenset(cols)
                if key in seen:
                    continue
                seen.add(key)
                full_q.append(cols)
        track_q: list[tuple[int, int, int, int]] = []
        for blk in self.cp_blocks:
            a = [int(x) for x in blk.anchors]
            for c in blk.borders:
                track_q.append((a[0], a[1], a[2], int(c)))

        full_t: list[tuple[tuple[int, int, int], tuple[int, int, int]]] = []
        track_t: list[tuple[tuple[int, int, int], tuple[int, int, int]]] = []
        for blk in self.lc_blocks:
            for vs in itertools.combinations(range(self.m), 3):
                cols = tuple(int(blk.cols[v]) for v in vs)
                for rows in itertools.combinations(range(4), 3):
                    full_t.append((cols, rows))
                    if vs[0] == 0 and vs[1] == 1:
                        track_t.append((cols, rows))
        self._cp_full = np.array(full_q, dtype=int).reshape(-1, 4)
        self._cp_track = np.array(track_q, dtype=int).reshape(-1, 4)
        self._lc_full_cols = np.array([c for c, _ in full_t], dtype=int).reshape(-1, 3)
        self._lc_full_rows = np.array([r for _, r in full_t], dtype=int).reshape(-1, 3)
        self._lc_track_cols = np.array([c for c, _ in track_t], dtype=int).reshape(
            -1, 3
        )
        self._lc_track_rows = np.array([r for _, r in track_t], dtype=int).reshape(
            -1, 3
        )
        self.n_full = len(self._cp_full) + len(self._lc_full_cols)
        self.n_track = len(self._cp_track) + len(self._lc_track_cols)

    # -- vectorized evaluation --------------------------------------------
    #
    # The camera unknowns of all views, including the identity view, are
    # gathered through one padded parameter vector [C, 0, 1]; view 0 then
    # carries Cayley (0,0,0) and translation 0, which reproduces the plane
    # [l; 0] exactly.  All per-view work is batched over a view axis, so an
    # evaluation costs a fixed small number of numpy calls regardless of m.

    def _reduce(self, modulus):
        if modulus is None:
            return lambda x: x
        return lambda x: x % modulus

    def _build_eval_tables(self):
        n = self.n_unknowns
        zero_slot, one_slot = n, n + 1
        cay = np.full((self.m, 3), zero_slot)
        trn = np.full((self.m, 3), zero_slot)
        cay[1] = [0, 1, 2]
        trn[1] = [one_slot, 3, 4]
        for v in range(2, self.m):
            base = 5 + 6 * (v - 2)
            cay[v] = [base, base + 1, base + 2]
            trn[v] = [base + 3, base + 4, base + 5]
        self._cay_idx, self._trn_idx = cay, trn
        ghosts = {}
        scales = {}
        for j, (kind, arg1, arg2) in enumerate(self._recipes):
            if kind == "ghost":
                arr = np.array(arg2, dtype=np.int64)  # (m, 3)
                ghosts[j] = arr
                # Per-view power-of-two scale used to renormalize the ghost
                # direction in floating point.  Dividing by an exact power of
                # two keeps every coordinate exactly representable while
                # bringing all line duals to a comparable magnitude; without
                # it the integer directions (up to 2**13) blow up the minor
                # scales and wreck the Jacobian conditioning.  The modular
                # path keeps the raw integers, where scale is meaningless.
                scales[j] = np.exp2(np.ceil(np.log2(np.abs(arr).max(axis=1))))
        self._ghost_pts = ghosts
        self._ghost_scale = scales

    def _padded_params(self, c_arr, k, dtype, with_grad):
        n = self.n_unknowns
        pad = np.zeros(np.shape(c_arr)[:-1] + (2,), dtype=dtype)
        pad[..., 1] = 1
        cp = np.concatenate([c_arr, pad], axis=-1)
        gp = None
        if with_grad:
            gp = np.zeros((n + 2, k), dtype=dtype)
            gp[:n, :n] = np.eye(n, dtype=dtype)
        return cp, gp

    def _camera_blocks(self, red, cp, gp, k, dtype):
        """kR as (.., m, 3, 3) and kappa*t as (.., m, 3) dual arrays."""

        def fetch(idx, i):
            v = cp[..., idx[:, i]]
            g = gp[idx[:, i]] if gp is not None else None
            return _DA(v, g)

        a, b, c = (fetch(self._cay_idx, i) for i in range(3))
        t0, t1, t2 = (fetch(self._trn_idx, i) for i in range(3))
        one = _DA(np.ones(self.m, dtype=dtype))
        aa, bb, cc = _mul(red, a, a), _mul(red, b, b), _mul(red, c, c)
        ab, ac, bc = _mul(red, a, b), _mul(red, a, c), _mul(red, b, c)
        kappa = _add(red, _add(red, one, aa), _add(red, bb, cc))

        def two(x):
            return _add(red, x, x)

        kr = [
            [
                _sub(red, _add(red, one, aa), _add(red, bb, cc)),
                two(_sub(red, ab, c)),
                two(_add(red, ac, b)),
            ],
            [
                two(_add(red, ab, c)),
                _add(red, _sub(red, one, aa), _sub(red, bb, cc)),
                two(_sub(red, bc, a)),
            ],
            [
                two(_sub(red, ac, b)),
                two(_add(red, bc, a)),
                _sub(red, _sub(red, one, aa), _sub(red, bb, cc)),
            ],
        ]
        kt = [_mul(red, kappa, ti) for ti in (t0, t1, t2)]
        krt = _stack(
            red,
            [_stack(red, row, k, dtype, axis=-1) for row in kr],
            k,
            dtype,
            axis=-2,
        )
        ktv = _stack(red, kt, k, dtype, axis=-1)
        return krt, ktv

    def _view_slots(self, y, dtype):
        """Plain chart coordinates as per-slot (.., m) dual vectors."""
        y = np.asarray(y)
        yr = y.reshape(y.shape[:-1] + (self.m, self._per_view)).astype(
            dtype, copy=False
        )
        return [_DA(yr[..., j]) for j in range(self._per_view)]

    def _segment_slots(self, ya, yb, t, dtype, k):
        """Chart slots along y(t) = ya + t (yb - ya), grads in slot k-1.

        ``ya`` and ``yb`` may carry leading batch axes (one segment per
        tracked path); they broadcast against each other and against ``t``.
        """
        m, pv = self.m, self._per_view
        ya = np.asarray(ya, dtype=dtype)
        yb = np.asarray(yb, dtype=dtype)
        batch = np.broadcast_shapes(ya.shape[:-1], yb.shape[:-1])
        ya = np.broadcast_to(ya, batch + ya.shape[-1:]).reshape(batch + (m, pv))
        yb = np.broadcast_to(yb, batch + yb.shape[-1:]).reshape(batch + (m, pv))
        t = np.asarray(t, dtype=dtype)
        out = []
        for j in range(pv):
            dy = yb[..., j] - ya[..., j]
            v = ya[..., j] + t[..., None] * dy
            g = np.zeros(dy.shape + (k,), dtype=dtype)
            g[..., k - 1] = dy
            out.append(_DA(v, g))
        return out

    def _affine_points(self, red, slots):
        """(u, w) per point as (.., m) duals, dependents resolved in order."""
        aff: dict[int, tuple[_DA, _DA]] = {}
        for i in self.chart.free_pts:
            s = self._pt_slot[i]
            aff[i] = (slots[s], slots[s + 1])
        for d, (pa, pb) in self.chart.deps:
            t = slots[self._dep_slot[d]]
            ua, wa = aff[pa]
            ub, wb = aff[pb]
            aff[d] = (
                _add(red, ua, _mul(red, t, _sub(red, ub, ua))),
                _add(red, wa, _mul(red, t, _sub(red, wb, wa))),
            )
        return aff

    def _line_duals(self, red, slots, aff, k, dtype, modulus):
        """All encoded lines as a (.., m, L, 3) dual array."""
        one = _DA(np.ones(self.m, dtype=dtype))
        entries = []
        for j, (kind, arg1, arg2) in enumerate(self._recipes):
            if kind == "adjacent":
                s = slots[self._adj_slot[arg1]]
                ua, wa = aff[arg2]
                tri = [_neg(red, s), one, _sub(red, _mul(red, s, ua), wa)]
            elif kind == "free":
                slot = self._free_slot[arg1]
                tri = [slots[slot], slots[slot + 1], one]
            elif kind == "join":
                i1, i2 = arg1
                u1, w1 = aff[i1]
                u2, w2 = aff[i2]
                tri = [
                    _sub(red, w1, w2),
                    _sub(red, u2, u1),
                    _sub(red, _mul(red, u1, w2), _mul(red, w1, u2)),
                ]
            else:  # ghost: cross of the point with a fixed per-view direction
                u, w = aff[arg1]
                gp = self._ghost_pts[j].astype(dtype)  # (m, 3)
                if modulus is None:
                    gp = gp / self._ghost_scale[j][:, None]
                g0, g1, g2 = (_DA(gp[:, i]) for i in range(3))
                tri = [
                    _sub(red, _mul(red, w, g2), g1),
                    _sub(red, g0, _mul(red, u, g2)),
                    _sub(red, _mul(red, u, g1), _mul(red, w, g0)),
                ]
            entries.append(_stack(red, tri, k, dtype, axis=-1))
        return _stack(red, entries, k, dtype, axis=-2)

    def _columns(self, c_arr, slots, modulus, k, dtype, with_grad):
        """Back-projected plane columns as a (.., n_cols, 4) dual array."""
        red = self._reduce(modulus)
        cp, gp = self._padded_params(c_arr, k, dtype, with_grad)
        krt, ktv = self._camera_blocks(red, cp, gp, k, dtype)
        aff = self._affine_points(red, slots)
        lines = self._line_duals(red, slots, aff, k, dtype, modulus)
        lv, lg = lines.v, lines.g
        krv, ktvv = krt.v, ktv.v
        r_part = red(np.einsum("...mlj,...mji->...mli", lv, krv))
        t_part = red(np.einsum("...mlj,...mj->...ml", lv, ktvv))
        vals = np.concatenate([r_part, t_part[..., None]], axis=-1)
        batch = np.broadcast_shapes(np.shape(c_arr)[:-1], vals.shape[:-3])
        vals = np.broadcast_to(vals, batch + vals.shape[-3:])
        vals = vals.reshape(batch + (self.n_cols, 4))
        grads = None
        if with_grad:
            if lg is None:
                lg = np.zeros(lv.shape + (k,), dtype=dtype)
            rg = red(
                np.einsum("...mlj,...mjik->...mlik", lv, krt.g)
                + np.einsum("...mljk,...mji->...mlik", lg, krv)
            )
            tg = red(
                np.einsum("...mlj,...mjk->...mlk", lv, ktv.g)
                + np.einsum("...mljk,...mj->...mlk", lg, ktvv)
            )
            grads = np.concatenate([rg, tg[..., None, :]], axis=-2)
            grads = np.broadcast_to(grads, batch + grads.shape[-4:])
            grads = grads.reshape(batch + (self.n_cols, 4, k))
        return _DA(vals, grads)

    def _det_chunk(self, cols):
        """Chunk length keeping scratch arrays around ~64MB."""
        lead = int(np.prod(cols.v.shape[:-2], dtype=np.int64)) or 1
        width = 1 if cols.g is None else cols.g.shape[-1]
        return max(16, int(4_000_000 // (lead * 16 * width)) or 16)

    def _cp_dets(self, red, cols, quads):
        """Laplace expansion of 4x4 minors over rows (0,1)x(2,3)."""
        outs_v, outs_g = [], []
        chunk = self._det_chunk(cols)
        for s in range(0, len(quads), chunk):
            q = quads[s : s + chunk]
            sub_v = cols.v[..., q, :]  # (.., Q, 4cols, 4rows)
            sub_g = cols.g[..., q, :, :] if cols.g is not None else None

            def pm(i, j, r0, r1):
                v = red(
                    sub_v[..., i, r0] * sub_v[..., j, r1]
                    - sub_v[..., i, r1] * sub_v[..., j, r0]
                )
                g = None
                if sub_g is not None:
                    g = red(
                        sub_v[..., i, r0, None] * sub_g[..., j, r1, :]
                        + sub_v[..., j, r1, None] * sub_g[..., i, r0, :]
                        - sub_v[..., i, r1, None] * sub_g[..., j, r0, :]
                        - sub_v[..., j, r0, None] * sub_g[..., i, r1, :]
                    )
                return v, g

            pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
            comp = {(0, 1): (2, 3), (0, 2): (1, 3), (0, 3): (1, 2)}
            total_v = 0
            total_g = 0
            for (i, j) in pairs[:3]:
                kk, ll = comp[(i, j)]
                sign = 1 if (i, j) != (0, 2) else -1
                a_v, a_g = pm(i, j, 0, 1)
                b_v, b_g = pm(kk, ll, 2, 3)
                c_v, c_g = pm(kk, ll, 0, 1)
                d_v, d_g = pm(i, j, 2, 3)
                total_v = total_v + sign * red(a_v * b_v + c_v * d_v)
                if sub_g is not None:
                    t1 = red(a_v[..., None] * b_g + b_v[..., None] * a_g)
                    t2 = red(c_v[..., None] * d_g + d_v[..., None] * c_g)
                    total_g = total_g + sign * red(t1 + t2)
            outs_v.append(red(total_v))
            if sub_g is not None:
                outs_g.append(red(total_g))
        if not outs_v:
            return None, None
        v = np.concatenate(outs_v, axis=-1)
        g = np.concatenate(outs_g, axis=-2) if outs_g else None
        return v, g

    def _lc_dets(self, red, cols, col_idx, row_idx):
        """3x3 minors: chosen rows of three chosen columns."""
        outs_v, outs_g = [], []
        chunk = self._det_chunk(cols)
        for s in range(0, len(col_idx), chunk):
            ci = col_idx[s : s + chunk]
            ri = row_idx[s : s + chunk]
            sub_v = cols.v[..., ci, :]  # (.., T, 3cols, 4rows)
            take = np.broadcast_to(ri[:, None, :], (len(ci), 3, 3))
            take = take.reshape((1,) * (sub_v.ndim - 3) + take.shape)
            m_v = np.take_along_axis(sub_v, take, axis=-1)  # (.., T, 3, 3)
            m_g = None
            if cols.g is not None:
                sub_g = cols.g[..., ci, :, :]
                m_g = np.take_along_axis(sub_g, take[..., None], axis=-2)

            def mv(i, j):
                return m_v[..., i, j]

            def det_g():
                g = 0
                for perm, sign in (
                    ((0, 1, 2), 1),
                    ((1, 2, 0), 1),
                    ((2, 0, 1), 1),
                    ((0, 2, 1), -1),
                    ((2, 1, 0), -1),
                    ((1, 0, 2), -1),
                ):
                    i, j, q = perm
                    a, b, c = mv(0, i), mv(1, j), mv(2, q)
                    ga = m_g[..., 0, i, :]
                    gb = m_g[..., 1, j, :]
                    gc = m_g[..., 2, q, :]
                    g = g + sign * red(
                        red(ga * (b * c)[..., None])
                        + red(gb * (a * c)[..., None])
                        + red(gc * (a * b)[..., None])
                    )
                return red(g)

            det_v = red(
                mv(0, 0) * red(mv(1, 1) * mv(2, 2) - mv(1, 2) * mv(2, 1))
                - mv(0, 1) * red(mv(1, 0) * mv(2, 2) - mv(1, 2) * mv(2, 0))
                + mv(0, 2) * red(mv(1, 0) * mv(2, 1) - mv(1, 1) * mv(2, 0))
            )
            outs_v.append(red(det_v))
            if m_g is not None:
                outs_g.append(det_g())
        if not outs_v:
            return None, None
        v = np.concatenate(outs_v, axis=-1)
        g = np.concatenate(outs_g, axis=-2) if outs_g else None
        return v, g

    def _minor_sets(self, subset: str):
        if subset == "full":
            return self._cp_full, self._lc_full_cols, self._lc_full_rows
        if subset == "track":
            return self._cp_track, self._lc_track_cols, self._lc_track_rows
        raise EquationsError(f"unknown subset {subset!r}")

    def _eval(self, cols, modulus, subset):
        red = self._reduce(modulus)
        quads, lc_cols, lc_rows = self._minor_sets(subset)
        parts_v, parts_g = [], []
        qv, qg = self._cp_dets(red, cols, quads)
        if qv is not None:
            parts_v.append(qv)
            parts_g.append(qg)
        tv, tg = self._lc_dets(red, cols, lc_cols, lc_rows)
        if tv is not None:
            parts_v.append(tv)
            parts_g.append(tg)
        if not parts_v:
            shape = cols.v.shape[:-2] + (0,)
            return np.zeros(shape, dtype=cols.v.dtype), None
        v = np.concatenate(parts_v, axis=-1)
        g = None
        if cols.g is not None:
            g = np.concatenate(parts_g, axis=-2)
        return v, g

    # -- public API ---------------------------------------------------------

    def residual(self, c_params, y, modulus: int | None = None, subset="full"):
        """F(C; y), shape (.., N)."""
        dtype = np.int64 if modulus is not None else np.complex128
        c_arr = np.asarray(c_params, dtype=dtype)
        slots = self._view_slots(y, dtype)
        cols = self._columns(c_arr, slots, modulus, 0, dtype, False)
        v, _ = self._eval(cols, modulus, subset)
        return v

    def jacobian(self, c_params, y, modulus: int | None = None, subset="track"):
        """dF/dC (.., N, n) by forward-mode duals."""
        dtype = np.int64 if modulus is not None else np.complex128
        c_arr = np.asarray(c_params, dtype=dtype)
        n = self.n_unknowns
        slots = self._view_slots(y, dtype)
        cols = self._columns(c_arr, slots, modulus, n, dtype, True)
        _, g = self._eval(cols, modulus, subset)
        return g

    def residual_and_jacobian(
        self, c_params, y, modulus: int | None = None, subset="track"
    ):
        dtype = np.int64 if modulus is not None else np.complex128
        c_arr = np.asarray(c_params, dtype=dtype)
        slots = self._view_slots(y, dtype)
        cols = self._columns(c_arr, slots, modulus, self.n_unknowns, dtype, True)
        return self._eval(cols, modulus, subset)

    def tangent_eval(self, c_params, t, ya, yb, subset="track"):
        """Residual, Jacobian and segment tangent along y(t) = ya + t(yb-ya).

        Returns (F, dF/dC, dF/dt) batched over the leading axes of
        ``c_params``; complex only.
        """
        dtype = np.complex128
        n = self.n_unknowns
        k = n + 1
        c_arr = np.asarray(c_params, dtype=dtype)
        slots = self._segment_slots(ya, yb, t, dtype, k)
        cols = self._columns(c_arr, slots, None, k, dtype, True)
        v, g = self._eval(cols, None, subset)
        return v, g[..., :n], g[..., n]

    def column_values(self, c_params, y, modulus: int | None = None):
        """Numeric plane columns, shape (.., n_cols, 4)."""
        dtype = np.int64 if modulus is not None else np.complex128
        c_arr = np.asarray(c_params, dtype=dtype)
        slots = self._view_slots(y, dtype)
        cols = self._columns(c_arr, slots, modulus, 0, dtype, False)
        return cols.v

    def kappas(self, c_params):
        """Cayley denominators per view >= 1, shape (.., m-1)."""
        c_arr = np.asarray(c_params, dtype=np.complex128)
        out = [np.asarray(1 + np.sum(c_arr[..., 0:3] * c_arr[..., 0:3], axis=-1))]
        for v in range(2, self.m):
            base = 5 + 6 * (v - 2)
            s = np.sum(c_arr[..., base : base + 3] * c_arr[..., base : base + 3], -1)
            out.append(1 + s)
        return np.stack(out, axis=-1)

    def seed_stacks_ok(self, c_params, y, modulus: int | None = None, tol=1e-8):
        """Check generic stack ranks at a consistent seed.

        Every CP stack must have rank exactly 3 with an invertible anchor
        triple, every LC stack rank exactly 2 with independent first two
        columns.  This validates both the rank-sufficiency of the encoding
        and the anchor choices behind the tracking subsystem.
        """
        vals = self.column_values(c_params, y, modulus)
        if vals.ndim != 2:
            raise EquationsError("seed_stacks_ok expects a single seed")
        for blk in self.cp_blocks:
            stack = vals[blk.cols].T  # 4 x K
            if algebra.matrix_rank(stack, tol, modulus) != 3:
                return False
            anchor = vals[blk.anchors].T
            if algebra.matrix_rank(anchor, tol, modulus) != 3:
                return False
        for blk in self.lc_blocks:
            stack = vals[blk.cols].T
            if algebra.matrix_rank(stack, tol, modulus) != 2:
                return False
            if algebra.matrix_rank(vals[blk.cols[:2]].T, tol, modulus) != 2:
                return False
        return True

    def scaled_residual(self, c_params, y, subset="full"):
        """Full residual divided per-minor by the product of column norms.

        The division makes the residual invariant under rescaling of any
        column, so thresholds are meaningful for solutions of any size.
        """
        vals = self.column_values(c_params, y, None)
        res = self.residual(c_params, y, None, subset)
        norms = np.linalg.norm(vals, axis=-1)  # (.., n_cols)
        quads, lc_cols, lc_rows = self._minor_sets(subset)
        dens = []
        if len(quads):
            dens.append(np.prod(norms[..., quads], axis=-1))
        if len(lc_cols):
            dens.append(np.prod(norms[..., lc_cols], axis=-1))
        den = np.concatenate(dens, axis=-1) if dens else np.ones_like(res, float)
        return np.abs(res) / np.maximum(den, 1e-300)

    # -- polynomial export ---------------------------------------------------

    def polynomials(self, subset="track") -> list[Poly]:
        """The system as exact integer polynomials in c1..cn, y1..yd."""
        n, d = self.n_unknowns, self.chart.dim
        ring = _PolyRing(n + d)
        cvals = [ring.var(i) for i in range(n)]
        yvals = [ring.var(n + j) for j in range(d)]
        return _ring_walk(self, ring, cvals, yvals, subset)

    def export_text(self, subset="track") -> str:
        """Plain-text export, one polynomial per line.

        Grammar: ``poly := term ((' + '|' - ') term)*``;
        ``term := coeff | [coeff '*'] var('^'exp)? ('*' var('^'exp)?)*``;
        variables ``c1..cn`` are camera unknowns in parameter order,
        ``y1..yd`` image-chart coordinates; lines starting '#' are comments.
        """
        n, d = self.n_unknowns, self.chart.dim
        names = [f"c{i + 1}" for i in range(n)] + [f"y{j + 1}" for j in range(d)]
        head = [
            f"# constraint system for problem {self.entry.label}",
            f"# {self.n_unknowns} camera unknowns c1..c{n}, "
            f"{d} chart coordinates y1..y{d}",
        ]
        return "\n".join(head + [p.to_text(names) for p in self.polynomials(subset)])


# ---------------------------------------------------------------------------
# scalar ring walk (export path and cross-check oracle)


def _ring_walk(
    sys: ConstraintSystem, ring, cvals, yvals, subset, normalize_ghosts=False
) -> list:
    """Evaluate the system one scalar operation at a time over any ring.

    Structurally independent from the vectorized path: used to build exact
    polynomials and, in tests, as an oracle for the numeric engine.  With
    ``normalize_ghosts`` the ghost directions are divided by their
    power-of-two scales, matching what the floating-point evaluator does;
    leave it off for modular or polynomial rings, which keep raw integers.
    """
    m = sys.m
    one = ring.const(1)
    zero = ring.const(0)
    cams = [None]
    for v in range(1, m):
        if v == 1:
            a, b, c = cvals[0], cvals[1], cvals[2]
            t = [one, cvals[3], cvals[4]]
        else:
            base = 5 + 6 * (v - 2)
            a, b, c = cvals[base : base + 3]
            t = list(cvals[base + 3 : base + 6])
        aa, bb, cc = ring.mul(a, a), ring.mul(b, b), ring.mul(c, c)
        ab, ac, bc = ring.mul(a, b), ring.mul(a, c), ring.mul(b, c)

        def two(x):
            return ring.add(x, x)

        kr = [
            [
                ring.sub(ring.add(one, aa), ring.add(bb, cc)),
                two(ring.sub(ab, c)),
                two(ring.add(ac, b)),
            ],
            [
                two(ring.add(ab, c)),
                ring.add(ring.sub(one, aa), ring.sub(bb, cc)),
                two(ring.sub(bc, a)),
            ],
            [
                two(ring.sub(ac, b)),
                two(ring.add(bc, a)),
                ring.sub(ring.sub(one, aa), ring.sub(bb, cc)),
            ],
        ]
        kappa = ring.add(ring.add(one, aa), ring.add(bb, cc))
        kt = [ring.mul(kappa, ti) for ti in t]
        cams.append((kr, kt))

    cols: dict[tuple[int, int], list] = {}
    for v in range(m):
        base = v * sys._per_view
        aff = {}
        for i in sys.chart.free_pts:
            s = base + sys._pt_slot[i]
            aff[i] = (yvals[s], yvals[s + 1])
        for dpt, (pa, pb) in sys.chart.deps:
            t = yvals[base + sys._dep_slot[dpt]]
            ua, wa = aff[pa]
            ub, wb = aff[pb]
            aff[dpt] = (
                ring.add(ua, ring.mul(t, ring.sub(ub, ua))),
                ring.add(wa, ring.mul(t, ring.sub(wb, wa))),
            )
        for j, (kind, arg1, arg2) in enumerate(sys._recipes):
            if kind == "adjacent":
                s = yvals[base + sys._adj_slot[arg1]]
                ua, wa = aff[arg2]
                tri = [ring.neg(s), one, ring.sub(ring.mul(s, ua), wa)]
            elif kind == "free":
                slot = base + sys._free_slot[arg1]
                tri = [yvals[slot], yvals[slot + 1], one]
            elif kind == "join":
                (i1, i2) = arg1
                u1, w1 = aff[i1]
                u2, w2 = aff[i2]
                tri = [
                    ring.sub(w1, w2),
                    ring.sub(u2, u1),
                    ring.sub(ring.mul(u1, w2), ring.mul(w1, u2)),
                ]
            else:
                u, w = aff[arg1]
                if normalize_ghosts:
                    sc = float(sys._ghost_scale[j][v])
                    g0, g1, g2 = (ring.const(x / sc) for x in arg2[v])
                else:
                    g0, g1, g2 = (ring.const(x) for x in arg2[v])
                tri = [
                    ring.sub(ring.mul(w, g2), g1),
                    ring.sub(g0, ring.mul(u, g2)),
                    ring.sub(ring.mul(u, g1), ring.mul(w, g0)),
                ]
            if v == 0:
                cols[(j, v)] = [tri[0], tri[1], tri[2], zero]
            else:
                kr, kt = cams[v]
                col = []
                for i in range(3):
                    acc = zero
                    for jj in range(3):
                        acc = ring.add(acc, ring.mul(kr[jj][i], tri[jj]))
                    col.append(acc)
                acc = zero
                for jj in range(3):
                    acc = ring.add(acc, ring.mul(kt[jj], tri[jj]))
                col.append(acc)
                cols[(j, v)] = col

    def col_by_global(cid: int):
        return cols[(cid % sys.n_lines, cid // sys.n_lines)]

    def det2(c1, c2, r0, r1):
        return ring.sub(ring.mul(c1[r0], c2[r1]), ring.mul(c1[r1], c2[r0]))

    out = []
    quads, lc_cols, lc_rows = sys._minor_sets(subset)
    for quad in quads:
        cq = [col_by_global(int(c)) for c in quad]
        total = zero
        for (i, j), (kk, ll), sign in (
            ((0, 1), (2, 3), 1),
            ((0, 2), (1, 3), -1),
            ((0, 3), (1, 2), 1),
            ((1, 2), (0, 3), 1),
            ((1, 3), (0, 2), -1),
            ((2, 3), (0, 1), 1),
        ):
            prod = ring.mul(det2(cq[i], cq[j], 0, 1), det2(cq[kk], cq[ll], 2, 3))
            total = ring.add(total, prod if sign > 0 else ring.neg(prod))
        out.append(total)
    for ci, ri in zip(lc_cols, lc_rows):
        c1, c2, c3 = (col_by_global(int(c)) for c in ci)
        r0, r1, r2 = (int(r) for r in ri)
        det = ring.add(
            ring.sub(
                ring.mul(c1[r0], ring.sub(ring.mul(c2[r1], c3[r2]), ring.mul(c2[r2], c3[r1]))),
                ring.mul(c1[r1], ring.sub(ring.mul(c2[r0], c3[r2]), ring.mul(c2[r2], c3[r0]))),
            ),
            ring.mul(c1[r2], ring.sub(ring.mul(c2[r0], c3[r1]), ring.mul(c2[r1], c3[r0]))),
        )
        out.append(det)
    return out
