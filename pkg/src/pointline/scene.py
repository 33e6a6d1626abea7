"""Scenes, cameras, projection, triangulation, and the image chart.

Everything here runs over either coefficient field: exact Z_p arithmetic
(``modulus`` set) or complex floating point (``modulus`` None).  Sampling is
rejection-based: candidates violating any genericity condition are thrown
away and redrawn, so downstream code always sees generic configurations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra
from .catalog import CatalogEntry, IncidenceRelation

__all__ = [
    "SceneError",
    "SamplingError",
    "GenericityError",
    "ChartError",
    "InconsistentImageError",
    "Arrangement",
    "CameraConfig",
    "JointImage",
    "Instance",
    "sample_arrangement",
    "sample_cameras",
    "project",
    "triangulate",
    "Chart",
    "sample_instance",
    "RETRY_BUDGET",
]

RETRY_BUDGET = 32


class SceneError(Exception):
    """Base class for scene-layer failures."""


class SamplingError(SceneError):
    """Rejection sampling exhausted its retry budget."""


class GenericityError(SceneError):
    """A sampled configuration violates a genericity condition."""


class ChartError(SceneError):
    """A joint image cannot be expressed in the affine chart."""


class InconsistentImageError(SceneError):
    """Image data admits no consistent world reconstruction."""


def _dtype(modulus):
    return np.int64 if modulus is not None else np.complex128


def _rand(rng: np.random.Generator, shape, modulus):
    if modulus is not None:
        return rng.integers(0, modulus, size=shape, dtype=np.int64)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _rank(mat, modulus) -> int:
    return algebra.matrix_rank(mat, tol=1e-8, modulus=modulus)


def _nonzero(vec, modulus) -> bool:
    if modulus is not None:
        return bool(np.any(np.asarray(vec) % modulus))
    return bool(np.abs(np.asarray(vec)).max(initial=0.0) > 1e-12)


def _proj_equal(a, b, modulus) -> bool:
    return _rank(np.stack([a, b]), modulus) <= 1


def _on_line(x, span_a, span_b, modulus) -> bool:
    return _rank(np.stack([span_a, span_b, x]), modulus) <= 2


def _same_line(sa, sb, modulus) -> bool:
    return _rank(np.concatenate([sa, sb]), modulus) <= 2


def _invertible(x, modulus, scale=1.0) -> bool:
    if modulus is not None:
        return int(x) % modulus != 0
    return abs(x) > 1e-8 * max(1.0, scale)


# ---------------------------------------------------------------------------
# data containers


@dataclass
class Arrangement:
    """World points (p x 4) and observed line spans (l x 2 x 4)."""

    incidence: IncidenceRelation
    points: np.ndarray
    line_spans: np.ndarray
    modulus: int | None = None

    def to_dict(self) -> dict:
        return {
            "points": _array_out(self.points),
            "line_spans": _array_out(self.line_spans),
            "modulus": self.modulus,
        }


@dataclass
class CameraConfig:
    """Calibrated cameras in the gauge-fixed Cayley parametrization.

    View 0 is the identity camera.  View 1 has translation (1, ty, tz);
    later views carry full (a, b, c, tx, ty, tz).  ``params`` flattens the
    6m-7 unknowns in that order.
    """

    cayley: np.ndarray  # (m, 3), row 0 unused
    trans: np.ndarray  # (m, 3), row 0 zero
    modulus: int | None = None

    @property
    def m(self) -> int:
        return self.cayley.shape[0]

    def rotation(self, v: int) -> np.ndarray:
        if v == 0:
            eye = np.eye(3, dtype=_dtype(self.modulus))
            return eye
        return algebra.cayley_rotation(self.cayley[v], self.modulus)

    def matrix(self, v: int) -> np.ndarray:
        r = self.rotation(v)
        t = self.trans[v].reshape(3, 1).astype(r.dtype, copy=False)
        return np.concatenate([r, t], axis=1)

    def center(self, v: int) -> np.ndarray:
        r = self.rotation(v)
        c3 = -(r.T @ self.trans[v])
        if self.modulus is not None:
            c3 %= self.modulus
        return np.concatenate([c3, [1]])

    def params(self) -> np.ndarray:
        chunks = [self.cayley[1], self.trans[1, 1:]]
        for v in range(2, self.m):
            chunks.append(self.cayley[v])
            chunks.append(self.trans[v])
        return np.concatenate(chunks)

    @classmethod
    def from_params(cls, m: int, vec, modulus: int | None = None):
        vec = np.asarray(vec)
        if vec.shape != (6 * m - 7,):
            raise SceneError(f"expected {6 * m - 7} camera parameters")
        dt = _dtype(modulus)
        cay = np.zeros((m, 3), dtype=dt)
        tr = np.zeros((m, 3), dtype=dt)
        cay[1] = vec[0:3]
        tr[1] = np.concatenate([np.ones(1, dtype=dt), vec[3:5].astype(dt)])
        for v in range(2, m):
            base = 5 + 6 * (v - 2)
            cay[v] = vec[base : base + 3]
            tr[v] = vec[base + 3 : base + 6]
        if modulus is not None:
            cay %= modulus
            tr %= modulus
        return cls(cay, tr, modulus)


@dataclass
class JointImage:
    """Per-view projections: points (m x p x 3), lines (m x l x 3)."""

    points: np.ndarray
    lines: np.ndarray
    modulus: int | None = None

    @property
    def m(self) -> int:
        return self.points.shape[0]

    def to_dict(self) -> dict:
        return {
            "points": _array_out(self.points),
            "lines": _array_out(self.lines),
            "modulus": self.modulus,
        }


@dataclass
class Instance:
    """A consistent sampled problem instance with its chart coordinates."""

    entry: CatalogEntry
    arrangement: Arrangement
    cameras: CameraConfig
    image: JointImage
    chart_point: np.ndarray
    modulus: int | None = None


def _array_out(a: np.ndarray):
    if np.iscomplexobj(a):
        return {"re": a.real.tolist(), "im": a.imag.tolist()}
    return a.tolist()


# ---------------------------------------------------------------------------
# sampling


def sample_arrangement(
    inc: IncidenceRelation,
    rng: np.random.Generator,
    modulus: int | None = None,
) -> Arrangement:
    """Draw a generic world arrangement realizing ``inc``."""
    for _ in range(RETRY_BUDGET):
        try:
            return _try_arrangement(inc, rng, modulus)
        except GenericityError:
            continue
    raise SamplingError("could not sample a generic arrangement")


def _affine_point(rng, modulus):
    x = _rand(rng, 3, modulus)
    return np.concatenate([x, np.ones(1, dtype=_dtype(modulus))])


def _try_arrangement(inc, rng, modulus) -> Arrangement:
    p = inc.p
    dt = _dtype(modulus)
    points = np.zeros((p, 4), dtype=dt)
    placed: set[int] = set()
    for i in inc.free_points():
        points[i] = _affine_point(rng, modulus)
        placed.add(i)
    for d, (pa, pb) in inc.dependents():
        lam = _rand(rng, (), modulus)
        if not _invertible(lam, modulus) or not _invertible(lam - 1, modulus):
            raise GenericityError("degenerate dependent-point parameter")
        x = points[pa] + lam * (points[pb] - points[pa])
        if modulus is not None:
            x %= modulus
        points[d] = x
        placed.add(d)

    group_sets = [set(g) for g in inc.groups]
    for i in range(p):
        for j in range(i + 1, p):
            if _proj_equal(points[i], points[j], modulus):
                raise GenericityError("coincident world points")
            for k in range(j + 1, p):
                trip = {i, j, k}
                in_group = any(trip <= g for g in group_sets)
                r = _rank(points[[i, j, k]], modulus)
                if in_group and r != 2:
                    raise GenericityError("collinear group degenerated")
                if not in_group and r != 3:
                    raise GenericityError("spurious collinear triple")

    spans = np.zeros((inc.l, 2, 4), dtype=dt)
    for j, a in enumerate(inc.anchors):
        spans[j, 0] = points[a]
        spans[j, 1] = _affine_point(rng, modulus)
    for j in range(inc.la, inc.l):
        spans[j, 0] = _affine_point(rng, modulus)
        spans[j, 1] = _affine_point(rng, modulus)

    for j in range(inc.l):
        if _proj_equal(spans[j, 0], spans[j, 1], modulus):
            raise GenericityError("degenerate line span")
        anchor = inc.anchors[j] if j < inc.la else None
        for i in range(p):
            on = _on_line(points[i], spans[j, 0], spans[j, 1], modulus)
            if on != (i == anchor):
                raise GenericityError("unexpected point-line incidence")
        for k in range(j + 1, inc.l):
            if _same_line(spans[j], spans[k], modulus):
                raise GenericityError("coincident observed lines")
        for g in inc.groups:
            gpts = points[list(g[:2])]
            if _same_line(spans[j], gpts, modulus):
                raise GenericityError("observed line hits a collinear group")
    return Arrangement(inc, points, spans, modulus)


def sample_cameras(
    m: int,
    rng: np.random.Generator,
    modulus: int | None = None,
) -> CameraConfig:
    """Draw a generic gauge-fixed camera configuration for ``m`` views."""
    if m < 2:
        raise SceneError("need at least two views")
    for _ in range(RETRY_BUDGET):
        try:
            return _try_cameras(m, rng, modulus)
        except GenericityError:
            continue
    raise SamplingError("could not sample generic cameras")


def _try_cameras(m, rng, modulus) -> CameraConfig:
    dt = _dtype(modulus)
    cay = np.zeros((m, 3), dtype=dt)
    tr = np.zeros((m, 3), dtype=dt)
    for v in range(1, m):
        cay[v] = _rand(rng, 3, modulus)
        kappa = 1 + np.sum(cay[v] * cay[v])
        if not _invertible(kappa, modulus):
            raise GenericityError("Cayley denominator vanishes")
        tr[v] = _rand(rng, 3, modulus)
    tr[1, 0] = 1  # gauge: unit first coordinate of the second translation
    cams = CameraConfig(cay, tr, modulus)
    centers = np.stack([cams.center(v) for v in range(m)])
    for a in range(m):
        for b in range(a + 1, m):
            if _proj_equal(centers[a], centers[b], modulus):
                raise GenericityError("coincident camera centers")
    return cams


# ---------------------------------------------------------------------------
# projection and triangulation


def project(arr: Arrangement, cams: CameraConfig) -> JointImage:
    """Project an arrangement through cameras, enforcing image genericity.

    Raises :class:`GenericityError` unless, in every view, projected points
    are distinct and affinely normalizable, observed lines are distinct and
    nonzero, only the prescribed point-line incidences hold, and point
    triples outside a collinear group stay non-collinear.
    """
    modulus = arr.modulus
    inc = arr.incidence
    m = cams.m
    p = inc.p
    dt = _dtype(modulus)
    pts = np.zeros((m, p, 3), dtype=dt)
    lns = np.zeros((m, inc.l, 3), dtype=dt)
    group_sets = [set(g) for g in inc.groups]

    for v in range(m):
        pm = cams.matrix(v)
        for i in range(p):
            x = pm @ arr.points[i]
            if modulus is not None:
                x %= modulus
            if not _nonzero(x, modulus):
                raise GenericityError("world point at a camera center")
            scale = np.abs(x).max() if modulus is None else 1.0
            if not _invertible(x[2], modulus, scale):
                raise GenericityError("image point not affinely normalizable")
            pts[v, i] = x
        for j in range(inc.l):
            a = pm @ arr.line_spans[j, 0]
            b = pm @ arr.line_spans[j, 1]
            ln = np.cross(a, b)
            if modulus is not None:
                ln %= modulus
            if not _nonzero(ln, modulus):
                raise GenericityError("observed line through a camera center")
            lns[v, j] = ln

        for i in range(p):
            for k in range(i + 1, p):
                if _proj_equal(pts[v, i], pts[v, k], modulus):
                    raise GenericityError("coincident image points")
                for q in range(k + 1, p):
                    trip = {i, k, q}
                    if any(trip <= g for g in group_sets):
                        continue
                    if _rank(pts[v, [i, k, q]], modulus) != 3:
                        raise GenericityError("spurious image collinearity")
        for j in range(inc.l):
            anchor = inc.anchors[j] if j < inc.la else None
            for i in range(p):
                dot = pts[v, i] @ lns[v, j]
                if modulus is not None:
                    dot %= modulus
                scale = (
                    1.0
                    if modulus is not None
                    else np.abs(pts[v, i]).max() * np.abs(lns[v, j]).max()
                )
                if i == anchor:
                    ok = not _invertible(dot, modulus, scale)
                else:
                    ok = _invertible(dot, modulus, scale)
                if not ok:
                    raise GenericityError("image incidence pattern broken")
            for k in range(j + 1, inc.l):
                if _proj_equal(lns[v, j], lns[v, k], modulus):
                    raise GenericityError("coincident image lines")
    return JointImage(pts, lns, modulus)


def _nullspace(mat, modulus, expect: int) -> np.ndarray:
    if modulus is not None:
        basis = algebra.pf_nullspace(mat, modulus)
    else:
        basis = algebra.cx_nullspace(mat, rtol=1e-8)
    if basis.shape[1] != expect:
        raise InconsistentImageError(
            f"expected nullity {expect}, got {basis.shape[1]}"
        )
    return basis


def _cross_mat(x):
    return np.array(
        [[0 * x[0], -x[2], x[1]], [x[2], 0 * x[0], -x[0]], [-x[1], x[0], 0 * x[0]]]
    )


def triangulate(img: JointImage, cams: CameraConfig) -> tuple[np.ndarray, np.ndarray]:
    """Recover world points and line spans from a consistent joint image.

    Returns ``(points, line_spans)``; raises
    :class:`InconsistentImageError` when the stacked systems do not have the
    nullity a consistent image must produce.
    """
    modulus = img.modulus
    m, p = img.points.shape[:2]
    nl = img.lines.shape[1]
    mats = [cams.matrix(v) for v in range(m)]
    points = np.zeros((p, 4), dtype=_dtype(modulus))
    for i in range(p):
        rows = []
        for v in range(m):
            block = _cross_mat(img.points[v, i]) @ mats[v]
            if modulus is not None:
                block %= modulus
            rows.append(block)
        basis = _nullspace(np.concatenate(rows, axis=0), modulus, 1)
        points[i] = basis[:, 0]
    spans = np.zeros((nl, 2, 4), dtype=_dtype(modulus))
    for j in range(nl):
        rows = []
        for v in range(m):
            plane = mats[v].T @ img.lines[v, j]
            if modulus is not None:
                plane %= modulus
            rows.append(plane)
        basis = _nullspace(np.stack(rows), modulus, 2)
        spans[j] = basis.T
    return points, spans


# ---------------------------------------------------------------------------
# the affine image chart


class Chart:
    """Minimal affine coordinates on the joint-image variety of a problem.

    Per view: (u, w) for each free point, the affine parameter t along the
    parents' image segment for each dependent point, a slope s for each
    adjacent line (the line through the anchor with image equation
    -s*u + w + (s*u_a - w_a) = 0), and (f1, f2) for each free line
    normalized to last coordinate 1.
    """

    def __init__(self, entry: CatalogEntry):
        self.entry = entry
        self.incidence = entry.incidence
        self.m = entry.signature.m
        inc = self.incidence
        self.free_pts = inc.free_points()
        self.deps = inc.dependents()
        self.per_view = (
            2 * len(self.free_pts) + len(self.deps) + inc.la + 2 * inc.free_lines
        )
        self.dim = self.m * self.per_view
        self._pt_slot = {}
        off = 0
        for i in self.free_pts:
            self._pt_slot[i] = off
            off += 2
        self._dep_slot = {}
        for d, _ in self.deps:
            self._dep_slot[d] = off
            off += 1
        self._adj_slot = {}
        for j in range(inc.la):
            self._adj_slot[j] = off
            off += 1
        self._free_slot = {}
        for j in range(inc.la, inc.l):
            self._free_slot[j] = off
            off += 2
        assert off == self.per_view

    def _div(self, num, den, modulus, scale=1.0):
        if modulus is not None:
            den_i = int(den) % modulus
            if den_i == 0:
                raise ChartError("zero denominator in chart embedding")
            return (int(num) % modulus) * pow(den_i, -1, modulus) % modulus
        if abs(den) <= 1e-12 * max(1.0, scale):
            raise ChartError("near-zero denominator in chart embedding")
        return num / den

    def embed(self, img: JointImage) -> np.ndarray:
        """Chart coordinates of a joint image; raises ChartError when the
        affine normalizations required by the chart are unavailable."""
        modulus = img.modulus
        inc = self.incidence
        y = np.zeros(self.dim, dtype=_dtype(modulus))
        for v in range(self.m):
            base = v * self.per_view
            affine = {}
            for i in range(inc.p):
                x = img.points[v, i]
                scale = np.abs(x).max() if modulus is None else 1.0
                u = self._div(x[0], x[2], modulus, scale)
                w = self._div(x[1], x[2], modulus, scale)
                affine[i] = (u, w)
            for i in self.free_pts:
                y[base + self._pt_slot[i]] = affine[i][0]
                y[base + self._pt_slot[i] + 1] = affine[i][1]
            for d, (pa, pb) in self.deps:
                ua, wa = affine[pa]
                ub, wb = affine[pb]
                du, dw = ub - ua, wb - wa
                if modulus is None and abs(dw) > abs(du):
                    t = self._div(affine[d][1] - wa, dw, modulus, abs(dw) + 1)
                elif modulus is not None and int(du) % modulus == 0:
                    t = self._div(affine[d][1] - wa, dw, modulus)
                else:
                    t = self._div(affine[d][0] - ua, du, modulus, abs(du) + 1)
                y[base + self._dep_slot[d]] = t
            for j in range(inc.la):
                ln = img.lines[v, j]
                scale = np.abs(ln).max() if modulus is None else 1.0
                s = self._div(-ln[0], ln[1], modulus, scale)
                y[base + self._adj_slot[j]] = s
            for j in range(inc.la, inc.l):
                ln = img.lines[v, j]
                scale = np.abs(ln).max() if modulus is None else 1.0
                y[base + self._free_slot[j]] = self._div(ln[0], ln[2], modulus, scale)
                y[base + self._free_slot[j] + 1] = self._div(
                    ln[1], ln[2], modulus, scale
                )
        return y

    def lift(self, y: np.ndarray, modulus: int | None = None) -> JointImage:
        """Joint image with normalized coordinates at chart point ``y``."""
        inc = self.incidence
        dt = _dtype(modulus)
        y = np.asarray(y)
        pts = np.zeros((self.m, inc.p, 3), dtype=dt if modulus else y.dtype)
        lns = np.zeros((self.m, inc.l, 3), dtype=dt if modulus else y.dtype)
        for v in range(self.m):
            base = v * self.per_view
            for i in self.free_pts:
                u, w = y[base + self._pt_slot[i]], y[base + self._pt_slot[i] + 1]
                pts[v, i] = (u, w, 1)
            for d, (pa, pb) in self.deps:
                t = y[base + self._dep_slot[d]]
                xa, xb = pts[v, pa], pts[v, pb]
                x = xa + t * (xb - xa)
                pts[v, d] = x % modulus if modulus is not None else x
            for j in range(inc.la):
                s = y[base + self._adj_slot[j]]
                ua, wa = pts[v, inc.anchors[j]][:2]
                ln = np.array([-s, 1, s * ua - wa])
                lns[v, j] = ln % modulus if modulus is not None else ln
            for j in range(inc.la, inc.l):
                f1 = y[base + self._free_slot[j]]
                f2 = y[base + self._free_slot[j] + 1]
                lns[v, j] = (f1, f2, 1)
        return JointImage(pts, lns, modulus)


def sample_instance(
    entry: CatalogEntry,
    rng: np.random.Generator,
    modulus: int | None = None,
    accept=None,
) -> Instance:
    """Sample a generic consistent instance of a problem.

    ``accept`` may be a callback Instance -> bool adding caller-side
    genericity requirements; rejected candidates are resampled within the
    retry budget.
    """
    chart = Chart(entry)
    m = entry.signature.m
    for _ in range(RETRY_BUDGET):
        try:
            arr = sample_arrangement(entry.incidence, rng, modulus)
            cams = sample_cameras(m, rng, modulus)
            img = project(arr, cams)
            y = chart.embed(img)
        except (GenericityError, ChartError, SamplingError):
            continue
        inst = Instance(entry, arr, cams, img, y, modulus)
        if accept is not None and not accept(inst):
            continue
        return inst
    raise SamplingError(f"no generic instance for {entry.label} after retries")
