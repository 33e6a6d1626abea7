"""Algebraic degrees by numerical monodromy.

For a minimal problem the camera solutions of F(C; y) = 0 at a generic
image y form a finite set whose size is the problem's algebraic degree.
Monodromy explores that set: starting from one exactly constructed
camera/image pair, the image is moved around random triangle loops
y0 -> y1 -> y2 -> y0 in chart space while the known solutions are
continued numerically; each loop permutes the fiber and typically drags
known solutions onto new ones.  Tracking uses the bordered subsystem
(valid wherever the anchor minors stay invertible); every candidate is
accepted only after passing scale-invariant residual, Cayley-denominator
and reprojection filters against the full system, so spurious branches
cannot inflate the count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .catalog import CatalogEntry
from .equations import ConstraintSystem, encode
from .scene import CameraConfig, SamplingError, sample_instance

__all__ = [
    "MonodromyError",
    "SeedError",
    "TrackerSettings",
    "StopPolicy",
    "LoopRecord",
    "DegreeReport",
    "track_segment",
    "compute_degree",
    "verify_solution_set",
    "VerificationReport",
]


# Loop replication fills tracker batches up to roughly this many paths;
# one batched call amortizes its fixed cost over every path it carries.
_BATCH_TARGET = 256


class MonodromyError(Exception):
    pass


class SeedError(MonodromyError):
    """No valid start pair could be constructed."""


@dataclass
class TrackerSettings:
    """Predictor-corrector parameters for path continuation.

    The corrector tolerance is deliberately loose: validity of anything the
    tracker returns is decided by the endpoint refinement and the merge
    filters, not by the tracker itself, so a tight tolerance here only
    kills paths near ill-conditioned pinches without buying correctness.
    ``max_path_steps`` bounds the step attempts of a single path; paths
    that limp along at tiny step sizes get cut off instead of burning the
    whole iteration budget.
    """

    initial_step: float = 0.1
    max_step: float = 0.2
    min_step: float = 1e-7
    newton_tol: float = 1e-9
    max_newton_iters: int = 6
    endpoint_tol: float = 1e-13
    endpoint_iters: int = 8
    divergence_bound: float = 1e8
    grow_after: int = 3
    step_factor: float = 2.0
    max_path_steps: int = 200
    max_iterations: int = 200_000  # total tracker iterations, safety net
    tube_min_step: float = 0.02  # tube guard applies to steps at least this long
    rk4_min_step: float = 0.02  # below this the predictor drops to Euler


@dataclass
class StopPolicy:
    """When to stop looping.

    ``stall_loops``: stop after this many consecutive loops without a new
    solution (the stabilization heuristic).  ``target``: stop as soon as
    the count reaches this value (used against certified reference
    degrees; the stop reason records which rule fired).  ``max_loops`` and
    ``wall_time`` are hard budgets.
    """

    stall_loops: int = 12
    target: int | None = None
    max_loops: int = 400
    wall_time: float | None = None


@dataclass
class LoopRecord:
    loop: int
    tracked: int
    survived: int
    new_found: int
    total_after: int
    seconds: float

    def to_dict(self) -> dict:
        return {
            "loop": self.loop,
            "tracked": self.tracked,
            "survived": self.survived,
            "new_found": self.new_found,
            "total_after": self.total_after,
            "seconds": round(self.seconds, 3),
        }


@dataclass
class DegreeReport:
    """Outcome of a monodromy run for one problem."""

    label: str
    m: int
    seed: int
    degree: int
    stop_reason: str
    solutions: np.ndarray  # (degree, 6m-7) complex camera parameters
    chart_point: np.ndarray  # base image y0 (complex chart coordinates)
    loops: list[LoopRecord] = field(default_factory=list)
    path_failures: int = 0
    rejected: int = 0
    seconds: float = 0.0
    reference: int | None = None
    reference_kind: str | None = None

    @property
    def matches_reference(self) -> bool | None:
        if self.reference is None or self.reference_kind is None:
            return None
        if self.reference_kind == "bound":
            return None  # a lower bound cannot be confirmed by equality
        return self.degree == self.reference

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "m": self.m,
            "seed": self.seed,
            "degree": self.degree,
            "stop_reason": self.stop_reason,
            "loops": [r.to_dict() for r in self.loops],
            "path_failures": self.path_failures,
            "rejected": self.rejected,
            "seconds": round(self.seconds, 3),
            "reference": self.reference,
            "reference_kind": self.reference_kind,
            "matches_reference": self.matches_reference,
        }


# ---------------------------------------------------------------------------
# batched linear algebra helpers


def _solve_ls(jac, rhs):
    """Least-squares solve J x = rhs via batched QR.

    Returns (x, bad) where bad marks batch items whose system was
    non-finite or exactly singular; their rows come back as zeros.
    Diverging paths overflow by design, so warnings are silenced and the
    bad mask carries the information instead.  QR keeps the solve at
    cond(J) instead of the cond(J)^2 of normal equations, which is what
    lets the corrector converge on paths passing near ill-conditioned
    pinches of the tracked curve.
    """
    with np.errstate(all="ignore"):
        bad = ~np.isfinite(jac).all(axis=(-2, -1)) | ~np.isfinite(rhs).all(axis=-1)
        k, n = jac.shape[-2], jac.shape[-1]
        safe = np.where(bad[..., None, None], np.eye(k, n, dtype=jac.dtype), jac)
        q, r = np.linalg.qr(safe, mode="reduced")
        b = np.einsum("...ji,...j->...i", np.conj(q), rhs)
        sing = (np.diagonal(r, axis1=-2, axis2=-1) == 0).any(axis=-1)
        bad = bad | sing
        r = np.where(bad[..., None, None], np.eye(n, dtype=jac.dtype), r)
        b = np.where(bad[..., None], 0.0, b)
        x = np.linalg.solve(r, b[..., None])[..., 0]
    return x, bad


def _tangent(system, c_arr, t, ya, yb):
    """dC/dt on the tracked curve: solve J dC = -F_t."""
    with np.errstate(all="ignore"):
        _, jac, ft = system.tangent_eval(c_arr, t, ya, yb)
    dc, bad = _solve_ls(jac, -ft)
    return dc, bad


def _arc(gammas, s):
    """Moebius arc through a chart segment: tau(s) and dtau/ds.

    tau(s) = g s / (1 + (g - 1) s) fixes tau(0) = 0 and tau(1) = 1 for
    every twist g, so the endpoint fibers are unchanged, but in between
    the chart takes a complex detour.  The detour is what carries paths
    around singular strata that the straight chart line passes close to;
    straight segments on some problems shed a third of their paths onto
    the Cayley-singular component, which a generic arc simply goes around.
    ``gammas`` None keeps the straight parameterization.
    """
    if gammas is None:
        return s, np.ones_like(s)
    den = 1.0 + (gammas - 1.0) * s
    return gammas * s / den, gammas / (den * den)


def _segment_arcs(rng, n):
    """Random arc twists for a batch of paths.

    Phases keep away from 0 (a straight segment, no detour) and from pi
    (the Moebius map's pole lands on the segment midpoint); moduli spread
    over an annulus so different draws bow the detour through genuinely
    different territory rather than a one-parameter family of bends.  The
    ranges keep the pole of tau safely off the unit interval and the
    detour magnitude below about twice the segment length.
    """
    u = rng.uniform(0.3, 2.4, size=n)
    sgn = np.where(rng.random(size=n) < 0.5, 1.0, -1.0)
    r = rng.uniform(0.7, 1.4, size=n)
    return r * np.exp(1j * sgn * u)


def _newton(system, c_arr, t, ya, yb, tol, iters):
    """Batched Gauss-Newton correction onto the curve at fixed t.

    Returns (C, converged).  Non-finite or singular iterations poison the
    affected rows, which then fail the convergence mask.  Rows freeze as
    soon as their update is below tolerance, so the typical cost is two or
    three evaluations per row even when ``iters`` is generous.
    """
    c_arr = np.array(c_arr, dtype=np.complex128)
    t = np.asarray(t)
    ya = np.asarray(ya, dtype=np.complex128)
    yb = np.asarray(yb, dtype=np.complex128)
    per_path = ya.ndim > 1 or yb.ndim > 1
    n = c_arr.shape[0]
    conv = np.zeros(n, dtype=bool)
    dead = np.zeros(n, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            idx = np.flatnonzero(~conv & ~dead)
            if not len(idx):
                break
            yai = ya[idx] if per_path else ya
            ybi = yb[idx] if per_path else yb
            f, jac, _ = system.tangent_eval(c_arr[idx], t[idx], yai, ybi)
            delta, bad = _solve_ls(jac, -f)
            cnew = c_arr[idx] + delta
            cnew[bad] = np.nan
            c_arr[idx] = cnew
            nd = np.abs(delta).max(axis=-1)
            nc = 1.0 + np.abs(cnew).max(axis=-1)
            good = ~bad & np.isfinite(nd) & (nd <= tol * nc)
            conv[idx[good]] = True
            dead[idx[bad]] = True
    return c_arr, conv


def track_segment(
    system,
    c_start,
    ya,
    yb,
    settings: TrackerSettings | None = None,
    gammas=None,
):
    """Continue a batch of solutions from image ya to image yb.

    Adaptive RK4 prediction along y(t) = ya + tau(t) (yb - ya) with
    Gauss-Newton correction; per-path step control with halving on failure
    and growth after ``grow_after`` consecutive accepted steps.  ``gammas``
    supplies per-path Moebius arc twists (see :func:`_arc`); None tracks the
    straight chart segment.  ``ya`` and ``yb`` may be single chart points
    shared by the batch or arrays with one segment endpoint per path, which
    lets one call carry several loop geometries at once.  Returns the
    endpoint parameters and a success mask.
    """
    st = settings or TrackerSettings()
    c_cur = np.array(np.atleast_2d(c_start), dtype=np.complex128)
    npaths = c_cur.shape[0]
    ya = np.asarray(ya, dtype=np.complex128)
    yb = np.asarray(yb, dtype=np.complex128)
    per_path = ya.ndim > 1 or yb.ndim > 1
    if per_path:
        ya = np.broadcast_to(ya, (npaths, ya.shape[-1]))
        yb = np.broadcast_to(yb, (npaths, yb.shape[-1]))

    def sel(y, which):
        return y[which] if per_path else y

    gam = None
    if gammas is not None:
        gam = np.asarray(gammas, dtype=np.complex128)
        if gam.shape != (npaths,):
            raise ValueError("gammas must supply one arc twist per path")
    t = np.zeros(npaths)
    h = np.full(npaths, st.initial_step)
    ok = np.ones(npaths, dtype=bool)
    done = np.zeros(npaths, dtype=bool)
    streak = np.zeros(npaths, dtype=int)
    attempts = np.zeros(npaths, dtype=int)
    iterations = 0
    while True:
        active = ok & ~done
        if not active.any():
            break
        iterations += 1
        if iterations > st.max_iterations:
            ok[active] = False
            break
        idx = np.flatnonzero(active)
        hc = np.minimum(h[idx], 1.0 - t[idx])
        ca, ta = c_cur[idx], t[idx]
        yai, ybi = sel(ya, idx), sel(yb, idx)
        half = 0.5 * hc
        ga = gam[idx] if gam is not None else None
        ta0, da0 = _arc(ga, ta)
        tam, dam = _arc(ga, ta + half)
        ta1, da1 = _arc(ga, ta + hc)
        k1, b1 = _tangent(system, ca, ta0, yai, ybi)
        k1 = k1 * da0[:, None]
        # Euler prediction is plenty below rk4_min_step: the corrector does
        # the real work in that regime, and skipping the three extra RK4
        # stages is most of the cost of a path grinding through a pinch.
        pred = ca + hc[:, None] * k1
        bad_st = b1.copy()
        r4 = np.flatnonzero(hc >= st.rk4_min_step)
        if len(r4):
            ca4, h4, hc4, k14 = ca[r4], half[r4], hc[r4], k1[r4]
            ya4 = yai[r4] if per_path else yai
            yb4 = ybi[r4] if per_path else ybi
            tam4, dam4 = tam[r4], dam[r4]
            k2, b2 = _tangent(system, ca4 + h4[:, None] * k14, tam4, ya4, yb4)
            k2 = k2 * dam4[:, None]
            k3, b3 = _tangent(system, ca4 + h4[:, None] * k2, tam4, ya4, yb4)
            k3 = k3 * dam4[:, None]
            k4, b4 = _tangent(system, ca4 + hc4[:, None] * k3, ta1[r4], ya4, yb4)
            k4 = k4 * da1[r4][:, None]
            pred[r4] = ca4 + (hc4 / 6.0)[:, None] * (k14 + 2.0 * (k2 + k3) + k4)
            bad_st[r4] |= b2 | b3 | b4
        corr, conv = _newton(
            system, pred, ta1, yai, ybi, st.newton_tol, st.max_newton_iters
        )
        with np.errstate(invalid="ignore"):
            norm = np.abs(corr).max(axis=-1)
            # Tube guard: the corrector must move the prediction by much
            # less than the prediction itself moved, else the predictor
            # likely left the tube around the tracked path and Newton may
            # have converged onto a nearby sheet.  Such basin hops converge
            # cleanly, so only this ratio test catches them.  Hops are a
            # large-step failure mode; below tube_min_step the path is
            # grinding through an ill-conditioned pinch where corrections
            # are legitimately big, so the guard stands down there rather
            # than starving the step size to death.
            pred_dist = np.abs(pred - ca).max(axis=-1)
            corr_dist = np.abs(corr - pred).max(axis=-1)
            tube = (hc < st.tube_min_step) | (
                corr_dist <= 0.25 * pred_dist + st.newton_tol * (1.0 + norm)
            )
            good = (
                conv
                & tube
                & ~bad_st
                & np.isfinite(corr).all(axis=-1)
                & (norm < st.divergence_bound)
            )
        gi = idx[good]
        c_cur[gi] = corr[good]
        t[gi] = ta[good] + hc[good]
        done[gi] = t[gi] >= 1.0 - 1e-12
        streak[gi] += 1
        grown = gi[streak[gi] >= st.grow_after]
        h[grown] = np.minimum(h[grown] * st.step_factor, st.max_step)
        streak[grown] = 0
        bi = idx[~good]
        h[bi] = hc[~good] * 0.5
        streak[bi] = 0
        ok[bi] = h[bi] >= st.min_step
        attempts[idx] += 1
        capped = idx[attempts[idx] >= st.max_path_steps]
        ok[capped] &= done[capped]
    # Last-ditch rescue: paths that died mid-segment (step collapse or
    # attempt cap) try a direct Newton solve at t = 1 from wherever they
    # stopped.  Rescued endpoints need not be the analytic continuation of
    # their start; the merge filters decide validity, and for discovery any
    # landing on the variety adds mixing.  Failures stay failed.
    failed = np.flatnonzero(~(ok & done))
    if len(failed):
        finite = np.isfinite(c_cur[failed]).all(axis=-1)
        fi = failed[finite]
        if len(fi):
            rescued, conv = _newton(
                system,
                c_cur[fi],
                np.ones(len(fi)),
                sel(ya, fi),
                sel(yb, fi),
                st.endpoint_tol,
                2 * st.endpoint_iters,
            )
            c_cur[fi[conv]] = rescued[conv]
            ok[fi[conv]] = True
            done[fi[conv]] = True
    if done.any():
        di = np.flatnonzero(done)
        refined, conv = _newton(
            system,
            c_cur[di],
            np.ones(len(di)),
            sel(ya, di),
            sel(yb, di),
            st.endpoint_tol,
            st.endpoint_iters,
        )
        c_cur[di] = refined
        ok[di] &= conv
    return c_cur, ok & done


def _track_with_retries(system, starts, ya, yb, settings, rng, rounds=2):
    """Track a segment, retrying failed paths with fresh detours.

    Path deaths are not random: a path whose continuation passes close to a
    singular stratum tends to die for most arc draws, and solutions shielded
    this way are exactly the ones a stalled run is missing.  Retrying a
    failed path re-rolls its Moebius arc, and the final round routes it
    through a random waypoint chart instead, which moves the whole segment
    onto different complex lines rather than just bending the old one.
    """
    ya = np.asarray(ya, dtype=np.complex128)
    yb = np.asarray(yb, dtype=np.complex128)
    per_path = ya.ndim > 1 or yb.ndim > 1
    if per_path:
        ya = np.broadcast_to(ya, (len(starts), ya.shape[-1]))
        yb = np.broadcast_to(yb, (len(starts), yb.shape[-1]))

    def sel(y, which):
        return y[which] if per_path else y

    ends, ok = track_segment(
        system, starts, ya, yb, settings, gammas=_segment_arcs(rng, len(starts))
    )
    for last in [False] * (rounds - 1) + [True]:
        bad = np.flatnonzero(~ok)
        if not len(bad):
            break
        ya_b, yb_b = sel(ya, bad), sel(yb, bad)
        if last:
            w = _random_chart(rng, system.chart.dim)
            mid, okm = track_segment(
                system, starts[bad], ya_b, w, settings,
                gammas=_segment_arcs(rng, len(bad)),
            )
            e2 = np.full_like(mid, np.nan)
            k2 = np.zeros(len(bad), dtype=bool)
            hit = np.flatnonzero(okm)
            if len(hit):
                e3, k3 = track_segment(
                    system, mid[hit], w, sel(yb_b, hit),
                    settings, gammas=_segment_arcs(rng, len(hit)),
                )
                e2[hit] = e3
                k2[hit] = k3
        else:
            e2, k2 = track_segment(
                system, starts[bad], ya_b, yb_b, settings,
                gammas=_segment_arcs(rng, len(bad)),
            )
        ends[bad[k2]] = e2[k2]
        ok[bad[k2]] = True
    return ends, ok


# ---------------------------------------------------------------------------
# solution bookkeeping


def _pair_distance(u, v):
    """Scale-normalized infinity distance between parameter vectors."""
    du = np.abs(u - v).max(axis=-1)
    su = np.abs(u).max(axis=-1)
    sv = np.abs(v).max(axis=-1)
    return du / (1.0 + np.maximum(su, sv))


def _is_novel(candidate, known, tol):
    if len(known) == 0:
        return True
    return bool(_pair_distance(known, candidate[None, :]).min() > tol)


def _proj_gap(a, b, axis=-1):
    """Projective distance of homogeneous vectors.

    Computed as the relative norm of the component of ``a`` orthogonal to
    ``b``; unlike the Gram-determinant formula this stays accurate far
    below the verification thresholds when the vectors are nearly parallel.
    """
    na = np.maximum(np.linalg.norm(a, axis=axis), 1e-300)
    nb = np.maximum(np.linalg.norm(b, axis=axis), 1e-300)
    bn = b / np.expand_dims(nb, axis)
    coeff = np.sum(a * np.conj(bn), axis=axis)
    perp = a - np.expand_dims(coeff, axis) * bn
    return np.linalg.norm(perp, axis=axis) / na


def _reprojection_gap(system, c_vec, y0) -> float:
    """Worst projective gap between the image and its own reprojection.

    Lifts y0 to a joint image, triangulates world points and lines from the
    candidate cameras by normalized SVD, reprojects, and compares.  A true
    solution admits consistent world data, so the gap is at rounding level;
    a spurious one cannot.
    """
    img = system.chart.lift(np.asarray(y0, dtype=np.complex128))
    m = system.m
    cams = CameraConfig.from_params(m, np.asarray(c_vec, dtype=np.complex128))
    mats = [cams.matrix(v).astype(np.complex128) for v in range(m)]
    inc = system.entry.incidence
    worst = 0.0
    for i in range(inc.p):
        rows = []
        for v in range(m):
            x = img.points[v, i]
            cross = np.array(
                [
                    [0, -x[2], x[1]],
                    [x[2], 0, -x[0]],
                    [-x[1], x[0], 0],
                ],
                dtype=np.complex128,
            )
            block = cross @ mats[v]
            for r in block:
                nrm = np.linalg.norm(r)
                if nrm > 0:
                    rows.append(r / nrm)
        _, _, vh = np.linalg.svd(np.stack(rows))
        world = np.conj(vh[-1])
        for v in range(m):
            worst = max(worst, float(_proj_gap(mats[v] @ world, img.points[v, i])))
    for j in range(inc.l):
        rows = []
        for v in range(m):
            plane = mats[v].T @ img.lines[v, j]
            nrm = np.linalg.norm(plane)
            if nrm == 0:
                return np.inf
            rows.append(plane / nrm)
        _, _, vh = np.linalg.svd(np.stack(rows))
        a, b = np.conj(vh[-1]), np.conj(vh[-2])
        for v in range(m):
            la, lb = mats[v] @ a, mats[v] @ b
            lv = np.cross(la, lb)
            worst = max(worst, float(_proj_gap(lv, img.lines[v, j])))
    return worst


# ---------------------------------------------------------------------------
# the monodromy driver


def _seed_pair(entry, system, rng):
    try:
        inst = sample_instance(
            entry,
            rng,
            None,
            accept=lambda i: system.seed_stacks_ok(i.cameras.params(), i.chart_point),
        )
    except SamplingError as exc:
        raise SeedError(f"no valid start pair for {entry.label}: {exc}") from exc
    return inst.cameras.params().astype(np.complex128), inst.chart_point.astype(
        np.complex128
    )


def _random_chart(rng, dim):
    return (rng.normal(size=dim) + 1j * rng.normal(size=dim)) / np.sqrt(2.0)


def _accept_candidates(
    system,
    candidates,
    y0,
    solutions,
    settings,
    residual_tol,
    reproj_tol,
    dedup_tol,
):
    """Run the merge filters; returns (accepted list, rejected count)."""
    accepted = []
    rejected = 0
    kappa_floor = 1e-8
    for cand in candidates:
        if not np.isfinite(cand).all():
            rejected += 1
            continue
        if np.abs(cand).max() >= settings.divergence_bound:
            rejected += 1
            continue
        pool = solutions if not accepted else np.vstack([solutions] + accepted)
        if not _is_novel(cand, pool, dedup_tol):
            continue
        if np.abs(system.kappas(cand)).min() <= kappa_floor:
            rejected += 1
            continue
        if system.scaled_residual(cand, y0, "full").max() >= residual_tol:
            rejected += 1
            continue
        # Rank nondegeneracy: every point stack must cut out an actual 3D
        # point (rank 3) and every visible line an actual 3D line (rank 2).
        # The minor variety has spurious components where stacks collapse
        # further (e.g. the two planes of a group line coinciding, which
        # leaves the group points coplanar instead of collinear); residual
        # and reprojection both pass there, so the rank check is what
        # keeps those branches out of the count.
        if not system.seed_stacks_ok(cand, y0):
            rejected += 1
            continue
        if _reprojection_gap(system, cand, y0) >= reproj_tol:
            rejected += 1
            continue
        accepted.append(cand)
    return accepted, rejected


def compute_degree(
    entry: CatalogEntry,
    seed: int = 0,
    settings: TrackerSettings | None = None,
    stop: StopPolicy | None = None,
    system: ConstraintSystem | None = None,
    residual_tol: float = 1e-9,
    reproj_tol: float = 1e-8,
    dedup_tol: float = 1e-6,
    progress=None,
) -> DegreeReport:
    """Count the camera solutions over a generic image by monodromy.

    Deterministic for a fixed seed.  Loops anchor at a generic complex
    chart reached by one hop from the synthetic seed image, and each loop
    segment follows a random complex arc rather than the straight chart
    line.  The stop policy defaults to the stabilization heuristic; pass
    ``StopPolicy(target=...)`` to stop as soon as a known reference count
    is reached (the report records which rule fired, so a stall below the
    target stays visible).
    """
    st = settings or TrackerSettings()
    policy = stop or StopPolicy()
    rng = np.random.default_rng([seed, entry.signature.m, *entry.label.encode()])
    if system is None:
        system = ConstraintSystem(encode(entry, rng))
    t_start = time.time()
    c0, y0 = _seed_pair(entry, system, rng)
    c0, conv = _newton(
        system, c0[None, :], np.zeros(1), y0, y0, st.endpoint_tol, st.endpoint_iters
    )
    if not conv[0]:
        raise SeedError(f"seed refinement failed for {entry.label}")
    if system.scaled_residual(c0[0], y0, "full").max() >= residual_tol:
        raise SeedError(f"seed residual out of tolerance for {entry.label}")

    # The seed chart is the image of an actual synthetic scene and sits
    # close to singular strata of the family: segments leaving or entering
    # it lose far more paths than segments between generic charts.  Hop the
    # seed solution to a generic complex anchor once and run every loop
    # from there instead.  If no hop lands cleanly the seed chart stays the
    # anchor, which is slower but still correct.
    for _ in range(8):
        base = _random_chart(rng, system.chart.dim)
        hop, okh = track_segment(
            system, c0, y0, base, st, gammas=_segment_arcs(rng, 1)
        )
        if (
            okh[0]
            and system.scaled_residual(hop[0], base, "full").max() < residual_tol
            and system.seed_stacks_ok(hop[0], base)
        ):
            c0 = hop
            y0 = base
            break

    solutions = c0.copy()
    loops: list[LoopRecord] = []
    report = DegreeReport(
        label=entry.label,
        m=entry.signature.m,
        seed=seed,
        degree=1,
        stop_reason="",
        solutions=solutions,
        chart_point=y0,
        loops=loops,
        reference=entry.degree,
        reference_kind=entry.degree_kind,
    )
    stall = 0
    loop_no = 0
    while True:
        if policy.target is not None and len(solutions) >= policy.target:
            report.stop_reason = (
                "target" if len(solutions) == policy.target else "overshoot"
            )
            break
        if stall >= policy.stall_loops:
            report.stop_reason = "stabilized"
            break
        if loop_no >= policy.max_loops:
            report.stop_reason = "loop_budget"
            break
        if (
            policy.wall_time is not None
            and time.time() - t_start > policy.wall_time
        ):
            report.stop_reason = "wall_time"
            break
        loop_no += 1
        t0 = time.time()
        n = len(solutions)
        # Several independent triangle loops ride in each batched call:
        # path p = (geometry g, solution i) tracks solution i around the
        # triangle y0 -> y1[g] -> y2[g] -> y0.  While the solution set is
        # small this keeps the batch full instead of paying per-call
        # overhead on a handful of paths, which is where most of the ramp
        # time used to go, and every geometry is an independent sample of
        # the monodromy group.
        k_rep = max(1, _BATCH_TARGET // n)
        dim = system.chart.dim
        # Anchor migration: leaving y0 where it is forever means every loop
        # is a triangle based at the same chart, and a solution whose
        # linking stratum no such triangle happens to cross stays missing
        # no matter how many loops run.  After a few dry loops, carry the
        # whole solution set to a fresh anchor (strictly: only if every
        # path arrives, stays on the variety and stays distinct) and base
        # subsequent loops there.
        if stall >= 3 and stall % 3 == 0:
            ynew = _random_chart(rng, dim)
            moved, okv = _track_with_retries(
                system, solutions, y0, ynew, st, rng, rounds=3
            )
            if okv.all():
                res = np.atleast_2d(
                    system.scaled_residual(moved, ynew, "full")
                ).max(axis=-1)
                dupmin = np.inf
                if len(moved) > 1:
                    diffs = _pair_distance(moved[:, None, :], moved[None, :, :])
                    np.fill_diagonal(diffs, np.inf)
                    dupmin = diffs.min()
                if (res < residual_tol).all() and dupmin > dedup_tol:
                    solutions = moved
                    y0 = ynew
                    report.solutions = solutions
                    report.chart_point = y0
        # Chart radii spread over a log scale: segments to near and far
        # charts sweep different parts of the discriminant, which matters
        # once the easy solutions are in and the rest hide behind strata
        # that unit-scale triangles rarely cross.
        y1 = np.stack([
            _random_chart(rng, dim) * np.exp(rng.uniform(-0.8, 0.8))
            for _ in range(k_rep)
        ])
        y2 = np.stack([
            _random_chart(rng, dim) * np.exp(rng.uniform(-0.8, 0.8))
            for _ in range(k_rep)
        ])
        starts = np.tile(solutions, (k_rep, 1))
        yb1 = np.repeat(y1, n, axis=0)
        yb2 = np.repeat(y2, n, axis=0)
        tracked_now = len(starts)
        cur, okm = _track_with_retries(system, starts, y0, yb1, st, rng)
        cur2, ok2 = _track_with_retries(
            system, cur[okm], yb1[okm], yb2[okm], st, rng
        )
        cur3, ok3 = _track_with_retries(
            system, cur2[ok2], yb2[okm][ok2], y0, st, rng
        )
        finals = cur3[ok3]
        survived = len(finals)
        report.path_failures += tracked_now - survived
        accepted, rejected = _accept_candidates(
            system,
            finals,
            y0,
            solutions,
            st,
            residual_tol,
            reproj_tol,
            dedup_tol,
        )
        report.rejected += rejected
        if accepted:
            solutions = np.vstack([solutions] + accepted)
            stall = 0
        else:
            stall += 1
        rec = LoopRecord(
            loop=loop_no,
            tracked=tracked_now,
            survived=survived,
            new_found=len(accepted),
            total_after=len(solutions),
            seconds=time.time() - t0,
        )
        loops.append(rec)
        report.solutions = solutions
        report.degree = len(solutions)
        if progress is not None:
            progress(rec)
    report.seconds = time.time() - t_start
    return report


# ---------------------------------------------------------------------------
# solution-set verification


@dataclass
class VerificationReport:
    label: str
    count: int
    residual_max: float
    reprojection_max: float
    min_pair_distance: float
    residual_tol: float
    reprojection_tol: float
    dedup_tol: float
    degenerate: int = 0

    @property
    def ok(self) -> bool:
        return (
            self.residual_max < self.residual_tol
            and self.reprojection_max < self.reprojection_tol
            and self.degenerate == 0
            and (self.count < 2 or self.min_pair_distance > self.dedup_tol)
        )

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "count": self.count,
            "residual_max": self.residual_max,
            "reprojection_max": self.reprojection_max,
            "min_pair_distance": self.min_pair_distance,
            "degenerate": self.degenerate,
            "ok": self.ok,
        }


def verify_solution_set(
    system: ConstraintSystem,
    solutions: np.ndarray,
    y0: np.ndarray,
    residual_tol: float = 1e-9,
    reproj_tol: float = 1e-8,
    dedup_tol: float = 1e-6,
) -> VerificationReport:
    """Independent checks on a monodromy output.

    Every reported solution must satisfy the full determinantal system to
    ``residual_tol`` (scale-invariant residual), reproject from
    triangulated world data to ``reproj_tol``, sit on a nondegenerate
    branch (point stacks of rank 3, line stacks of rank 2), and the set
    must be pairwise separated beyond the merge tolerance.
    """
    sols = np.atleast_2d(np.asarray(solutions, dtype=np.complex128))
    res_max = 0.0
    rep_max = 0.0
    degenerate = 0
    for c in sols:
        res_max = max(res_max, float(system.scaled_residual(c, y0, "full").max()))
        rep_max = max(rep_max, _reprojection_gap(system, c, y0))
        if not system.seed_stacks_ok(c, y0):
            degenerate += 1
    min_dist = np.inf
    for i in range(len(sols) - 1):
        min_dist = min(min_dist, float(_pair_distance(sols[i + 1 :], sols[i]).min()))
    return VerificationReport(
        label=system.entry.label,
        count=len(sols),
        residual_max=res_max,
        reprojection_max=rep_max,
        min_pair_distance=float(min_dist),
        residual_tol=residual_tol,
        reprojection_tol=reproj_tol,
        dedup_tol=dedup_tol,
        degenerate=degenerate,
    )
