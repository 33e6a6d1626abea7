"""Enumeration of balanced point-line problems and the published catalog.

A problem is described by how many points and lines are observed in ``m``
calibrated views and by the incidence structure among them: collinear groups
(a dependent point lies on the line spanned by two earlier points) and
adjacent lines pinned to a point.  The enumeration finds every balanced
problem, i.e. those whose unknown count matches the constraint count, and
reduces each incidence structure to a canonical representative so isomorphic
problems appear once.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from importlib import resources

__all__ = [
    "CatalogError",
    "DomainError",
    "StructureError",
    "ProblemSignature",
    "IncidenceRelation",
    "CatalogEntry",
    "dim_camera_space",
    "dim_arrangement",
    "dim_image",
    "is_balanced",
    "balanced_quadruples",
    "enumerate_incidence_structures",
    "enumerate_balanced",
    "canonical_form",
    "reference_catalog",
    "diff_against_reference",
    "entry_by_label",
]


class CatalogError(Exception):
    """Base class for catalog failures."""


class DomainError(CatalogError):
    """Inputs outside the meaningful domain (e.g. fewer than two views)."""


class StructureError(CatalogError):
    """An incidence structure violates its own consistency rules."""


# ---------------------------------------------------------------------------
# signatures and dimension counts


@dataclass(frozen=True, order=True)
class ProblemSignature:
    """Counts (m, pf, pd, lf, la) plus the incidence multiplicity alpha.

    ``pf``/``pd`` are free and dependent (collinear-group) points, ``lf``
    free lines, ``la`` point-adjacent lines.  ``alpha`` distinguishes
    structures sharing the same counts: for three or more views it is the
    largest number of adjacent lines through one point, for two views the
    largest collinear group.
    """

    m: int
    pf: int
    pd: int
    lf: int
    la: int
    alpha: int

    @property
    def label(self) -> str:
        return f"{self.pf}{self.pd}{self.lf}{self.la}_{self.alpha}"

    @property
    def p(self) -> int:
        return self.pf + self.pd

    @property
    def l(self) -> int:
        return self.lf + self.la


def dim_camera_space(m: int) -> int:
    """Dimension 6m - 7 of the calibrated camera space modulo gauge."""
    if m < 2:
        raise DomainError(f"need at least two views, got m={m}")
    return 6 * m - 7


def dim_arrangement(sig: ProblemSignature) -> int:
    """Dimension of the space of world arrangements with this structure."""
    return 3 * sig.pf + sig.pd + 4 * sig.lf + 2 * sig.la


def dim_image(sig: ProblemSignature) -> int:
    """Dimension of the joint-image chart: per view 2 per free point, 1 per
    dependent point, 2 per free line, 1 per adjacent line."""
    return sig.m * (2 * sig.pf + sig.pd + 2 * sig.lf + sig.la)


def is_balanced(sig: ProblemSignature) -> bool:
    """Whether unknowns match constraints: arrangement + cameras = image."""
    return dim_image(sig) == dim_arrangement(sig) + dim_camera_space(sig.m)


# ---------------------------------------------------------------------------
# incidence structures


@dataclass(frozen=True)
class IncidenceRelation:
    """Incidence structure on ``p`` points.

    ``groups`` are collinear groups (sorted tuples of point indices, size at
    least three, two groups share at most one point).  ``anchors`` names the
    point each adjacent line passes through; adjacent lines are indexed
    0..la-1 followed by ``free_lines`` unattached lines.
    """

    p: int
    groups: tuple[tuple[int, ...], ...]
    anchors: tuple[int, ...]
    free_lines: int

    def __post_init__(self):
        if self.p < 0 or self.free_lines < 0:
            raise StructureError("negative counts")
        for g in self.groups:
            if len(g) < 3 or tuple(sorted(set(g))) != g:
                raise StructureError(f"malformed collinear group {g}")
            if any(i < 0 or i >= self.p for i in g):
                raise StructureError(f"group {g} out of range")
        for ga, gb in itertools.combinations(self.groups, 2):
            if len(set(ga) & set(gb)) > 1:
                raise StructureError("collinear groups share a line")
        if any(i < 0 or i >= self.p for i in self.anchors):
            raise StructureError("anchor out of range")
        self.dependents()  # validates parent designation

    @property
    def l(self) -> int:
        return len(self.anchors) + self.free_lines

    @property
    def la(self) -> int:
        return len(self.anchors)

    @property
    def pairs(self) -> frozenset[tuple[int, int]]:
        """Observed (point, line) incidences."""
        return frozenset((pt, j) for j, pt in enumerate(self.anchors))

    def dependents(self) -> tuple[tuple[int, tuple[int, int]], ...]:
        """Dependent points with their spanning parents, in build order.

        Groups are processed in sorted order; the first two members of a
        group span its line and every later member depends on them.
        """
        out: list[tuple[int, tuple[int, int]]] = []
        seen: set[int] = set()
        for g in sorted(self.groups):
            parents = (g[0], g[1])
            fresh = [x for x in g[2:] if x not in seen]
            if len(fresh) != len(g) - 2 or parents[0] in seen or parents[1] in seen:
                raise StructureError(f"group {g} has no valid spanning pair")
            for x in fresh:
                out.append((x, parents))
                seen.add(x)
        return tuple(out)

    def dependent_points(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.dependents())

    def free_points(self) -> tuple[int, ...]:
        dep = set(self.dependent_points())
        return tuple(i for i in range(self.p) if i not in dep)

    def anchor_counts(self) -> tuple[int, ...]:
        counts = [0] * self.p
        for a in self.anchors:
            counts[a] += 1
        return tuple(counts)

    def alpha(self, m: int) -> int:
        if m >= 3:
            return max(self.anchor_counts(), default=0) if self.la else 0
        if self.groups:
            return max(len(g) for g in self.groups)
        return 2 if self.p >= 2 else 0

    def signature(self, m: int) -> ProblemSignature:
        pd = len(self.dependents())
        return ProblemSignature(
            m=m,
            pf=self.p - pd,
            pd=pd,
            lf=self.free_lines,
            la=self.la,
            alpha=self.alpha(m),
        )


def canonical_form(inc: IncidenceRelation) -> IncidenceRelation:
    """Canonical representative of the point-relabeling class of ``inc``.

    Minimizes (groups, per-point adjacent-line counts) lexicographically
    over all permutations of the points.
    """
    if inc.p == 0:
        return inc
    counts = inc.anchor_counts()
    best_key = None
    best = None
    for perm in itertools.permutations(range(inc.p)):
        groups = tuple(
            sorted(tuple(sorted(perm[i] for i in g)) for g in inc.groups)
        )
        new_counts = [0] * inc.p
        for old, c in enumerate(counts):
            new_counts[perm[old]] = c
        key = (groups, tuple(new_counts))
        if best_key is None or key < best_key:
            best_key = key
            best = (groups, tuple(new_counts))
    groups, new_counts = best
    anchors = tuple(pt for pt in range(inc.p) for _ in range(new_counts[pt]))
    return IncidenceRelation(inc.p, groups, anchors, inc.free_lines)


def canonical_label(inc: IncidenceRelation) -> str:
    """Stable string form of the canonical representative."""
    if inc.p == 0 and inc.la == 0:
        return f"empty+{inc.free_lines}f"
    c = canonical_form(inc)
    return f"p{c.p}|g{list(map(list, c.groups))}|a{list(c.anchors)}|f{c.free_lines}"


# ---------------------------------------------------------------------------
# enumeration


def balanced_quadruples(m: int) -> list[tuple[int, int, int, int]]:
    """All (pf, pd, lf, la) satisfying the balance equation for ``m`` views.

    Only definitional constraints are applied: a dependent point requires
    two free spanning points, and an adjacent line requires a point.  Two
    views are special: lines carry no two-view constraints, so the catalog
    convention fixes lf = la = 0 there.
    """
    target = dim_camera_space(m)
    if m == 2:
        # balance reduces to pf + pd = 5, independent of lines
        out = []
        for pd in range(6):
            pf = 5 - pd
            if pd > 0 and pf < 2:
                continue
            out.append((pf, pd, 0, 0))
        return out

    coef = (2 * m - 3, m - 1, 2 * m - 4, m - 2)
    box = [range(target // c + 1) for c in coef]
    out = []
    for pf, pd, lf, la in itertools.product(*box):
        if coef[0] * pf + coef[1] * pd + coef[2] * lf + coef[3] * la != target:
            continue
        if pd > 0 and pf < 2:
            continue
        if la > 0 and pf + pd < 1:
            continue
        out.append((pf, pd, lf, la))
    return out


def _group_systems(p: int, pd: int) -> list[tuple[tuple[int, ...], ...]]:
    """Collinear-group systems on ``p`` points with ``pd`` dependents."""
    if pd == 0:
        return [()]
    candidates = [
        tuple(sorted(g))
        for size in range(3, p + 1)
        for g in itertools.combinations(range(p), size)
    ]
    systems = []
    for count in range(1, pd + 1):
        for fam in itertools.combinations(candidates, count):
            if sum(len(g) - 2 for g in fam) != pd:
                continue
            if any(
                len(set(ga) & set(gb)) > 1
                for ga, gb in itertools.combinations(fam, 2)
            ):
                continue
            try:
                IncidenceRelation(p, tuple(sorted(fam)), (), 0).dependents()
            except StructureError:
                continue
            systems.append(tuple(sorted(fam)))
    return systems


def _anchor_distributions(p: int, la: int):
    """Yield per-point adjacent-line counts summing to la."""
    if p == 0:
        if la == 0:
            yield ()
        return
    for cuts in itertools.combinations_with_replacement(range(p), la):
        counts = [0] * p
        for c in cuts:
            counts[c] += 1
        yield tuple(counts)


def enumerate_incidence_structures(
    m: int, pf: int, pd: int, lf: int, la: int
) -> list[IncidenceRelation]:
    """All canonical incidence structures with the given counts."""
    p = pf + pd
    seen: dict[str, IncidenceRelation] = {}
    for groups in _group_systems(p, pd):
        for counts in _anchor_distributions(p, la):
            anchors = tuple(pt for pt in range(p) for _ in range(counts[pt]))
            try:
                inc = IncidenceRelation(p, groups, anchors, lf)
            except StructureError:
                continue
            if len(inc.dependents()) != pd:
                continue
            cf = canonical_form(inc)
            seen.setdefault(canonical_label(cf), cf)
    return [seen[k] for k in sorted(seen)]


@dataclass(frozen=True)
class CatalogEntry:
    """A balanced problem: signature, canonical incidence and, when the
    published classification knows it, the minimality flag and degree."""

    signature: ProblemSignature
    incidence: IncidenceRelation
    minimal: bool | None = None
    degree: int | None = None
    degree_kind: str | None = None  # exact | numeric | bound

    @property
    def label(self) -> str:
        return self.signature.label

    def to_dict(self) -> dict:
        sig = self.signature
        return {
            "label": self.label,
            "m": sig.m,
            "pf": sig.pf,
            "pd": sig.pd,
            "lf": sig.lf,
            "la": sig.la,
            "alpha": sig.alpha,
            "p": self.incidence.p,
            "groups": [list(g) for g in self.incidence.groups],
            "anchors": list(self.incidence.anchors),
            "free_lines": self.incidence.free_lines,
            "minimal": self.minimal,
            "degree": self.degree,
            "degree_kind": self.degree_kind,
        }


def _sort_key(entry: CatalogEntry):
    s = entry.signature
    return (-s.m, s.pf, s.pd, -s.lf, s.la, s.alpha)


def enumerate_balanced(
    m_max: int = 6, m_min: int = 2, attach_reference: bool = True
) -> list[CatalogEntry]:
    """Every balanced problem for m_min <= m <= m_max, canonically labeled.

    Entries are decorated with the published minimality flag and degree when
    the label is in the shipped reference catalog.
    """
    ref = reference_catalog() if attach_reference else {}
    out: list[CatalogEntry] = []
    for m in range(m_min, m_max + 1):
        for pf, pd, lf, la in balanced_quadruples(m):
            for inc in enumerate_incidence_structures(m, pf, pd, lf, la):
                sig = inc.signature(m)
                rec = ref.get((m, sig.label))
                entry = CatalogEntry(
                    signature=sig,
                    incidence=inc,
                    minimal=rec["minimal"] if rec else None,
                    degree=rec["degree"] if rec else None,
                    degree_kind=rec["degree_kind"] if rec else None,
                )
                out.append(entry)
    return sorted(out, key=_sort_key)


def entry_by_label(label: str, m: int | None = None) -> CatalogEntry:
    """Look up a catalog entry by its label, e.g. '2102_1'."""
    matches = [
        e
        for e in enumerate_balanced()
        if e.label == label and (m is None or e.signature.m == m)
    ]
    if not matches:
        raise CatalogError(f"no balanced problem labeled {label!r}")
    if len(matches) > 1:
        raise CatalogError(f"label {label!r} is ambiguous; pass m explicitly")
    return matches[0]


# ---------------------------------------------------------------------------
# published reference catalog


def reference_catalog() -> dict[tuple[int, str], dict]:
    """The published classification keyed by (m, label)."""
    text = resources.files("pointline.data").joinpath("catalog.json").read_text()
    data = json.loads(text)
    out = {}
    for rec in data["problems"]:
        out[(rec["m"], rec["label"])] = rec
    return out


def reference_entry(rec: dict) -> CatalogEntry:
    inc = IncidenceRelation(
        rec["p"],
        tuple(tuple(g) for g in rec["groups"]),
        tuple(rec["anchors"]),
        rec["free_lines"],
    )
    sig = inc.signature(rec["m"])
    return CatalogEntry(sig, inc, rec["minimal"], rec["degree"], rec["degree_kind"])


def diff_against_reference(entries: list[CatalogEntry]) -> dict:
    """Compare enumerated entries against the shipped reference catalog.

    Returns a report with ``missing`` (in the reference, not enumerated),
    ``extra`` (enumerated, not in the reference) and ``mismatched``
    (same label but different canonical incidence).
    """
    ref = {key: reference_entry(rec) for key, rec in reference_catalog().items()}
    got = {(e.signature.m, e.label): e for e in entries}
    missing = sorted(set(ref) - set(got))
    extra = sorted(set(got) - set(ref))
    mismatched = []
    for key in sorted(set(ref) & set(got)):
        a, b = ref[key], got[key]
        if a.signature != b.signature or canonical_label(
            a.incidence
        ) != canonical_label(b.incidence):
            mismatched.append(key)
    return {
        "missing": missing,
        "extra": extra,
        "mismatched": mismatched,
        "match": not (missing or extra or mismatched),
    }
