"""Minimality decisions via Jacobian rank over prime fields.

A balanced problem is minimal exactly when the constraint system, with the
image frozen at a generic consistent seed, has a finite positive number of
camera solutions; equivalently when the Jacobian dF/dC at the seed attains
the full camera dimension 6m - 7.  Evaluating over Z_p at exactly sampled
seeds makes the rank computation free of rounding, and repeating over
several primes and several seeds guards against unlucky coincidences (a
rank can only drop at special points, never exceed the generic value).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .algebra import DEFAULT_PRIMES
from .catalog import CatalogEntry, enumerate_balanced
from .equations import ConstraintSystem, encode
from .scene import SamplingError, sample_instance

__all__ = [
    "MinimalityVerdict",
    "check_minimal",
    "check_all",
    "summarize",
]


@dataclass
class MinimalityVerdict:
    """Outcome of the rank test for one problem.

    ``ranks`` maps each prime to the ranks observed across trials.  The
    generic rank is at least the maximum observed, so ``minimal`` is True
    when any validated seed reaches the camera dimension.  ``stable``
    records whether every trial over every prime agreed; disagreement does
    not happen for validated seeds in practice and is surfaced rather than
    silently resolved.
    """

    label: str
    m: int
    dof: int
    ranks: dict[int, list[int]] = field(default_factory=dict)
    seconds: float = 0.0
    reference: bool | None = None

    @property
    def rank(self) -> int:
        return max(max(r) for r in self.ranks.values())

    @property
    def minimal(self) -> bool:
        return self.rank == self.dof

    @property
    def stable(self) -> bool:
        seen = {r for rs in self.ranks.values() for r in rs}
        return len(seen) == 1

    @property
    def agrees_reference(self) -> bool | None:
        if self.reference is None:
            return None
        return self.minimal == self.reference

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "m": self.m,
            "dof": self.dof,
            "rank": self.rank,
            "minimal": self.minimal,
            "stable": self.stable,
            "ranks": {str(p): rs for p, rs in self.ranks.items()},
            "reference": self.reference,
            "agrees_reference": self.agrees_reference,
            "seconds": round(self.seconds, 3),
        }


def check_minimal(
    entry: CatalogEntry,
    primes: tuple[int, ...] = DEFAULT_PRIMES,
    trials: int = 5,
    seed: int = 0,
    system: ConstraintSystem | None = None,
) -> MinimalityVerdict:
    """Decide minimality of one problem by seed Jacobian ranks.

    Runs ``trials`` independently sampled seeds for every prime in
    ``primes``; every seed is validated (stack ranks and anchor minors)
    before its rank counts.
    """
    rng = np.random.default_rng([seed, entry.signature.m, *entry.label.encode()])
    if system is None:
        system = ConstraintSystem(encode(entry, rng))
    dof = system.n_unknowns
    t0 = time.time()
    verdict = MinimalityVerdict(entry.label, entry.signature.m, dof, reference=entry.minimal)
    for p in primes:
        algebra.check_modulus(p)
        ranks = []
        for _ in range(trials):
            inst = sample_instance(
                entry,
                rng,
                p,
                accept=lambda i: system.seed_stacks_ok(
                    i.cameras.params(), i.chart_point, p
                ),
            )
            jac = system.jacobian(inst.cameras.params(), inst.chart_point, p, "track")
            ranks.append(algebra.matrix_rank(jac, modulus=p))
        verdict.ranks[p] = ranks
    verdict.seconds = time.time() - t0
    return verdict


def check_all(
    entries: list[CatalogEntry] | None = None,
    primes: tuple[int, ...] = DEFAULT_PRIMES,
    trials: int = 5,
    seed: int = 0,
    progress=None,
) -> list[MinimalityVerdict]:
    """Rank test for every catalog entry (the full classification run)."""
    if entries is None:
        entries = enumerate_balanced()
    out = []
    for entry in entries:
        v = check_minimal(entry, primes=primes, trials=trials, seed=seed)
        if progress is not None:
            progress(v)
        out.append(v)
    return out


def summarize(verdicts: list[MinimalityVerdict]) -> dict:
    """Aggregate counts and reference agreement for a verdict list."""
    mismatched = [
        v.label for v in verdicts if v.agrees_reference is False
    ]
    unstable = [v.label for v in verdicts if not v.stable]
    return {
        "problems": len(verdicts),
        "minimal": sum(1 for v in verdicts if v.minimal),
        "non_minimal": sum(1 for v in verdicts if not v.minimal),
        "unstable": unstable,
        "mismatched": mismatched,
        "all_match_reference": not mismatched,
        "seconds": round(sum(v.seconds for v in verdicts), 3),
    }
