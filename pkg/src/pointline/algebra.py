"""Field-generic linear algebra and the Cayley rotation chart.

Two coefficient fields are supported throughout the package:

* prime fields Z_p with p < 2**15, stored in int64 arrays so a product of
  two residues (< 2**30) never overflows, and
* double-precision complex numbers.

The constraint machinery runs over either field through the small "ring"
interface defined here.  ``DualRing`` wraps a base ring with forward-mode
dual numbers and is how every Jacobian in the package is computed; there is
no symbolic differentiation anywhere.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "AlgebraError",
    "SingularMatrixError",
    "SingularParameterError",
    "DEFAULT_PRIMES",
    "primes_below",
    "default_primes",
    "check_modulus",
    "pf_rank",
    "pf_solve",
    "pf_invert",
    "pf_nullspace",
    "cx_rank",
    "cx_nullspace",
    "matrix_rank",
    "solve_linear",
    "invert_matrix",
    "cayley_numerator",
    "cayley_rotation",
    "ComplexRing",
    "PrimeRing",
    "DualRing",
    "ring_for",
]

MODULUS_BITS = 15


class AlgebraError(Exception):
    """Base class for arithmetic failures."""


class SingularMatrixError(AlgebraError):
    """A linear solve or inversion hit a singular matrix."""


class SingularParameterError(AlgebraError):
    """A parametrization denominator vanished (e.g. Cayley 1 + |v|^2 = 0)."""


def primes_below(limit: int) -> list[int]:
    """All primes strictly below ``limit`` (simple sieve)."""
    if limit <= 2:
        return []
    mask = np.ones(limit, dtype=bool)
    mask[:2] = False
    for q in range(2, int(limit**0.5) + 1):
        if mask[q]:
            mask[q * q :: q] = False
    return [int(q) for q in np.flatnonzero(mask)]


def default_primes(count: int = 5) -> tuple[int, ...]:
    """The ``count`` largest primes below 2**15, in decreasing order."""
    sieve = primes_below(1 << MODULUS_BITS)
    return tuple(sieve[-count:][::-1])


DEFAULT_PRIMES = default_primes()


def check_modulus(p: int) -> int:
    """Validate a prime-field modulus: prime and below 2**15."""
    p = int(p)
    if p >= (1 << MODULUS_BITS):
        raise AlgebraError(f"modulus {p} is not below 2**{MODULUS_BITS}")
    if p < 2 or any(p % q == 0 for q in range(2, int(p**0.5) + 1)):
        raise AlgebraError(f"modulus {p} is not prime")
    return p


# ---------------------------------------------------------------------------
# prime-field matrix routines (exact, int64 % p)


def _pf_mat(a, p: int) -> np.ndarray:
    return np.asarray(a, dtype=np.int64) % p


def pf_rank(a, p: int) -> int:
    """Rank of a matrix over Z_p by Gaussian elimination."""
    m = _pf_mat(a, p).copy()
    rows, cols = m.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        nz = np.flatnonzero(m[rank:, col]) + rank
        if nz.size == 0:
            continue
        piv = nz[0]
        if piv != rank:
            m[[rank, piv]] = m[[piv, rank]]
        inv = pow(int(m[rank, col]), -1, p)
        m[rank] = (m[rank] * inv) % p
        rest = np.flatnonzero(m[:, col])
        rest = rest[rest != rank]
        if rest.size:
            m[rest] = (m[rest] - np.outer(m[rest, col], m[rank])) % p
        rank += 1
    return rank


def _pf_rref(a, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot column list over Z_p."""
    m = _pf_mat(a, p).copy()
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for col in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, col]) + r
        if nz.size == 0:
            continue
        piv = nz[0]
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        inv = pow(int(m[r, col]), -1, p)
        m[r] = (m[r] * inv) % p
        others = np.flatnonzero(m[:, col])
        others = others[others != r]
        if others.size:
            m[others] = (m[others] - np.outer(m[others, col], m[r])) % p
        pivots.append(col)
        r += 1
    return m, pivots


def pf_solve(a, b, p: int) -> np.ndarray:
    """Solve ``a @ x = b`` exactly over Z_p; raises if ``a`` is singular."""
    a = _pf_mat(a, p)
    b = _pf_mat(b, p)
    n = a.shape[0]
    if a.shape[1] != n:
        raise AlgebraError("pf_solve requires a square matrix")
    rhs = b.reshape(n, -1)
    aug = np.concatenate([a, rhs], axis=1)
    red, pivots = _pf_rref(aug, p)
    if [c for c in pivots if c < n] != list(range(n)):
        raise SingularMatrixError("singular system over Z_p")
    x = red[:n, n:]
    return x.reshape(b.shape)


def pf_invert(a, p: int) -> np.ndarray:
    """Exact inverse of a square matrix over Z_p."""
    a = _pf_mat(a, p)
    n = a.shape[0]
    return pf_solve(a, np.eye(n, dtype=np.int64), p)


def pf_nullspace(a, p: int) -> np.ndarray:
    """Columns spanning the kernel of ``a`` over Z_p (shape cols x nullity)."""
    a = _pf_mat(a, p)
    rows, cols = a.shape
    red, pivots = _pf_rref(a, p)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[fc, k] = 1
        for r, pc in enumerate(pivots):
            basis[pc, k] = (-red[r, fc]) % p
    return basis


# ---------------------------------------------------------------------------
# complex matrix routines


def cx_rank(a, tol: float = 1e-8) -> int:
    """Numerical rank by full-pivot elimination.

    A pivot counts while its magnitude exceeds ``tol`` times the largest
    entry of the original matrix.
    """
    m = np.array(a, dtype=np.complex128, copy=True)
    if m.size == 0:
        return 0
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return 0
    rank = 0
    rows, cols = m.shape
    while rank < min(rows, cols):
        sub = np.abs(m[rank:, rank:])
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        if sub[i, j] <= tol * scale:
            break
        i += rank
        j += rank
        if i != rank:
            m[[rank, i]] = m[[i, rank]]
        if j != rank:
            m[:, [rank, j]] = m[:, [j, rank]]
        m[rank + 1 :] -= np.outer(m[rank + 1 :, rank] / m[rank, rank], m[rank])
        rank += 1
    return rank


def cx_nullspace(a, rtol: float = 1e-8) -> np.ndarray:
    """Orthonormal kernel basis (columns) of a complex matrix via SVD."""
    m = np.asarray(a, dtype=np.complex128)
    rows, cols = m.shape
    if rows == 0:
        return np.eye(cols, dtype=np.complex128)
    _, s, vh = np.linalg.svd(m)
    keep = s > rtol * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(keep))
    return vh[rank:].conj().T


# ---------------------------------------------------------------------------
# unified front ends


def matrix_rank(a, tol: float = 1e-8, modulus: int | None = None) -> int:
    """Rank over Z_p when ``modulus`` is given, else numerical rank."""
    if modulus is not None:
        return pf_rank(a, check_modulus(modulus))
    return cx_rank(a, tol)


def solve_linear(a, b, modulus: int | None = None) -> np.ndarray:
    if modulus is not None:
        return pf_solve(a, b, check_modulus(modulus))
    try:
        return np.linalg.solve(np.asarray(a, dtype=np.complex128), b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc


def invert_matrix(a, modulus: int | None = None) -> np.ndarray:
    if modulus is not None:
        return pf_invert(a, check_modulus(modulus))
    try:
        return np.linalg.inv(np.asarray(a, dtype=np.complex128))
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Cayley chart of SO(3)


def cayley_numerator(a, b, c):
    """Denominator-cleared Cayley rotation.

    Returns ``(K, kappa)`` with ``K = kappa * R`` polynomial in (a, b, c)
    and ``kappa = 1 + a^2 + b^2 + c^2``, where ``R`` is the rotation with
    Cayley parameter v = (a, b, c).  Entries keep whatever scalar type the
    inputs carry, so this works for ints, floats, complex and numpy arrays.
    """
    aa, bb, cc = a * a, b * b, c * c
    kappa = 1 + aa + bb + cc
    k = [
        [1 + aa - bb - cc, 2 * (a * b - c), 2 * (a * c + b)],
        [2 * (a * b + c), 1 - aa + bb - cc, 2 * (b * c - a)],
        [2 * (a * c - b), 2 * (b * c + a), 1 - aa - bb + cc],
    ]
    return k, kappa


def cayley_rotation(v, modulus: int | None = None) -> np.ndarray:
    """Rotation matrix ``(I + [v]_x)(I - [v]_x)^{-1}`` from a Cayley vector.

    Over Z_p the result is an exact orthogonal matrix; over the complex
    numbers it is orthogonal to rounding.  Raises
    :class:`SingularParameterError` when ``1 + |v|^2`` is not invertible.
    """
    v = np.asarray(v)
    a, b, c = (int(x) if modulus is not None else complex(x) for x in v)
    k, kappa = cayley_numerator(a, b, c)
    if modulus is not None:
        p = check_modulus(modulus)
        kap = int(kappa) % p
        if kap == 0:
            raise SingularParameterError("Cayley denominator vanishes mod p")
        inv = pow(kap, -1, p)
        return (np.array(k, dtype=np.int64) % p * inv) % p
    if abs(kappa) < 1e-12:
        raise SingularParameterError("Cayley denominator vanishes")
    out = np.array(k, dtype=np.complex128) / kappa
    if np.max(np.abs(out.imag)) == 0.0:
        return out.real
    return out


# ---------------------------------------------------------------------------
# rings for the expression engine
#
# A ring exposes const/add/sub/mul/neg on whatever element representation it
# chooses.  Plain rings hold numpy arrays (or python scalars); DualRing holds
# (value, gradient) pairs where a gradient of None means identically zero.


class ComplexRing:
    """complex128 arithmetic on scalars or arrays."""

    modulus = None

    @staticmethod
    def const(c):
        return c

    @staticmethod
    def add(x, y):
        return x + y

    @staticmethod
    def sub(x, y):
        return x - y

    @staticmethod
    def mul(x, y):
        return x * y

    @staticmethod
    def neg(x):
        return -x


class PrimeRing:
    """Z_p arithmetic on int64 scalars or arrays, reduced after every op."""

    def __init__(self, p: int):
        self.modulus = check_modulus(p)

    def const(self, c):
        return int(c) % self.modulus

    def add(self, x, y):
        return (x + y) % self.modulus

    def sub(self, x, y):
        return (x - y) % self.modulus

    def mul(self, x, y):
        return (x * y) % self.modulus

    def neg(self, x):
        return (-x) % self.modulus


def ring_for(modulus: int | None):
    return ComplexRing() if modulus is None else PrimeRing(modulus)


class DualRing:
    """Forward-mode dual numbers over a base ring.

    Elements are ``(value, grad)`` with ``grad`` shaped like
    ``value.shape + (nslots,)`` or broadcastable to it, or None for a zero
    gradient.  Products propagate gradients by the Leibniz rule.
    """

    def __init__(self, base, nslots: int):
        self.base = base
        self.nslots = int(nslots)
        self.modulus = base.modulus

    def lift(self, value, grad=None):
        return (value, grad)

    def const(self, c):
        return (self.base.const(c), None)

    def value(self, x):
        return x[0]

    def grad(self, x, shape=()):
        g = x[1]
        if g is None:
            dtype = np.int64 if self.modulus is not None else np.complex128
            return np.zeros(shape + (self.nslots,), dtype=dtype)
        return np.broadcast_to(g, shape + (self.nslots,)) if shape else g

    def _gadd(self, g1, g2):
        if g1 is None:
            return g2
        if g2 is None:
            return g1
        return self.base.add(g1, g2)

    def _gneg(self, g):
        return None if g is None else self.base.neg(g)

    def _gscale(self, v, g):
        # v: scalar or (...,) array; g: (..., nslots)
        if g is None:
            return None
        if np.ndim(v) == 0:
            return self.base.mul(v, g)
        return self.base.mul(np.asarray(v)[..., None], g)

    def add(self, x, y):
        return (self.base.add(x[0], y[0]), self._gadd(x[1], y[1]))

    def sub(self, x, y):
        return (self.base.sub(x[0], y[0]), self._gadd(x[1], self._gneg(y[1])))

    def mul(self, x, y):
        v = self.base.mul(x[0], y[0])
        g = self._gadd(self._gscale(x[0], y[1]), self._gscale(y[0], x[1]))
        return (v, g)

    def neg(self, x):
        return (self.base.neg(x[0]), self._gneg(x[1]))
