"""Dense building blocks: Householder reflectors, Givens rotations, norms, RNG.

Matrices are plain ``numpy.ndarray`` objects. Indices are 0-based.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

log = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class HouseholderReflector:
    """The unitary matrix ``F = omega * (I - beta * v v^*)``."""

    v: np.ndarray
    beta: float
    omega: complex | float

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    def matrix(self) -> np.ndarray:
        n = self.dim
        dtype = np.result_type(self.v, self.omega, float)
        eye = np.eye(n, dtype=dtype)
        return self.omega * (eye - self.beta * np.outer(self.v, self.v.conj()))

    def apply(self, a: np.ndarray) -> np.ndarray:
        """Return ``F @ a`` for a vector or a matrix with ``dim`` rows."""
        a = np.asarray(a)
        if self.beta == 0.0:
            return self.omega * a
        w = self.v.conj() @ a
        if a.ndim == 1:
            return self.omega * (a - self.beta * self.v * w)
        return self.omega * (a - self.beta * np.outer(self.v, w))

    def apply_adjoint(self, a: np.ndarray) -> np.ndarray:
        """Return ``F^* @ a``."""
        a = np.asarray(a)
        om = np.conj(self.omega)
        if self.beta == 0.0:
            return om * a
        w = self.v.conj() @ a
        if a.ndim == 1:
            return om * (a - self.beta * self.v * w)
        return om * (a - self.beta * np.outer(self.v, w))


def _phase(z):
    if z == 0:
        return 1.0
    if np.iscomplexobj(z):
        return z / abs(z)
    return 1.0 if z > 0 else -1.0


def house(x) -> HouseholderReflector:
    """Reflector ``F`` with ``F @ x = (||x||, 0, ..., 0)``.

    The empty vector gives the 0-dimensional identity, the zero vector the
    identity. When ``x`` is already a multiple of ``e_1`` the result is a pure
    phase (``beta = 0``), so already-reduced data is never disturbed.
    """
    x = np.asarray(x)
    if x.ndim != 1:
        raise InvalidInputError("house expects a vector")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("house: non-finite entries")
    n = x.shape[0]
    dtype = np.complex128 if np.iscomplexobj(x) else np.float64
    if n == 0:
        return HouseholderReflector(np.zeros(0, dtype=dtype), 0.0, 1.0)
    alpha = x[0]
    tail = np.linalg.norm(x[1:]) if n > 1 else 0.0
    if tail == 0.0:
        v = np.zeros(n, dtype=dtype)
        v[0] = 1.0
        return HouseholderReflector(v, 0.0, np.conj(_phase(alpha)))
    nrm = math.hypot(abs(alpha), tail)
    ph = _phase(alpha)
    v = x.astype(dtype, copy=True)
    v[0] = alpha + ph * nrm
    beta = 1.0 / (nrm * (nrm + abs(alpha)))
    # (I - beta v v^*) x = -ph * nrm * e1, so omega = -conj(ph) lands on +nrm.
    return HouseholderReflector(v, beta, -np.conj(ph))


@dataclass(frozen=True)
class GivensRotation:
    """Rotation acting on coordinates ``i1 < i2`` of an ``dim``-space.

    The 2x2 core is ``[[c, -s], [s, c]]`` with angle in [0, pi), i.e.
    ``s > 0`` or ``(s == 0 and c == 1)``.
    """

    dim: int
    i1: int
    i2: int
    c: float
    s: float

    @property
    def angle(self) -> float:
        return math.atan2(self.s, self.c)

    def matrix(self) -> np.ndarray:
        g = np.eye(self.dim)
        g[self.i1, self.i1] = self.c
        g[self.i2, self.i2] = self.c
        g[self.i1, self.i2] = -self.s
        g[self.i2, self.i1] = self.s
        return g

    def apply_left_t(self, a: np.ndarray) -> None:
        """In place ``a := G^T a``."""
        rot_rows(a, self.i1, self.i2, self.c, self.s)

    def apply_right(self, a: np.ndarray) -> None:
        """In place ``a := a G``."""
        rot_cols(a, self.i1, self.i2, self.c, self.s)


def givens_cs(x1: float, x2: float) -> tuple[float, float]:
    """Canonical (c, s) with ``G^T (x1, x2) = (+-r, 0)``; (0, 0) maps to angle pi/2."""
    if x2 == 0.0:
        if x1 == 0.0:
            return 0.0, 1.0
        return 1.0, 0.0
    # scale by a power of two (exact) so subnormal inputs keep full precision
    e = math.frexp(max(abs(x1), abs(x2)))[1]
    y1, y2 = math.ldexp(x1, -e), math.ldexp(x2, -e)
    r = math.hypot(y1, y2)
    if y2 < 0.0:
        r = -r
    return y1 / r, y2 / r


def givens(m: int, i1: int, i2: int, x) -> GivensRotation:
    if not (0 <= i1 < i2 < m):
        raise InvalidInputError(f"givens: need 0 <= i1 < i2 < m, got {i1}, {i2}, {m}")
    x1, x2 = float(x[0]), float(x[1])
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise InvalidInputError("givens: non-finite vector")
    c, s = givens_cs(x1, x2)
    return GivensRotation(m, i1, i2, c, s)


def rot_rows(a: np.ndarray, i: int, j: int, c: float, s: float) -> None:
    """Rows i, j of ``a`` replaced by ``G^T`` applied to them."""
    ri = a[i].copy()
    rj = a[j]
    a[i] = c * ri + s * rj
    a[j] = c * rj - s * ri


def rot_cols(a: np.ndarray, i: int, j: int, c: float, s: float) -> None:
    """Columns i, j of ``a`` replaced by themselves times ``G``."""
    ci = a[:, i].copy()
    cj = a[:, j]
    a[:, i] = c * ci + s * cj
    a[:, j] = c * cj - s * ci


def spectral_norm(a) -> float:
    """Largest singular value of ``a``.

    Backed by LAPACK's SVD. Should that fail to converge, the Frobenius norm is
    returned instead (a safe upper bound) and a warning is logged.
    """
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("spectral_norm: non-finite entries")
    if a.size == 0:
        return 0.0
    try:
        return float(np.linalg.norm(a, 2))
    except np.linalg.LinAlgError:
        log.warning("SVD did not converge; using Frobenius norm as bound")
        return float(np.linalg.norm(a, "fro"))


def orthogonality_defect(u) -> float:
    """``||U^* U - I||_2``."""
    u = np.asarray(u)
    n = u.shape[1]
    return spectral_norm(u.conj().T @ u - np.eye(n))


def make_rng(seed=None, *key: int) -> np.random.Generator:
    """PCG64 stream for ``seed``; extra integers select an independent substream.

    Normals come from numpy's ziggurat ``standard_normal``.
    """
    if seed is None:
        return np.random.default_rng()
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, key)])))


def randn_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise InvalidInputError("randn_matrix: rows and cols must be positive")
    return rng.standard_normal((rows, cols))
