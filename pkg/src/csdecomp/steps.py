"""Phase II kernels: preferred QR factorization, implicit QR step, SVD step.

A *preferred* QR factorization of a symmetric tridiagonal ``A - lambda I``
splits ``A`` at exactly-zero offdiagonals into unreduced blocks, factors each
block with an upper Hessenberg ``Q`` of positive subdiagonal and determinant
one, and, when some block is singular, cycles the first zero row of ``R`` to
the bottom with a permutation. This choice makes the factorization unique,
and with it the QR, SVD and CSD steps built on top.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import GivensRotation, givens, rot_cols, rot_rows
from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class SymTridiagonal:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.array(self.diag, dtype=float).reshape(-1)
        e = np.array(self.offdiag, dtype=float).reshape(-1)
        if e.shape[0] != max(d.shape[0] - 1, 0):
            raise InvalidInputError("SymTridiagonal: offdiag must have n - 1 entries")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise InvalidInputError("SymTridiagonal: non-finite entries")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    @classmethod
    def from_dense(cls, a) -> SymTridiagonal:
        a = np.asarray(a, dtype=float)
        return cls(np.diag(a).copy(), np.diag(a, -1).copy())


@dataclass(frozen=True, eq=False)
class Bidiagonal:
    diag: np.ndarray
    offdiag: np.ndarray
    upper: bool = True

    def __post_init__(self):
        d = np.array(self.diag, dtype=float).reshape(-1)
        e = np.array(self.offdiag, dtype=float).reshape(-1)
        if e.shape[0] != max(d.shape[0] - 1, 0):
            raise InvalidInputError("Bidiagonal: offdiag must have n - 1 entries")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise InvalidInputError("Bidiagonal: non-finite entries")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1 if self.upper else -1)

    @property
    def T(self) -> Bidiagonal:
        return Bidiagonal(self.diag, self.offdiag, not self.upper)


@dataclass(frozen=True, eq=False)
class PreferredQr:
    q: np.ndarray
    r: np.ndarray
    block_starts: tuple
    singular_block: tuple | None = None  # (k, l): block number and its last index
    rotations: list = field(default_factory=list)

    @property
    def permuted(self) -> bool:
        return self.singular_block is not None


def rotation_product(rotations, n: int) -> np.ndarray:
    q = np.eye(n)
    for g in rotations:
        g.apply_right(q)
    return q


def hessenberg_rotations(q: np.ndarray) -> list[GivensRotation]:
    """Factor an orthogonal upper Hessenberg matrix as ``G_1 ... G_{n-1}``.

    Column ``j`` of what remains after peeling ``G_1 .. G_{j-1}`` fixes ``G_j``.
    """
    q = np.array(q, dtype=float)
    n = q.shape[0]
    out = []
    for j in range(n - 1):
        c, s = q[j, j], q[j + 1, j]
        if s < 0 or (s == 0 and c < 0):
            c, s = -c, -s
        nrm = np.hypot(c, s)
        c, s = (c / nrm, s / nrm) if nrm else (0.0, 1.0)
        g = GivensRotation(n, j, j + 1, float(c), float(s))
        out.append(g)
        g.apply_left_t(q)
    return out


def _block_starts(offdiag: np.ndarray, n: int) -> list[int]:
    return [0] + [j + 1 for j in range(n - 1) if offdiag[j] == 0.0]


def _block_qr(a: np.ndarray):
    """Q R of one unreduced block with positive Q subdiagonal and det(Q) = 1."""
    n = a.shape[0]
    if n == 1:
        return np.ones((1, 1)), a.copy()
    q, r = np.linalg.qr(a)
    for j in range(n - 1):
        if q[j + 1, j] < 0:
            q[:, j] *= -1
            r[j] *= -1
    if np.linalg.det(q) < 0:
        q[:, -1] *= -1
        r[-1] *= -1
    return q, r


def preferred_qr_explicit(a: SymTridiagonal, lam: float, tol: float = 0.0) -> PreferredQr:
    """Explicit preferred QR factorization of ``A - lam I``.

    A block counts as singular when the last diagonal entry of its ``R`` is at
    most ``tol`` in magnitude.
    """
    n = a.n
    m = a.dense() - lam * np.eye(n)
    starts = _block_starts(a.offdiag, n)
    ends = starts[1:] + [n]
    q = np.eye(n)
    r = m.copy()
    singular = None
    for k, (lo, hi) in enumerate(zip(starts, ends)):
        qk, rk = _block_qr(m[lo:hi, lo:hi])
        q[lo:hi, lo:hi] = qk
        r[lo:hi, lo:hi] = rk
        if abs(rk[-1, -1]) <= tol:
            r[hi - 1, hi - 1] = 0.0
            singular = (k, hi - 1)
            break
    if singular is not None:
        l = singular[1]
        p = np.zeros((n, n))
        p[:l, :l] = np.eye(l)
        for j in range(l, n - 1):
            p[j + 1, j] = 1.0
        p[l, n - 1] = (-1.0) ** (n - 1 - l)
        q = q @ p
        r = p.T @ r
    return PreferredQr(q, r, tuple(starts), singular, hessenberg_rotations(q))


def qr_step(a: SymTridiagonal, lam: float, tol: float = 0.0):
    """One implicit QR step on ``A`` with shift ``lam`` as a Givens chase.

    Returns ``(rotations, Abar)`` with ``Q = G_1 ... G_{n-1}`` the orthogonal
    factor of the preferred QR factorization of ``A - lam I`` and
    ``Abar = Q^T A Q``. Vectors with norm at most ``tol`` count as zero.
    """
    n = a.n
    ab = a.dense() - lam * np.eye(n)
    rots = []
    for i in range(n - 1):
        chase = False
        if i > 0:
            x = ab[i:i + 2, i - 1]
            chase = np.hypot(x[0], x[1]) > tol
        if not chase:
            x = ab[i:i + 2, i]
            if np.hypot(x[0], x[1]) <= tol:
                x = (0.0, 0.0)
        g = givens(n, i, i + 1, x)
        rot_rows(ab, i, i + 1, g.c, g.s)
        rot_cols(ab, i, i + 1, g.c, g.s)
        if chase:
            ab[i + 1, i - 1] = ab[i - 1, i + 1] = 0.0
        rots.append(g)
    out = SymTridiagonal(np.diag(ab) + lam, 0.5 * (np.diag(ab, 1) + np.diag(ab, -1)))
    return rots, out


def bulge_start(x, sigma: float) -> tuple[float, float]:
    """A vector along ``(x1^2 - sigma^2, x1 x2)``, formed without overflow.

    The zero vector comes back exactly when that direction is undefined.
    """
    x1, x2 = float(x[0]), float(x[1])
    sigma = float(sigma)
    if sigma < 0:
        raise InvalidInputError("bulge_start: sigma must be nonnegative")
    if sigma == 0.0:
        # x1 * (x1, x2): skip the products, the line is the same
        return (x1, x2) if x1 != 0.0 else (0.0, 0.0)
    scale = max(abs(x1), abs(x2), sigma)
    y1, y2, s = x1 / scale, x2 / scale, sigma / scale
    return (y1 - s) * (y1 + s), y1 * y2


def _is_zero(x, tol: float) -> bool:
    return np.hypot(x[0], x[1]) <= tol


def _start(x1: float, x2: float, sigma: float, tol: float):
    """bulge_start, with directions of size at most ``tol * max(|x1|, |x2|, sigma)`` treated as zero."""
    if tol > 0.0:
        raw = np.hypot((x1 - sigma) * (x1 + sigma), x1 * x2)
        if raw <= tol * max(abs(x1), abs(x2), sigma):
            return 0.0, 0.0
    return bulge_start((x1, x2), sigma)


def svd_step(b: Bidiagonal, sigma: float, tol: float = 0.0):
    """One implicit-shift SVD step, valid with any number of zeros on the band.

    Returns ``(S, T, Bbar)`` with ``Bbar = S^T B T`` where ``S`` and ``T`` are
    the orthogonal factors of the preferred QR factorizations of
    ``B B^T - sigma^2 I`` and ``B^T B - sigma^2 I``. Bulges of norm at most
    ``tol`` count as absent, and so do new-bulge directions at that scale.
    """
    if not b.upper:
        s_rots, t_rots, bbar = svd_step(b.T, sigma, tol)
        return t_rots, s_rots, bbar.T
    n = b.n
    bb = b.dense()
    s_rots, t_rots = [], []
    for i in range(n - 1):
        chase = False
        if i > 0:
            x = bb[i - 1, i:i + 2]
            chase = not _is_zero(x, tol)
        if not chase:
            x = _start(bb[i, i], bb[i, i + 1], sigma, tol)
        t = givens(n, i, i + 1, x)
        rot_cols(bb, i, i + 1, t.c, t.s)
        if chase:
            bb[i - 1, i + 1] = 0.0
        t_rots.append(t)

        x = bb[i:i + 2, i]
        chase = not _is_zero(x, tol)
        if not chase:
            x = _start(bb[i, i + 1], bb[i + 1, i + 1], sigma, tol)
        s = givens(n, i, i + 1, x)
        rot_rows(bb, i, i + 1, s.c, s.s)
        if chase:
            bb[i + 1, i] = 0.0
        s_rots.append(s)
    return s_rots, t_rots, Bidiagonal(np.diag(bb).copy(), np.diag(bb, 1).copy(), True)
