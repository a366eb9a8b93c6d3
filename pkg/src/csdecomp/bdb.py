"""Bidiagonal block form and its (theta, phi) parameterization.

A 2q x 2q real orthogonal matrix in bidiagonal block form is determined by
``q`` angles ``theta`` and ``q - 1`` angles ``phi``, all in [0, pi/2]:

* ``B11`` upper bidiagonal, diag ``c_i c'_{i-1}``, superdiag ``-s_i s'_i``
* ``B21`` upper bidiagonal, diag ``-s_i c'_{i-1}``, superdiag ``-c_i s'_i``
* ``B12`` lower bidiagonal, diag ``s_i c'_i``, subdiag ``c_{i+1} s'_i``
* ``B22`` lower bidiagonal, diag ``c_i c'_i``, subdiag ``-s_{i+1} s'_i``

with ``c_i = cos(theta_i)``, ``c'_i = cos(phi_i)`` and so on, and the
conventions ``c'_0 = c'_q = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dense import EPS
from .errors import InvalidInputError, StructureError

HALF_PI = math.pi / 2


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def pair_cos_sin(angle: np.ndarray, comp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """cos and sin of an angle stored as (psi, pi/2 - psi), using the smaller member."""
    small = angle <= comp
    c = np.where(small, np.cos(angle), np.sin(comp))
    s = np.where(small, np.sin(angle), np.cos(comp))
    return c, s


@dataclass(frozen=True, eq=False)
class AngleSet:
    """Angles of a matrix in bidiagonal block form, each kept with its complement."""

    theta: np.ndarray
    theta_c: np.ndarray
    phi: np.ndarray
    phi_c: np.ndarray

    def __post_init__(self):
        for name in ("theta", "theta_c", "phi", "phi_c"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        q = self.theta.shape[0]
        if self.theta_c.shape != (q,) or self.phi.shape != (max(q - 1, 0),) or self.phi_c.shape != self.phi.shape:
            raise InvalidInputError("AngleSet: inconsistent lengths")
        for a, b in ((self.theta, self.theta_c), (self.phi, self.phi_c)):
            if a.size == 0:
                continue
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
                raise InvalidInputError("AngleSet: non-finite angle")
            if a.min() < 0 or b.min() < 0:
                raise InvalidInputError("AngleSet: angles must lie in [0, pi/2]")
            if np.max(np.abs(a + b - HALF_PI)) > 4 * EPS:
                raise InvalidInputError("AngleSet: angle and complement disagree")

    @classmethod
    def from_angles(cls, theta, phi=()) -> AngleSet:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        phi = np.asarray(phi, dtype=float).reshape(-1)
        if theta.size and (theta.min() < 0 or theta.max() > HALF_PI):
            raise InvalidInputError("theta outside [0, pi/2]")
        if phi.size and (phi.min() < 0 or phi.max() > HALF_PI):
            raise InvalidInputError("phi outside [0, pi/2]")
        return cls(theta, HALF_PI - theta, phi, HALF_PI - phi)

    @classmethod
    def identity(cls, q: int) -> AngleSet:
        return cls.from_angles(np.zeros(q), np.zeros(max(q - 1, 0)))

    @property
    def q(self) -> int:
        return self.theta.shape[0]

    def trig(self):
        """(c, s, c', s') arrays."""
        c, s = pair_cos_sin(self.theta, self.theta_c)
        cp, sp = pair_cos_sin(self.phi, self.phi_c)
        return c, s, cp, sp

    def replace_range(self, lo: int, hi: int, sub: AngleSet) -> AngleSet:
        """Substitute ``theta[lo:hi+1]`` and ``phi[lo:hi]`` by those of ``sub``."""
        th, thc = self.theta.copy(), self.theta_c.copy()
        ph, phc = self.phi.copy(), self.phi_c.copy()
        th[lo:hi + 1], thc[lo:hi + 1] = sub.theta, sub.theta_c
        ph[lo:hi], phc[lo:hi] = sub.phi, sub.phi_c
        return AngleSet(th, thc, ph, phc)

    def sub(self, lo: int, hi: int) -> AngleSet:
        return AngleSet(self.theta[lo:hi + 1], self.theta_c[lo:hi + 1],
                        self.phi[lo:hi], self.phi_c[lo:hi])

    def __repr__(self):
        return f"AngleSet(theta={self.theta.tolist()}, phi={self.phi.tolist()})"


@dataclass(frozen=True, eq=False)
class SignatureQuadruple:
    d1: np.ndarray
    d2: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    def all_positive(self) -> bool:
        return all(np.all(x == 1) for x in (self.d1, self.d2, self.e1, self.e2))


def blocks(angles: AngleSet):
    """The four q x q blocks (B11, B12, B21, B22)."""
    q = angles.q
    c, s, cp, sp = angles.trig()
    cpl = np.concatenate(([1.0], cp))  # c'_{i-1}
    cpr = np.concatenate((cp, [1.0]))  # c'_i
    b11 = np.diag(c * cpl) + np.diag(-s[:-1] * sp, 1) if q else np.zeros((0, 0))
    b21 = np.diag(-s * cpl) + np.diag(-c[:-1] * sp, 1) if q else np.zeros((0, 0))
    b12 = np.diag(s * cpr) + np.diag(c[1:] * sp, -1) if q else np.zeros((0, 0))
    b22 = np.diag(c * cpr) + np.diag(-s[1:] * sp, -1) if q else np.zeros((0, 0))
    return b11, b12, b21, b22


def materialize(angles: AngleSet) -> np.ndarray:
    b11, b12, b21, b22 = blocks(angles)
    return np.block([[b11, b12], [b21, b22]])


def embed(angles: AngleSet, m: int, p: int, q: int) -> np.ndarray:
    """The m x m middle factor with identity padding of sizes p-q and m-p-q."""
    if not (0 <= q <= p and p + q <= m):
        raise InvalidInputError(f"embed: need 0 <= q <= p, p + q <= m (m={m}, p={p}, q={q})")
    if angles.q != q:
        raise InvalidInputError("embed: angle count does not match q")
    b11, b12, b21, b22 = blocks(angles)
    x = np.zeros((m, m))
    x[:q, :q] = b11
    x[:q, q:2 * q] = b12
    x[p:p + q, :q] = b21
    x[p:p + q, q:2 * q] = b22
    x[q:p, 2 * q:q + p] = np.eye(p - q)
    x[p + q:, q + p:] = np.eye(m - p - q)
    return x


def _split(m: np.ndarray, q: int):
    m = np.asarray(m, dtype=float)
    if m.shape != (2 * q, 2 * q):
        raise InvalidInputError(f"expected a {2 * q}x{2 * q} matrix, got {m.shape}")
    return m[:q, :q], m[:q, q:], m[q:, :q], m[q:, q:]


def _off_band(b: np.ndarray, upper: bool) -> np.ndarray:
    keep = np.eye(b.shape[0], dtype=bool)
    keep |= np.eye(b.shape[0], k=1 if upper else -1, dtype=bool)
    return b[~keep]


def structure_defect(b11, b12, b21, b22) -> float:
    """Largest magnitude among entries that should be zero."""
    vals = [_off_band(b11, True), _off_band(b21, True), _off_band(b12, False), _off_band(b22, False)]
    return max((float(np.max(np.abs(v))) for v in vals if v.size), default=0.0)


def validate_sign_pattern(m, q: int, tol: float = 0.0) -> bool:
    b11, b12, b21, b22 = _split(m, q)
    if structure_defect(b11, b12, b21, b22) > tol:
        return False
    checks = [
        np.diag(b11) >= -tol, np.diag(b11, 1) <= tol,
        np.diag(b21) <= tol, np.diag(b21, 1) <= tol,
        np.diag(b12) >= -tol, np.diag(b12, -1) >= -tol,
        np.diag(b22) >= -tol, np.diag(b22, -1) <= tol,
    ]
    return all(bool(np.all(c)) for c in checks)


def _sgn(x: float) -> float:
    return -1.0 if x < 0 else 1.0


def fix_signs(b11, b12, b21, b22, tol: float = 1e-10):
    """Signatures putting an orthogonal bidiagonal 2x2 block matrix into canonical form.

    Returns ``(SignatureQuadruple, AngleSet)`` such that
    ``diag(D1, D2) @ M @ diag(E1, E2)`` is, up to roundoff, ``materialize(angles)``.

    Each angle is read off a pair of redundant entries, weighted the same way
    the Householder reduction weights its source vectors, so no division by
    accumulated sines or cosines is needed.
    """
    b11, b12, b21, b22 = (np.asarray(b, dtype=float) for b in (b11, b12, b21, b22))
    q = b11.shape[0]
    if any(b.shape != (q, q) for b in (b12, b21, b22)):
        raise InvalidInputError("fix_signs: blocks must be square and equal-sized")
    defect = structure_defect(b11, b12, b21, b22)
    if defect > tol:
        raise StructureError(f"fix_signs: off-band entry of size {defect:.3e}")
    d1, d2, e1, e2 = (np.ones(q) for _ in range(4))
    th, thc = np.zeros(q), np.zeros(q)
    ph, phc = np.zeros(max(q - 1, 0)), np.zeros(max(q - 1, 0))
    cp, sp = 1.0, 0.0
    for i in range(q):
        u1 = cp * b11[i, i] * e1[i]
        u2 = -cp * b21[i, i] * e1[i]
        if i > 0:
            u1 += sp * b12[i, i - 1] * e2[i - 1]
            u2 -= sp * b22[i, i - 1] * e2[i - 1]
        d1[i], d2[i] = _sgn(u1), _sgn(u2)
        a1, a2 = abs(u1), abs(u2)
        th[i], thc[i] = math.atan2(a2, a1), math.atan2(a1, a2)
        if th[i] <= thc[i]:
            c, s = math.cos(th[i]), math.sin(th[i])
        else:
            c, s = math.sin(thc[i]), math.cos(thc[i])
        v2 = s * d1[i] * b12[i, i] + c * d2[i] * b22[i, i]
        e2[i] = _sgn(v2)
        if i < q - 1:
            v1 = -s * d1[i] * b11[i, i + 1] - c * d2[i] * b21[i, i + 1]
            e1[i + 1] = _sgn(v1)
            w1, w2 = abs(v1), abs(v2)
            ph[i], phc[i] = math.atan2(w1, w2), math.atan2(w2, w1)
            if ph[i] <= phc[i]:
                cp, sp = math.cos(ph[i]), math.sin(ph[i])
            else:
                cp, sp = math.sin(phc[i]), math.cos(phc[i])
    return SignatureQuadruple(d1, d2, e1, e2), AngleSet(th, thc, ph, phc)


def extract_angles(m, q: int, tol: float = 64 * EPS) -> AngleSet:
    """Recover (theta, phi) from a matrix already in bidiagonal block form."""
    if q == 0:
        return AngleSet.identity(0)
    if not validate_sign_pattern(m, q, tol):
        raise StructureError("extract_angles: matrix is not in bidiagonal block form")
    _, angles = fix_signs(*_split(m, q), tol=tol)
    return angles
