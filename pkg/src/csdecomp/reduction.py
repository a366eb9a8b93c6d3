"""Phase I: reduction of a partitioned unitary matrix to bidiagonal block form."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bdb import AngleSet, embed, pair_cos_sin
from .dense import house, spectral_norm
from .errors import InvalidInputError, RejectedInputError


@dataclass(frozen=True, eq=False)
class CsdProblem:
    """An m x m matrix ``x`` partitioned after row ``p`` and column ``q``."""

    x: np.ndarray
    p: int
    q: int

    def __post_init__(self):
        x = np.asarray(self.x)
        if x.dtype.kind not in "fc":
            x = x.astype(float)
        object.__setattr__(self, "x", x)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise InvalidInputError(f"X must be square, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("X has non-finite entries")
        m = x.shape[0]
        if not (0 <= self.q <= self.p and self.p + self.q <= m):
            raise InvalidInputError(f"need 0 <= q <= p and p + q <= m (m={m}, p={self.p}, q={self.q})")

    @property
    def m(self) -> int:
        return self.x.shape[0]

    def defect(self) -> float:
        """``||X^* X - I||_2``."""
        return spectral_norm(self.x.conj().T @ self.x - np.eye(self.m))


@dataclass(frozen=True, eq=False)
class BidiagonalizationResult:
    angles: AngleSet
    p1: np.ndarray
    p2: np.ndarray
    q1: np.ndarray
    q2: np.ndarray

    def reconstruct(self, m: int, p: int) -> np.ndarray:
        q = self.angles.q
        left = _blkdiag(self.p1, self.p2)
        right = _blkdiag(self.q1, self.q2)
        return left @ embed(self.angles, m, p, q) @ right.conj().T


def _blkdiag(a, b):
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=np.result_type(a, b))
    out[:a.shape[0], :a.shape[0]] = a
    out[a.shape[0]:, a.shape[0]:] = b
    return out


def weighted_colinear_average(a, b) -> np.ndarray:
    """Unit vector along ``a + sign(<a, b>) b``, oriented like the longer input.

    Returns the zero vector iff both inputs vanish.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InvalidInputError("weighted_colinear_average: length mismatch")
    w = _signed_sum(a, b, 1.0, 1.0)
    n = np.linalg.norm(w)
    if n == 0.0:
        return np.zeros_like(w)
    return w / n


def _signed_sum(a, b, wa, wb):
    """``wa*a + wb*b``; if the terms point in opposite directions the weaker one is flipped.

    Only roundoff can make the terms disagree, and then the weaker term is
    the one whose orientation is noise.
    """
    ta, tb = wa * a, wb * b
    if np.vdot(ta, tb).real >= 0:
        return ta + tb
    if np.linalg.norm(ta) >= np.linalg.norm(tb):
        return ta - tb
    return tb - ta


def _times_adjoint(a, f):
    """``a @ F^*`` for a reflector ``F``."""
    return f.apply(a.conj().T).conj().T


def bidiagonalize(problem: CsdProblem, max_defect: float = 0.1, observer=None) -> BidiagonalizationResult:
    """Householder reduction to bidiagonal block form.

    ``X = diag(P1, P2) @ embed(angles) @ diag(Q1, Q2)^*``. The optional
    ``observer(i, Y, sources)`` is called after each pass with the working
    matrix and the pairs of source vectors the reflectors were built from.
    """
    x, p, q, m = problem.x, problem.p, problem.q, problem.m
    defect = problem.defect()
    if defect > max_defect:
        raise RejectedInputError(f"input is not unitary: ||X^*X - I||_2 = {defect:.3e}", defect)
    dtype = np.complex128 if np.iscomplexobj(x) else np.float64
    y = np.array(x, dtype=dtype)
    p1 = np.eye(p, dtype=dtype)
    p2 = np.eye(m - p, dtype=dtype)
    q1 = np.eye(q, dtype=dtype)
    q2 = np.eye(m - q, dtype=dtype)
    th, thc = np.zeros(q), np.zeros(q)
    ph, phc = np.zeros(max(q - 1, 0)), np.zeros(max(q - 1, 0))
    cp = sp = 0.0

    for i in range(q):
        sources = {}
        if i == 0:
            u1 = y[:p, 0].copy()
            u2 = -y[p:, 0]
        else:
            a1, b1 = y[i:p, i], y[i:p, q - 1 + i]
            a2, b2 = y[p + i:, i], y[p + i:, q - 1 + i]
            sources["u1"], sources["u2"] = (a1.copy(), b1.copy()), (a2.copy(), b2.copy())
            u1 = _signed_sum(a1, b1, cp, sp)
            u2 = -_signed_sum(a2, b2, cp, sp)
        n1, n2 = np.linalg.norm(u1), np.linalg.norm(u2)
        th[i], thc[i] = math.atan2(n2, n1), math.atan2(n1, n2)
        c, s = (float(t[0]) for t in pair_cos_sin(th[i:i + 1], thc[i:i + 1]))

        f1, f2 = house(u1), house(u2)
        y[i:p] = f1.apply(y[i:p])
        y[p + i:] = f2.apply(y[p + i:])
        p1[:, i:] = _times_adjoint(p1[:, i:], f1)
        p2[:, i:] = _times_adjoint(p2[:, i:], f2)

        if i < q - 1:
            a, b = y[i, i + 1:q], y[p + i, i + 1:q]
            sources["v1"] = (a.copy(), b.copy())
            v1 = -_signed_sum(a, b, s, c)
        b_top, b_bot = y[i, q + i:], y[p + i, q + i:]
        sources["v2"] = (b_top.copy(), b_bot.copy())
        v2 = _signed_sum(b_top, b_bot, s, c)
        if i < q - 1:
            w1, w2 = np.linalg.norm(v1), np.linalg.norm(v2)
            ph[i], phc[i] = math.atan2(w1, w2), math.atan2(w2, w1)
            cp, sp = (float(t[0]) for t in pair_cos_sin(ph[i:i + 1], phc[i:i + 1]))
            g1 = house(v1.conj())
            y[:, i + 1:q] = _times_adjoint(y[:, i + 1:q], g1)
            q1[:, i + 1:] = _times_adjoint(q1[:, i + 1:], g1)
        g2 = house(v2.conj())
        y[:, q + i:] = _times_adjoint(y[:, q + i:], g2)
        q2[:, i:] = _times_adjoint(q2[:, i:], g2)
        if observer is not None:
            observer(i, y.copy(), sources)

    # What remains is a unitary block coupling rows q:p and p+q:m with columns
    # 2q:m. Reduce it to the identity from the right (an LQ factorization).
    rows = list(range(q, p)) + list(range(p + q, m))
    for j, r in enumerate(rows):
        col = 2 * q + j
        g = house(y[r, col:].conj())
        y[:, col:] = _times_adjoint(y[:, col:], g)
        q2[:, q + j:] = _times_adjoint(q2[:, q + j:], g)

    angles = AngleSet(th, thc, ph, phc)
    return BidiagonalizationResult(angles, p1, p2, q1, q2)
