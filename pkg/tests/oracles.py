"""Independent reference computations and random case generators for the tests."""

from __future__ import annotations

import numpy as np

from csdecomp.bdb import AngleSet, HALF_PI, blocks
from csdecomp.steps import Bidiagonal, SymTridiagonal

EPS = np.finfo(float).eps


def sturm_count(d, e, x: float) -> int:
    """Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x."""
    count = 0
    t = 1.0
    for i in range(len(d)):
        off = e[i - 1] ** 2 if i else 0.0
        t = d[i] - x - (off / t if off else 0.0)
        if t == 0.0:
            t = -EPS * (abs(d[i]) + abs(x) + 1e-300)
        if t < 0:
            count += 1
    return count


def bisect_eigenvalue(d, e, k: int, tol: float = 0.0) -> float:
    """k-th smallest eigenvalue (0-based) by bisection on the Sturm count.

    With ``tol = 0`` bisection runs until the bracket is two adjacent doubles.
    """
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    r = np.abs(d).max() + 2 * (np.abs(e).max() if e.size else 0.0) + 1.0
    lo, hi = -r, r
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if sturm_count(d, e, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def block_bounds(offdiag, n: int):
    starts = [0] + [j + 1 for j in range(n - 1) if offdiag[j] == 0.0]
    return list(zip(starts, starts[1:] + [n]))


def random_tridiagonal(rng, n_max: int = 8, zero_prob: float = 0.3) -> SymTridiagonal:
    n = int(rng.integers(1, n_max + 1))
    d = rng.uniform(-2, 2, n)
    e = rng.uniform(-2, 2, n - 1)
    e[rng.random(n - 1) < zero_prob] = 0.0
    return SymTridiagonal(d, e)


def tridiagonal_shift(rng, a: SymTridiagonal, exact_prob: float = 0.1) -> float:
    """A random shift; with probability ``exact_prob`` an exact eigenvalue of ``a``.

    Exact means representable: the diagonal of a 1 x 1 block, or when there is
    none, the eigenvalue of a 1 x 1 block planted by zeroing an offdiagonal.
    """
    if rng.random() >= exact_prob:
        return float(rng.uniform(-2, 2))
    ones = [lo for lo, hi in block_bounds(a.offdiag, a.n) if hi - lo == 1]
    if ones:
        return float(a.diag[rng.choice(ones)])
    return float(rng.uniform(-2, 2))


def with_exact_eigenvalue(rng, a: SymTridiagonal):
    """Plant a 1 x 1 block so that some diagonal entry is an exact eigenvalue."""
    if a.n == 1:
        return a, float(a.diag[0])
    e = a.offdiag.copy()
    j = int(rng.integers(a.n))
    if j > 0:
        e[j - 1] = 0.0
    if j < a.n - 1:
        e[j] = 0.0
    return SymTridiagonal(a.diag, e), float(a.diag[j])


def random_bidiagonal(rng, n_max: int = 8, zero_prob: float = 0.2) -> Bidiagonal:
    n = int(rng.integers(1, n_max + 1))
    d = rng.uniform(-2, 2, n)
    e = rng.uniform(-2, 2, n - 1)
    d[rng.random(n) < zero_prob] = 0.0
    e[rng.random(n - 1) < zero_prob] = 0.0
    return Bidiagonal(d, e)


def bidiagonal_shift(rng, b: Bidiagonal):
    """``(b', sigma)`` with sigma 0, random, or an exact singular value, each with probability 1/3.

    An exact singular value must be representable, so it is taken as ``|d_j|``
    after planting zeros around ``d_j`` to make it a 1 x 1 block.
    """
    kind = int(rng.integers(3))
    if kind == 0:
        return b, 0.0
    if kind == 1:
        return b, float(rng.uniform(0, 2))
    j = int(rng.integers(b.n))
    e = b.offdiag.copy()
    if j > 0:
        e[j - 1] = 0.0
    if j < b.n - 1:
        e[j] = 0.0
    return Bidiagonal(b.diag, e), abs(float(b.diag[j]))


def svd_step_sensitivity(b: Bidiagonal, sigma: float, tol: float, trials: int = 20, seed: int = 0) -> float:
    """How far svd_step's rotations move when ``b`` gets random one-ulp relative perturbations.

    Any backward-stable computation of these rotations can be off by this much.
    """
    from csdecomp.steps import svd_step

    s0, t0, _ = svd_step(b, sigma, tol=tol)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = b.diag * (1 + EPS * rng.uniform(-1, 1, b.n))
        e = b.offdiag * (1 + EPS * rng.uniform(-1, 1, b.n - 1))
        s1, t1, _ = svd_step(Bidiagonal(d, e), sigma, tol=tol)
        worst = max(worst, rotations_close(s0, s1), rotations_close(t0, t1))
    return worst


def rotations_close(a, b) -> float:
    """Largest entry difference between two rotation sequences (inf on length mismatch)."""
    if len(a) != len(b):
        return float("inf")
    return max((max(abs(x.c - y.c), abs(x.s - y.s)) for x, y in zip(a, b)), default=0.0)


def random_angles(rng, q: int, lo: float = 0.0, hi: float = HALF_PI) -> AngleSet:
    return AngleSet.from_angles(rng.uniform(lo, hi, q), rng.uniform(lo, hi, q - 1))


def block_identity_defect(angles: AngleSet, mu: float, nu: float) -> float:
    """Largest violation of the four Gram identities tying the blocks together.

    ``B11^T B11 - mu^2 = -(B21^T B21 - nu^2)``, ``B11 B11^T - mu^2 = -(B12 B12^T - nu^2)``,
    ``B22^T B22 - mu^2 = -(B12^T B12 - nu^2)`` and ``B22 B22^T - mu^2 = -(B21 B21^T - nu^2)``.
    """
    b11, b12, b21, b22 = blocks(angles)
    i = np.eye(angles.q)
    pairs = [
        (b11.T @ b11, b21.T @ b21), (b11 @ b11.T, b12 @ b12.T),
        (b22.T @ b22, b12.T @ b12), (b22 @ b22.T, b21 @ b21.T),
    ]
    return max(float(np.abs((x - mu * mu * i) + (y - nu * nu * i)).max()) for x, y in pairs)


def haar(rng, n: int) -> np.ndarray:
    """Haar orthogonal matrix via QR with the R-diagonal sign fix."""
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.diag(r))
