"""Phase II: simultaneous SVD steps on the four blocks, deflation, shifts, and the top-level ``csd``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bdb import HALF_PI, AngleSet, SignatureQuadruple, blocks, fix_signs
from .dense import EPS, GivensRotation, givens_cs, orthogonality_defect, spectral_norm
from .errors import ConvergenceError, InvalidInputError, StructureError
from .reduction import CsdProblem, bidiagonalize
from .steps import bulge_start

DEFAULT_TAU = EPS  # angles within one ulp of 1 from an endpoint are rounded onto it
BULGE_TOL = 0.0
INV_SQRT2 = 1 / math.sqrt(2)


@dataclass(frozen=True)
class BlockRange:
    """Active index range ``lo..hi`` (0-based, inclusive) of the unreduced part."""

    lo: int
    hi: int

    def __post_init__(self):
        if not 0 <= self.lo < self.hi:
            raise InvalidInputError(f"BlockRange: need 0 <= lo < hi, got {self.lo}, {self.hi}")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class ShiftPair:
    """Shifts with ``mu^2 + nu^2 = 1``; build with ``from_mu`` or ``from_nu``."""

    mu: float
    nu: float

    def __post_init__(self):
        if not (0.0 <= self.mu <= 1.0 and 0.0 <= self.nu <= 1.0):
            raise InvalidInputError("ShiftPair: shifts must lie in [0, 1]")
        if abs(self.mu * self.mu + self.nu * self.nu - 1.0) > 4 * EPS:
            raise InvalidInputError("ShiftPair: mu^2 + nu^2 != 1")

    @staticmethod
    def _complement(x: float) -> float:
        return math.sqrt((1.0 - x) * (1.0 + x))

    @classmethod
    def from_mu(cls, mu: float) -> ShiftPair:
        mu = min(max(float(mu), 0.0), 1.0)
        return cls(mu, cls._complement(mu))

    @classmethod
    def from_nu(cls, nu: float) -> ShiftPair:
        nu = min(max(float(nu), 0.0), 1.0)
        return cls(cls._complement(nu), nu)


@dataclass(frozen=True, eq=False)
class CsdFactors:
    theta: np.ndarray
    theta_c: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    @property
    def q(self) -> int:
        return self.theta.shape[0]

    def middle(self, m: int, p: int) -> np.ndarray:
        return cs_middle(self.theta, self.theta_c, m, p)

    def reconstruct(self) -> np.ndarray:
        p, mp = self.u1.shape[0], self.u2.shape[0]
        m = p + mp
        left = _blkdiag(self.u1, self.u2)
        right = _blkdiag(self.v1, self.v2)
        return left @ self.middle(m, p) @ right.conj().T


@dataclass(frozen=True)
class ResidualReport:
    epsilon_in: float
    ortho_u1: float
    ortho_u2: float
    ortho_v1: float
    ortho_v2: float
    e11: float
    e12: float
    e21: float
    e22: float
    iterations: int = 0

    METRICS = ("ortho_u1", "ortho_u2", "ortho_v1", "ortho_v2", "e11", "e12", "e21", "e22")

    def metrics(self) -> dict:
        return {k: getattr(self, k) for k in self.METRICS}

    def max_metric(self) -> float:
        return max(self.metrics().values())

    def to_dict(self) -> dict:
        d = {"epsilon_in": self.epsilon_in}
        d.update(self.metrics())
        d["iterations"] = self.iterations
        return d


def _blkdiag(a, b):
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=np.result_type(a, b))
    out[:a.shape[0], :a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def cs_middle(theta, theta_c, m: int, p: int) -> np.ndarray:
    """The cosine-sine middle factor ``[[C, S, 0, 0], [0, 0, I, 0], [-S, C, 0, 0], [0, 0, 0, I]]``."""
    theta = np.asarray(theta, dtype=float)
    theta_c = np.asarray(theta_c, dtype=float)
    q = theta.shape[0]
    small = theta <= theta_c
    c = np.where(small, np.cos(theta), np.sin(theta_c))
    s = np.where(small, np.sin(theta), np.cos(theta_c))
    x = np.zeros((m, m))
    idx = np.arange(q)
    x[idx, idx] = c
    x[idx, q + idx] = s
    x[p + idx, idx] = -s
    x[p + idx, q + idx] = c
    x[q:p, 2 * q:q + p] = np.eye(p - q)
    x[p + q:, q + p:] = np.eye(m - p - q)
    return x


# ---------------------------------------------------------------------------
# one CSD step


def merge(v, w, v_existing: bool, w_existing: bool, v_shift: float = 0.0, w_shift: float = 0.0):
    """Pick the direction for a rotation that two blocks both determine.

    An existing bulge beats a new one. Two existing bulges are averaged with
    the longer one dominating. Two new bulges defer to the block with the
    smaller shift (``v`` on ties).
    """
    if v_existing != w_existing:
        return tuple(v) if v_existing else tuple(w)
    if v_existing:
        ip = v[0] * w[0] + v[1] * w[1]
        sg = 1.0 if ip >= 0 else -1.0
        return v[0] + sg * w[0], v[1] + sg * w[1]
    return tuple(v) if v_shift <= w_shift else tuple(w)


def _rot_rows(b, i, c, s, lo, hi):
    ri, rj = b[i], b[i + 1]
    for j in range(lo, hi):
        x, y = ri[j], rj[j]
        ri[j] = c * x + s * y
        rj[j] = c * y - s * x


def _rot_cols(b, i, c, s, lo, hi):
    for r in range(lo, hi):
        row = b[r]
        x, y = row[i], row[i + 1]
        row[i] = c * x + s * y
        row[i + 1] = c * y - s * x


@dataclass(eq=False)
class StepResult:
    """Outcome of one CSD step on the range ``lo..hi``.

    Rotations use indices local to the range. The step maps the materialized
    matrix ``B`` to ``diag(U1, U2)^T B diag(V1, V2)`` with ``U1 = S1 D1``,
    ``U2 = S2 D2``, ``V1 = T1 E1``, ``V2 = T2 E2``.
    """

    angles: AngleSet
    lo: int
    hi: int
    t1: list = field(default_factory=list)
    s1: list = field(default_factory=list)
    s2: list = field(default_factory=list)
    t2: list = field(default_factory=list)
    signs: SignatureQuadruple | None = None

    def _apply(self, a, rots, signs):
        off = self.lo
        for g in rots:
            i, j = off + g.i1, off + g.i2
            ci = a[:, i].copy()
            a[:, i] = g.c * ci + g.s * a[:, j]
            a[:, j] = g.c * a[:, j] - g.s * ci
        k = self.hi - self.lo + 1
        a[:, off:off + k] *= signs

    def apply_to(self, u1, u2, v1, v2) -> None:
        """Right-multiply accumulators (first q columns carry the angle blocks) in place."""
        self._apply(u1, self.s1, self.signs.d1)
        self._apply(u2, self.s2, self.signs.d2)
        self._apply(v1, self.t1, self.signs.e1)
        self._apply(v2, self.t2, self.signs.e2)

    def updates(self, q: int):
        """Dense ``q x q`` factors (U1, U2, V1, V2) of this step."""
        mats = [np.eye(q) for _ in range(4)]
        self.apply_to(*mats)
        return tuple(mats)


def _check_range(angles: AngleSet, rng: BlockRange) -> None:
    q = angles.q
    if rng.hi >= q:
        raise StructureError(f"range {rng} outside q = {q}")
    if rng.lo > 0 and angles.phi[rng.lo - 1] != 0.0:
        raise StructureError(f"phi[{rng.lo - 1}] is nonzero, so the range is not decoupled")
    if rng.hi < q - 1 and angles.phi[rng.hi] != 0.0:
        raise StructureError(f"phi[{rng.hi}] is nonzero, so the range is not decoupled")


def csd_step(angles: AngleSet, rng: BlockRange, shifts: ShiftPair, bulge_tol: float = BULGE_TOL,
             sign_tol: float = 1e-8) -> StepResult:
    """Four interleaved SVD steps (shift mu on B11, B22; nu on B12, B21) on one range.

    Each rotation is computed once: from the two blocks it acts on, combined
    by ``merge``. A bulge vector of norm at most ``bulge_tol`` counts as absent.
    Signs are restored at the end, giving the new angles.
    """
    _check_range(angles, rng)
    lo, hi = rng.lo, rng.hi
    k = hi - lo + 1
    b11, b12, b21, b22 = (b.tolist() for b in blocks(angles.sub(lo, hi)))
    mu, nu = shifts.mu, shifts.nu
    res = StepResult(angles, lo, hi)

    def pick(ex_a, new_a, sh_a, ex_b, new_b, sh_b):
        a_ok = ex_a is not None and math.hypot(*ex_a) > bulge_tol
        b_ok = ex_b is not None and math.hypot(*ex_b) > bulge_tol
        va = ex_a if a_ok else bulge_start(new_a, sh_a)
        vb = ex_b if b_ok else bulge_start(new_b, sh_b)
        return merge(va, vb, a_ok, b_ok, sh_a, sh_b)

    for i in range(k - 1):
        w0, w1 = max(0, i - 1), min(k, i + 3)

        # T1: columns i, i+1 of B11 and B21
        x = pick((b11[i - 1][i], b11[i - 1][i + 1]) if i else None, (b11[i][i], b11[i][i + 1]), mu,
                 (b21[i - 1][i], b21[i - 1][i + 1]) if i else None, (b21[i][i], b21[i][i + 1]), nu)
        c, s = givens_cs(*x)
        _rot_cols(b11, i, c, s, w0, w1)
        _rot_cols(b21, i, c, s, w0, w1)
        if i:
            b11[i - 1][i + 1] = b21[i - 1][i + 1] = 0.0
        res.t1.append(GivensRotation(k, i, i + 1, c, s))

        # S1: rows i, i+1 of B11 and B12
        x = pick((b11[i][i], b11[i + 1][i]), (b11[i][i + 1], b11[i + 1][i + 1]), mu,
                 (b12[i][i - 1], b12[i + 1][i - 1]) if i else None, (b12[i][i], b12[i + 1][i]), nu)
        c, s = givens_cs(*x)
        _rot_rows(b11, i, c, s, w0, w1)
        _rot_rows(b12, i, c, s, w0, w1)
        b11[i + 1][i] = 0.0
        if i:
            b12[i + 1][i - 1] = 0.0
        res.s1.append(GivensRotation(k, i, i + 1, c, s))

        # S2: rows i, i+1 of B21 and B22
        x = pick((b22[i][i - 1], b22[i + 1][i - 1]) if i else None, (b22[i][i], b22[i + 1][i]), mu,
                 (b21[i][i], b21[i + 1][i]), (b21[i][i + 1], b21[i + 1][i + 1]), nu)
        c, s = givens_cs(*x)
        _rot_rows(b21, i, c, s, w0, w1)
        _rot_rows(b22, i, c, s, w0, w1)
        b21[i + 1][i] = 0.0
        if i:
            b22[i + 1][i - 1] = 0.0
        res.s2.append(GivensRotation(k, i, i + 1, c, s))

        # T2: columns i, i+1 of B12 and B22
        x = pick((b22[i][i], b22[i][i + 1]), (b22[i + 1][i], b22[i + 1][i + 1]), mu,
                 (b12[i][i], b12[i][i + 1]), (b12[i + 1][i], b12[i + 1][i + 1]), nu)
        c, s = givens_cs(*x)
        _rot_cols(b12, i, c, s, w0, w1)
        _rot_cols(b22, i, c, s, w0, w1)
        b12[i][i + 1] = b22[i][i + 1] = 0.0
        res.t2.append(GivensRotation(k, i, i + 1, c, s))

    signs, sub = fix_signs(np.array(b11), np.array(b12), np.array(b21), np.array(b22), tol=sign_tol)
    res.signs = signs
    res.angles = angles.replace_range(lo, hi, sub)
    return res


# ---------------------------------------------------------------------------
# deflation and shifts


def round_negligible(angles: AngleSet, tau: float) -> AngleSet:
    """Snap angles within ``tau`` of 0 or pi/2 onto the endpoint."""
    if tau < 0:
        raise InvalidInputError("round_negligible: tau must be nonnegative")

    def snap(a, b):
        a, b = a.copy(), b.copy()
        lo = a <= tau
        a[lo], b[lo] = 0.0, HALF_PI
        hi = ~lo & (b <= tau)
        a[hi], b[hi] = HALF_PI, 0.0
        return a, b

    th, thc = snap(angles.theta, angles.theta_c)
    ph, phc = snap(angles.phi, angles.phi_c)
    return AngleSet(th, thc, ph, phc)


def find_block(angles: AngleSet, zero_tol: float = 0.0) -> BlockRange | None:
    """Trailing unreduced range with ``lo`` as small as possible, or None when fully deflated."""
    phi = angles.phi
    nz = phi > zero_tol
    if not nz.any():
        return None
    hi = int(np.nonzero(nz)[0][-1]) + 1
    lo = hi - 1
    while lo > 0 and nz[lo - 1]:
        lo -= 1
    return BlockRange(lo, hi)


def _sigma_min_2x2(f: float, g: float, h: float) -> float:
    """Smaller singular value of ``[[f, g], [0, h]]`` without overflow."""
    fa, ga, ha = abs(f), abs(g), abs(h)
    fhmn, fhmx = min(fa, ha), max(fa, ha)
    if fhmn == 0.0:
        return 0.0
    if ga < fhmx:
        as_ = 1.0 + fhmn / fhmx
        at = (fhmx - fhmn) / fhmx
        au = (ga / fhmx) ** 2
        c = 2.0 / (math.sqrt(as_ * as_ + au) + math.sqrt(at * at + au))
        return fhmn * c
    au = fhmx / ga
    if au == 0.0:
        return fhmn * fhmx / ga
    as_ = 1.0 + fhmn / fhmx
    at = (fhmx - fhmn) / fhmx
    c = 1.0 / (math.sqrt(1.0 + (as_ * au) ** 2) + math.sqrt(1.0 + (at * au) ** 2))
    return (fhmn * c) * au * 2.0


def choose_shifts(angles: AngleSet, rng: BlockRange, strategy: str = "wilkinson") -> ShiftPair:
    lo, hi = rng.lo, rng.hi
    th, thc = angles.theta[lo:hi + 1], angles.theta_c[lo:hi + 1]
    phc = angles.phi_c[lo:hi]
    # a zero on some block diagonal: shift that block by zero
    if np.any(thc == 0.0) or np.any(phc == 0.0):
        return ShiftPair(0.0, 1.0)
    if np.any(th == 0.0):
        return ShiftPair(1.0, 0.0)
    if strategy == "zero":
        return ShiftPair(0.0, 1.0)
    b11, _, b21, _ = blocks(angles.sub(lo, hi))
    if strategy == "wilkinson":
        a = _sigma_min_2x2(b11[-2, -2], b11[-2, -1], b11[-1, -1])
        if a <= INV_SQRT2:
            return ShiftPair.from_mu(a)
        b = _sigma_min_2x2(b21[-2, -2], b21[-2, -1], b21[-1, -1])
        if b <= INV_SQRT2:
            return ShiftPair.from_nu(b)
        return ShiftPair.from_mu(a) if a <= b else ShiftPair.from_nu(b)
    if strategy == "perfect":
        a = float(np.linalg.svd(b11, compute_uv=False)[-1])
        if a <= INV_SQRT2:
            return ShiftPair.from_mu(a)
        return ShiftPair.from_nu(float(np.linalg.svd(b21, compute_uv=False)[-1]))
    raise InvalidInputError(f"unknown shift strategy {strategy!r}")


# ---------------------------------------------------------------------------
# driver


def csd(problem: CsdProblem, strategy: str = "wilkinson", tau: float = DEFAULT_TAU,
        max_iter: int | None = None, sort_theta: bool = False, bulge_tol: float = BULGE_TOL,
        observer=None):
    """Complete 2x2 CS decomposition of a partitioned unitary matrix.

    Returns ``(CsdFactors, ResidualReport)`` with
    ``X ~ diag(U1, U2) @ cs_middle(theta) @ diag(V1, V2)^*``.
    ``observer(n, angles, rng, shifts, step)`` sees every step.
    """
    bd = bidiagonalize(problem)
    q = problem.q
    u1, u2, v1, v2 = (a.copy() for a in (bd.p1, bd.p2, bd.q1, bd.q2))
    angles = bd.angles
    cap = 30 * q if max_iter is None else max_iter
    n = 0
    while True:
        angles = round_negligible(angles, tau)
        rng = find_block(angles)
        if rng is None:
            break
        if n >= cap:
            partial = CsdFactors(angles.theta, angles.theta_c, u1, u2, v1, v2)
            raise ConvergenceError(f"no convergence after {n} CSD steps", state=(angles, partial))
        shifts = choose_shifts(angles, rng, strategy)
        step = csd_step(angles, rng, shifts, bulge_tol=bulge_tol)
        if observer is not None:
            observer(n, angles, rng, shifts, step)
        step.apply_to(u1, u2, v1, v2)
        angles = step.angles
        n += 1
    theta, theta_c = angles.theta, angles.theta_c
    if sort_theta and q:
        order = np.argsort(theta, kind="stable")
        theta, theta_c = theta[order], theta_c[order]
        for a in (u1, u2, v1, v2):
            a[:, :q] = a[:, order]
    factors = CsdFactors(np.array(theta), np.array(theta_c), u1, u2, v1, v2)
    return factors, residual_report(problem, factors, iterations=n)


def residual_report(problem: CsdProblem, factors: CsdFactors, iterations: int = 0) -> ResidualReport:
    x, p, q, m = problem.x, problem.p, problem.q, problem.m
    shapes = [(p, p), (m - p, m - p), (q, q), (m - q, m - q)]
    got = [f.shape for f in (factors.u1, factors.u2, factors.v1, factors.v2)]
    if got != shapes or factors.q != q:
        raise InvalidInputError(f"factor shapes {got} do not match (m, p, q) = ({m}, {p}, {q})")
    e = factors.reconstruct() - x
    return ResidualReport(
        epsilon_in=problem.defect(),
        ortho_u1=orthogonality_defect(factors.u1) if p else 0.0,
        ortho_u2=orthogonality_defect(factors.u2) if m - p else 0.0,
        ortho_v1=orthogonality_defect(factors.v1) if q else 0.0,
        ortho_v2=orthogonality_defect(factors.v2) if m - q else 0.0,
        e11=spectral_norm(e[:p, :q]),
        e12=spectral_norm(e[:p, q:]),
        e21=spectral_norm(e[p:, :q]),
        e22=spectral_norm(e[p:, q:]),
        iterations=iterations,
    )
