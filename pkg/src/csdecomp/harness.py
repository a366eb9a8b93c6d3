"""Test-matrix generators and the experiment runner behind ``csdecomp experiment``."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .bdb import HALF_PI, AngleSet, materialize
from .dense import EPS, make_rng, randn_matrix
from .driver import DEFAULT_TAU, ResidualReport, cs_middle, csd
from .errors import ConvergenceError, InvalidInputError
from .reduction import CsdProblem

SCHEMA_VERSION = 1

# Van Loan's 8x8 test matrix, four 4x4 blocks, 12 printed decimals.
_VANLOAN = {
    "x11": """
         0.220508860423 -0.114095899416  0.001410518052  0.309131888087
         0.075149984350  0.552192330457  0.309420137864  0.519525649668
         0.346099513974 -0.465523358094 -0.147474170901  0.284504924779
         0.200314808251  0.015869922033  0.063768831702  0.364621650530""",
    "x12": """
         0.123868614848 -0.424487382687  0.756283107266 -0.274401793502
         0.505660921957  0.028765021298 -0.138696588123  0.219160328651
        -0.068044487719 -0.292950312278 -0.202722377746  0.655183291894
        -0.339461927716 -0.307319405113 -0.530848659627 -0.575436177767""",
    "x21": """
        -0.149903307775  0.456869095895 -0.814555019070  0.205461483909
        -0.132593956233  0.403919514293  0.374067025998 -0.294979263882
         0.631588073183  0.226164206817  0.132173742848  0.047014825861
        -0.588949720476 -0.205112923304  0.239887841318  0.537774110108""",
    "x22": """
        -0.211288905103 -0.065095708488  0.064582503584  0.100169729053
        -0.422173038686 -0.565182436669  0.079260723473  0.297296887111
        -0.473064671229  0.502284642254  0.218767959397  0.079539299401
        -0.403033356444  0.250518329548  0.166101999167  0.107399029584""",
}

# Published residuals for that matrix; the experiment allows a factor of 10.
VANLOAN_REFERENCE = {"e11": 1.3e-12, "e12": 6.1e-13, "e21": 1.6e-12, "e22": 9.3e-13}
VANLOAN_ORTHO_BOUND = 1e-14


def _parse_block(text: str) -> np.ndarray:
    return np.array([[float(tok) for tok in line.split()] for line in text.strip().splitlines()])


def gen_vanloan() -> CsdProblem:
    b = {k: _parse_block(v) for k, v in _VANLOAN.items()}
    x = np.block([[b["x11"], b["x12"]], [b["x21"], b["x22"]]])
    return CsdProblem(x, 4, 4)


def gen_haar(rng: np.random.Generator, n: int) -> np.ndarray:
    """Orthogonal Q factor of a Gaussian matrix times a random sign per column."""
    if n < 1:
        raise InvalidInputError("gen_haar: n must be positive")
    q, _ = np.linalg.qr(randn_matrix(rng, n, n))
    signs = np.sign(randn_matrix(rng, n, 1)[:, 0])
    signs[signs == 0] = 1.0
    return q * signs


def clustered_angles(rng: np.random.Generator, q: int) -> np.ndarray:
    """Angles spaced by ``10**(-18 U)`` gaps, so many nearly coincide."""
    if q < 2:
        raise InvalidInputError("clustered_angles: q must be at least 2")
    delta = 10.0 ** (-18.0 * rng.random(q + 1))
    return HALF_PI * np.cumsum(delta)[:q] / delta.sum()


def gen_clustered(rng: np.random.Generator, q: int) -> CsdProblem:
    theta = clustered_angles(rng, q)
    mid = cs_middle(theta, HALF_PI - theta, 2 * q, q)
    u1, u2, v1, v2 = (gen_haar(rng, q) for _ in range(4))
    z = np.zeros((q, q))
    left = np.block([[u1, z], [z, u2]])
    right = np.block([[v1, z], [z, v2]])
    return CsdProblem(left @ mid @ right.T, q, q)


def sample_angles(rng: np.random.Generator, q: int, mode: str) -> AngleSet:
    if q < 1:
        raise InvalidInputError("sample_angles: q must be positive")
    if mode == "uniform":
        return AngleSet.from_angles(HALF_PI * rng.random(q), HALF_PI * rng.random(q - 1))
    if mode == "grid":
        # stored as exact pairs so pi/2 and 0 stay exact endpoints
        grid = np.array([0.0, np.pi / 4, HALF_PI])
        comp = np.array([HALF_PI, np.pi / 4, 0.0])
        it = rng.integers(0, 3, q)
        ip = rng.integers(0, 3, q - 1)
        return AngleSet(grid[it], comp[it], grid[ip], comp[ip])
    raise InvalidInputError(f"unknown angle mode {mode!r}")


def gen_angles(rng: np.random.Generator, q: int, mode: str) -> CsdProblem:
    return CsdProblem(materialize(sample_angles(rng, q, mode)), q, q)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    trials: int = 1000
    seed: int = 0
    m: int = 40
    p: int = 18
    q: int = 15
    strategy: str = "wilkinson"
    tau: float = DEFAULT_TAU
    bound: float = 2.0  # multiple of epsilon every metric must stay under

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise InvalidInputError(f"unknown experiment {self.name!r}; choose from {sorted(EXPERIMENTS)}")
        if self.trials < 1:
            raise InvalidInputError("trials must be at least 1")

    @classmethod
    def default(cls, name: str, **overrides) -> ExperimentConfig:
        if name not in EXPERIMENTS:
            raise InvalidInputError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
        base = dict(EXPERIMENTS[name])
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(name=name, **base)


EXPERIMENTS = {
    "vanloan": dict(trials=1, m=8, p=4, q=4, bound=10.0),
    "haar": dict(m=40, p=18, q=15, bound=2.0),
    "clustered": dict(m=40, p=20, q=20, bound=3.0),
    "angles-uniform": dict(m=40, p=20, q=20, bound=4.0),
    "angles-grid": dict(m=40, p=20, q=20, bound=1.0),
}


@dataclass
class TrialResult:
    index: int
    report: ResidualReport | None
    epsilon: float
    passed: bool
    error: str | None = None

    def to_dict(self) -> dict:
        d = {"trial": self.index, "epsilon": self.epsilon, "passed": self.passed}
        if self.report is not None:
            d.update(self.report.to_dict())
        if self.error:
            d["error"] = self.error
        return d


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    trials: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.trials)

    def maxima(self) -> dict:
        done = [t.report for t in self.trials if t.report is not None]
        return {k: max((getattr(r, k) for r in done), default=float("nan")) for k in ResidualReport.METRICS}

    def worst_ratio(self) -> float:
        """Largest metric / epsilon over all trials."""
        vals = [t.report.max_metric() / t.epsilon for t in self.trials if t.report is not None]
        return max(vals, default=float("inf"))

    def to_dict(self) -> dict:
        c = self.config
        return {
            "schemaVersion": SCHEMA_VERSION,
            "experiment": c.name,
            "config": {"trials": c.trials, "seed": c.seed, "m": c.m, "p": c.p, "q": c.q,
                       "strategy": c.strategy, "tau": c.tau, "bound": c.bound},
            "passed": self.passed,
            "failures": sum(not t.passed for t in self.trials),
            "maxima": self.maxima(),
            "worstRatio": self.worst_ratio(),
            "trials": [t.to_dict() for t in self.trials],
            "wallClock": self.wall_clock,
        }


def _problem_for(config: ExperimentConfig, trial: int) -> CsdProblem:
    rng = make_rng(config.seed, trial)
    if config.name == "vanloan":
        return gen_vanloan()
    if config.name == "haar":
        return CsdProblem(gen_haar(rng, config.m), config.p, config.q)
    if config.name == "clustered":
        return gen_clustered(rng, config.q)
    mode = "uniform" if config.name == "angles-uniform" else "grid"
    return gen_angles(rng, config.q, mode)


def _check(config: ExperimentConfig, report: ResidualReport, eps: float) -> bool:
    if config.name == "vanloan":
        ortho = max(report.ortho_u1, report.ortho_u2, report.ortho_v1, report.ortho_v2)
        return ortho <= VANLOAN_ORTHO_BOUND and all(
            getattr(report, k) <= config.bound * v for k, v in VANLOAN_REFERENCE.items())
    return report.max_metric() < config.bound * eps


def run_trial(config: ExperimentConfig, trial: int) -> TrialResult:
    problem = _problem_for(config, trial)
    eps = max(10 * EPS, problem.defect())
    try:
        _, report = csd(problem, strategy=config.strategy, tau=config.tau)
    except ConvergenceError as exc:
        return TrialResult(trial, None, eps, False, str(exc))
    return TrialResult(trial, report, eps, bool(_check(config, report, eps)))


def run_experiment(config: ExperimentConfig, progress=None) -> ExperimentReport:
    """Run every trial; a trial that fails to converge is recorded, never raised."""
    start = time.perf_counter()
    out = ExperimentReport(config)
    for t in range(config.trials):
        out.trials.append(run_trial(config, t))
        if progress is not None:
            progress(t, out.trials[-1])
    out.wall_clock = time.perf_counter() - start
    return out
