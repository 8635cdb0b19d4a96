"""Batch property checks over seeded random subproblems.

Each suite reports, per (check, seed, dim), the worst residual against its
tolerance.  A residual is "bad" when positive beyond the tolerance.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..cg import duality_check
from ..core import SimplexIndicator
from ..matrix_game import exact_fz, generate_instance, side_oracle
from ..pdcp import PdcpConfig, certificate_value, pdcp_run

SUITES = ("duality", "certificates", "rates", "exact-solver")
DUALITY_TOL = 1e-10
CERT_TOL = 1e-8
RATE_TOL = 1e-12
EXACT_TOL = 1e-10


@dataclass
class CheckEntry:
    check: str
    seed: int
    dim: int
    residual: float
    tol: float

    def __post_init__(self):
        self.residual = float(self.residual)

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tol)


@dataclass
class CheckReport:
    suite: str
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def failures(self):
        return [e for e in self.entries if not e.passed]

    def max_residual(self, check=None) -> float:
        vals = [e.residual for e in self.entries if check is None or e.check == check]
        return max(vals) if vals else -math.inf

    def to_json(self) -> str:
        return json.dumps({
            "suite": self.suite,
            "passed": self.passed,
            "entries": [dict(asdict(e), passed=e.passed) for e in self.entries],
        }, indent=1)


def random_subproblem(seed: int, n: int, side: str = "x"):
    """A seeded matrix-game prox subproblem (f, h, x0, lam, M) in dimension n."""
    rng = np.random.default_rng(seed)
    game = generate_instance(n, n, 0.5, float(rng.uniform(0.0, 0.2)), float(rng.uniform(0.0, 0.2)),
                             seed)
    anchor = rng.dirichlet(np.ones(n))
    f = side_oracle(game, side, anchor)
    h = SimplexIndicator(n)
    x0 = rng.dirichlet(np.ones(n))
    lam = float(10.0 ** rng.uniform(-2, 1))
    return f, h, x0, lam, game.M


def _duality(seed, n):
    f, h, x0, lam, _ = random_subproblem(seed, n)
    rep = duality_check(f, h, x0, lam, 100)
    return [CheckEntry("duality", seed, n, rep.max_deviation, DUALITY_TOL)]


def _certificates(seed, n):
    f, h, x0, lam, _ = random_subproblem(seed, n)
    out = []
    for scheme in ("one-cut", "two-cuts", "multi-cuts"):
        cfg = PdcpConfig(scheme=scheme, epsilon=1e-9, max_iters=60, record_iterates=True)
        res = pdcp_run(f, h, x0, lam, cfg)
        worst = -math.inf
        for st in res.trace:
            worst = max(worst, certificate_value(f, h, x0, lam, st.tilde, st.s) - st.t)
        out.append(CheckEntry(f"certificate[{scheme}]", seed, n, worst, CERT_TOL))
    return out


def rate_residuals(trace, lam, M):
    """Worst excess over t_j <= 2 t_1/(j(j+1)) + 16 lam M^2/(j+1)."""
    t1 = trace[0].t
    return max(st.t - (2.0 * t1 / (st.j * (st.j + 1)) + 16.0 * lam * M * M / (st.j + 1))
               for st in trace)


def _rates(seed, n):
    f, h, x0, lam, M = random_subproblem(seed, n)
    out = []
    for scheme in ("one-cut", "two-cuts", "multi-cuts"):
        res = pdcp_run(f, h, x0, lam, PdcpConfig(scheme=scheme, epsilon=1e-9, max_iters=80,
                                                  track_hat=scheme != "one-cut"))
        out.append(CheckEntry(f"rate[{scheme}]", seed, n, rate_residuals(res.trace, lam, M),
                              RATE_TOL))
        if scheme != "one-cut":
            hat = max(st.hat_t - 16.0 * lam * M * M / (st.j + 1) for st in res.trace)
            out.append(CheckEntry(f"hat-rate[{scheme}]", seed, n, hat, RATE_TOL))
            steps = [st.step_norm - 2.0 * lam * M for st in res.trace[1:]]
            out.append(CheckEntry(f"step[{scheme}]", seed, n, max(steps, default=-math.inf),
                                  RATE_TOL))
    return out


def brute_force_fz(z, gamma):
    """min over support sizes j of (gamma + sum of the j smallest z) / j."""
    zs = sorted(float(v) for v in z)
    return min((gamma + sum(zs[:j])) / j for j in range(1, len(zs) + 1))


def _exact_solver(seed, n):
    rng = np.random.default_rng(seed)
    worst_match = worst_pts = -math.inf
    for _ in range(20):
        z = rng.normal(size=n) * rng.choice([0.1, 1.0, 10.0])
        gamma = float(rng.uniform(0, 2))
        sol = exact_fz(z, gamma)
        worst_match = max(worst_match, abs(sol.value - brute_force_fz(z, gamma)))
        pts = rng.dirichlet(np.ones(n), size=200)
        vals = pts @ z + gamma * pts.max(axis=1)
        worst_pts = max(worst_pts, sol.value - float(vals.min()))
    return [CheckEntry("exact-vs-brute-force", seed, n, worst_match, EXACT_TOL),
            CheckEntry("exact-vs-random-points", seed, n, worst_pts, EXACT_TOL)]


_RUNNERS = {"duality": _duality, "certificates": _certificates, "rates": _rates,
            "exact-solver": _exact_solver}


def check_suite(name: str, seeds, dims=(5, 10)) -> CheckReport:
    """Run one suite over every (seed, dim) pair; an empty seed list passes vacuously."""
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    report = CheckReport(name)
    for seed, n in itertools.product(seeds, dims):
        report.entries.extend(_RUNNERS[name](int(seed), int(n)))
    return report
