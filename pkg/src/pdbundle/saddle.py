"""Solvers for composite convex-concave saddle-point problems.

    min_x max_y  f(x, y) + h1(x) - h2(y)

``cs_spp_run`` is the simultaneous composite subgradient method;
``pb_spp_run`` solves two decoupled prox subproblems per outer step with
cutting-plane cycles and a decaying stepsize ``lam_k = lam_1 / sqrt(k)``.
Both can record inexact-proximal-point certificates for every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Composite, FunctionOracle, SubgradientOracle
from .errors import CapabilityError, CertificationError, UsageError
from .pdcp import PdcpConfig, pdcp_run

WEAK_DUALITY_TOL = 1e-10
CERT_TOL = 1e-8


@dataclass(eq=False)
class SaddleInstance:
    """Oracle bundle describing one saddle-point problem.

    Attributes
    ----------
    value : callable
        (x, y) -> f(x, y).
    grad_x, grad_y : callable
        Subgradient of f(., y) at x and supergradient of f(x, .) at y.
    h1, h2 : Composite
        Prox-friendly parts for x and y.
    M : float
        Bound on both partial (super)gradient norms.
    D : float
        Diameter of dom h1 x dom h2.
    phi_exact, psi_exact : callable, optional
        x -> max_y f(x, y) + h1(x) - h2(y) and y -> min_x of the same.
    x_oracle, y_oracle : callable, optional
        y -> oracle of f(., y) and x -> oracle of -f(x, .); built from
        value/grad_x/grad_y when absent.
    value_batch_x, value_batch_y : callable, optional
        Vectorized (U, y) -> f(U_i, y) and (x, V) -> f(x, V_i).
    """

    value: Callable
    grad_x: Callable
    grad_y: Callable
    h1: Composite
    h2: Composite
    M: float
    D: float
    phi_exact: Optional[Callable] = None
    psi_exact: Optional[Callable] = None
    x_oracle: Optional[Callable] = None
    y_oracle: Optional[Callable] = None
    value_batch_x: Optional[Callable] = None
    value_batch_y: Optional[Callable] = None
    game: object = None

    def oracle_x(self, y) -> SubgradientOracle:
        if self.x_oracle is not None:
            return self.x_oracle(y)
        y = np.asarray(y, dtype=float)
        return FunctionOracle(lambda u: self.value(u, y), lambda u: self.grad_x(u, y), self.M)

    def oracle_y(self, x) -> SubgradientOracle:
        if self.y_oracle is not None:
            return self.y_oracle(x)
        x = np.asarray(x, dtype=float)
        return FunctionOracle(lambda v: -self.value(x, v), lambda v: -self.grad_y(x, v), self.M)

    @property
    def has_exact(self) -> bool:
        return self.phi_exact is not None and self.psi_exact is not None

    def values_x(self, U, y):
        if self.value_batch_x is not None:
            return self.value_batch_x(U, y)
        return np.array([self.value(u, y) for u in U])

    def values_y(self, x, V):
        if self.value_batch_y is not None:
            return self.value_batch_y(x, V)
        return np.array([self.value(x, v) for v in V])


def saddle_gap(inst: SaddleInstance, x, y) -> float:
    """phi(x) - psi(y); nonnegative up to rounding by weak duality."""
    if not inst.has_exact:
        raise CapabilityError("instance provides no exact primal/dual evaluators")
    return float(inst.phi_exact(x) - inst.psi_exact(y))


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass
class IppfCertificate:
    """Inexact proximal-point certificate of one outer step."""

    k: int
    eps_x: float
    eps_y: float
    inclusion_residual: float
    proximity_lhs: float
    proximity_rhs: float
    sigma: float
    delta: float

    @property
    def eps(self) -> float:
        return self.eps_x + self.eps_y

    @property
    def proximity_excess(self) -> float:
        return self.proximity_lhs - self.proximity_rhs

    def check(self, tol=CERT_TOL):
        if self.eps < -1e-10:
            raise CertificationError("negative inexactness eps_k", self.eps, self.k)
        if self.inclusion_residual > tol:
            raise CertificationError("eps-subdifferential inclusion violated",
                                     self.inclusion_residual, self.k)
        if self.proximity_excess > tol:
            raise CertificationError("proximity inequality violated", self.proximity_excess, self.k)


@dataclass
class StepData:
    """Everything one outer step needs to be certified.

    ``x_prev, y_prev`` are the prox centers, ``x, y`` the prox points,
    ``xt, yt`` the reported (tilde) points and ``eps_x, eps_y`` the
    inexactness of the two sides.
    """

    k: int
    lam: float
    x_prev: np.ndarray
    y_prev: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xt: np.ndarray
    yt: np.ndarray
    eps_x: float
    eps_y: float


def cs_spp_step_data(inst: SaddleInstance, k, lam, x_prev, y_prev, x, y) -> StepData:
    """Inexactness of one simultaneous step: linearization errors in each argument."""
    f00 = inst.value(x_prev, y_prev)
    eps_x = inst.value(x, y_prev) - (f00 + float(inst.grad_x(x_prev, y_prev) @ (x - x_prev)))
    eps_y = -inst.value(x_prev, y) + (f00 + float(inst.grad_y(x_prev, y_prev) @ (y - y_prev)))
    return StepData(k, lam, x_prev, y_prev, x, y, x, y, eps_x, eps_y)


def pb_spp_step_data(inst: SaddleInstance, k, lam, x_prev, y_prev, cx, cy, xt, yt) -> StepData:
    """Inexactness of one bundle step from the two cycle results.

    eps^x = p(xt) - (Gamma^x + h1)(x) + <x_prev - x, x - xt> / lam with
    p = f(., y_prev) + h1, and symmetrically for y with -f(x_prev, .).
    """
    x, y = cx.x_last, cy.x_last
    p_xt = inst.value(xt, y_prev) + inst.h1.value(xt)
    d_yt = -inst.value(x_prev, yt) + inst.h2.value(yt)
    eps_x = p_xt - (cx.model_value + inst.h1.value(x)) + float((x_prev - x) @ (x - xt)) / lam
    eps_y = d_yt - (cy.model_value + inst.h2.value(y)) + float((y_prev - y) @ (y - yt)) / lam
    return StepData(k, lam, x_prev, y_prev, x, y, xt, yt, eps_x, eps_y)


def ippf_certificate(inst: SaddleInstance, data: StepData, sigma: float, delta: float,
                     samples=0, rng=None, U=None, V=None) -> IppfCertificate:
    """Check the inclusion (sampled) and the proximity inequality of one step.

    The inclusion is tested in its equivalent form: for sampled (u, v),
    p(u) + d(v) - p(xt) - d(yt) >= <x_prev - x, u - xt>/lam
    + <y_prev - y, v - yt>/lam - eps.
    """
    lam = data.lam
    eps = data.eps_x + data.eps_y
    if U is None and samples:
        rng = np.random.default_rng() if rng is None else rng
        U = inst.h1.sample(rng, samples)
        V = inst.h2.sample(rng, samples)
    resid = 0.0
    if U is not None and len(U):
        p_u = inst.values_x(U, data.y_prev)
        d_v = -inst.values_y(data.x_prev, V)
        p_xt = inst.value(data.xt, data.y_prev) + inst.h1.value(data.xt)
        d_yt = -inst.value(data.x_prev, data.yt) + inst.h2.value(data.yt)
        lhs = p_u + d_v - p_xt - d_yt
        rhs = ((U - data.xt) @ (data.x_prev - data.x) + (V - data.yt) @ (data.y_prev - data.y)) / lam - eps
        resid = max(0.0, float(np.max(rhs - lhs)))
    dx, dy = data.x - data.xt, data.y - data.yt
    prox_lhs = float(dx @ dx + dy @ dy) + 2.0 * lam * eps
    ax, ay = data.xt - data.x_prev, data.yt - data.y_prev
    prox_rhs = delta + sigma * float(ax @ ax + ay @ ay)
    return IppfCertificate(data.k, data.eps_x, data.eps_y, resid, prox_lhs, prox_rhs, sigma, delta)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class LogRecord:
    outer_iter: int
    total_inner_iters: int
    prox_evals: int
    oracle_calls: int
    gap: float


@dataclass
class SaddleResult:
    x_bar: np.ndarray
    y_bar: np.ndarray
    gap: float
    outer_iters: int
    total_inner_iters: int
    prox_evals: int
    oracle_calls: int
    converged: bool
    log: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    cycles: list = field(default_factory=list)
    lam1: float = math.nan


@dataclass
class CycleSummary:
    """Per-outer-step record of the two bundle cycles."""

    k: int
    lam: float
    len_x: int
    len_y: int
    t_x: float
    t_y: float
    hat_t_x: Optional[float]
    hat_t_y: Optional[float]
    converged: bool
    gap: float = math.nan
    prox_calls: int = 0


def _certify(cert: IppfCertificate, mode):
    if mode == "raise":
        cert.check()


# ---------------------------------------------------------------------------
# CS-SPP
# ---------------------------------------------------------------------------


def cs_spp_run(inst: SaddleInstance, x0, y0, lam: float, max_iters: int, eps_target=None,
               log_every: int = 1000, logger=None, certify=None, samples=0, rng=None,
               fast: bool = True, gap_every: Optional[int] = None) -> SaddleResult:
    """Simultaneous composite subgradient steps with iterate averaging.

    Parameters
    ----------
    lam : float
        Constant prox stepsize.
    max_iters : int
        Step budget.
    eps_target : float, optional
        Stop once the exact gap of the averages is at most this value.
    log_every : int
        The gap is evaluated (and ``logger`` called) every ``log_every`` steps
        and at the final step.
    certify : {None, "record", "raise"}
        Record (or enforce) the inexact proximal-point certificate with
        sigma = 1 and delta = 8 lam^2 M^2 at every step.
    fast : bool
        Use the compiled kernel when the instance is a matrix game and no
        certificates are requested.
    """
    if not lam > 0:
        raise UsageError("stepsize must be positive")
    if log_every < 1:
        raise UsageError("log_every must be at least 1")
    x = np.asarray(x0, dtype=float).copy()
    y = np.asarray(y0, dtype=float).copy()
    gap_every = log_every if gap_every is None else gap_every
    exact = inst.has_exact
    if eps_target is not None and not exact:
        raise CapabilityError("gap-based termination needs exact evaluators")
    if fast and certify is None and inst.game is not None:
        return _cs_spp_fast(inst, x, y, lam, max_iters, eps_target, log_every, logger)

    rng = np.random.default_rng(0) if rng is None else rng
    delta = 8.0 * lam * lam * inst.M ** 2
    sum_x = np.zeros_like(x)
    sum_y = np.zeros_like(y)
    log, certs = [], []
    gap = math.nan
    converged = False
    k = 0
    rec = LogRecord(0, 0, 0, 0, saddle_gap(inst, x, y) if exact else math.nan)
    log.append(rec)
    if logger is not None:
        logger(rec)
    while k < max_iters:
        k += 1
        gx = inst.grad_x(x, y)
        gy = inst.grad_y(x, y)
        x_new = inst.h1.prox(x, gx, lam)
        y_new = inst.h2.prox(y, -gy, lam)
        if certify is not None:
            data = cs_spp_step_data(inst, k, lam, x, y, x_new, y_new)
            cert = ippf_certificate(inst, data, 1.0, delta, samples, rng)
            certs.append(cert)
            _certify(cert, certify)
        x, y = x_new, y_new
        sum_x += x
        sum_y += y
        last = k == max_iters
        if exact and (k % gap_every == 0 or last):
            gap = saddle_gap(inst, sum_x / k, sum_y / k)
            if eps_target is not None and gap <= eps_target:
                converged = True
        if k % log_every == 0 or last or converged:
            rec = LogRecord(k, k, 2 * k, 2 * k, gap)
            log.append(rec)
            if logger is not None:
                logger(rec)
        if converged:
            break
    x_bar = sum_x / k if k else x
    y_bar = sum_y / k if k else y
    if k == 0 and exact:
        gap = saddle_gap(inst, x_bar, y_bar)
    return SaddleResult(x_bar, y_bar, gap, k, k, 2 * k, 2 * k, converged, log, certs)


def _cs_spp_fast(inst, x, y, lam, max_iters, eps_target, log_every, logger):
    from ._kernels import cs_spp_steps, game_gap

    g = inst.game
    args = (g.rows, g.cols, g.vals, g.m, g.n, g.gamma_x, g.gamma_y)
    indptr = g.indptr
    sum_x = np.zeros_like(x)
    sum_y = np.zeros_like(y)
    log = []
    rec = LogRecord(0, 0, 0, 0, float(game_gap(*args, x, y)))
    log.append(rec)
    if logger is not None:
        logger(rec)
    k = 0
    gap = rec.gap
    converged = False
    from .matrix_game import ACTIVE_TOL

    while k < max_iters:
        steps = min(log_every - k % log_every, max_iters - k)
        cs_spp_steps(indptr, g.cols, g.vals, g.m, g.n, g.gamma_x, g.gamma_y,
                     x, y, sum_x, sum_y, lam, steps, ACTIVE_TOL)
        k += steps
        gap = float(game_gap(*args, sum_x / k, sum_y / k))
        converged = eps_target is not None and gap <= eps_target
        rec = LogRecord(k, k, 2 * k, 2 * k, gap)
        log.append(rec)
        if logger is not None:
            logger(rec)
        if converged:
            break
    x_bar = sum_x / k if k else x
    y_bar = sum_y / k if k else y
    return SaddleResult(x_bar, y_bar, gap, k, k, 2 * k, 2 * k, converged, log, [])


# ---------------------------------------------------------------------------
# PB-SPP
# ---------------------------------------------------------------------------


def default_lam1(inst: SaddleInstance) -> float:
    """lam_1 = D / (4 M)."""
    return inst.D / (4.0 * inst.M)


def pb_spp_run(inst: SaddleInstance, x0, y0, eps_bar: float, lam1: Optional[float] = None,
               scheme: str = "two-cuts", max_outer: Optional[int] = None, max_cuts: int = 10,
               improved: bool = False, log_every: int = 10, logger=None, certify=None,
               samples=0, rng=None, tilde_rule: str = "convex-combination",
               inner_max_iters: int = 1_000_000) -> SaddleResult:
    """Proximal bundle method for saddle problems with decaying stepsize.

    Each outer step k runs one cutting-plane cycle on
    ``f(., y_{k-1}) + h1`` and one on ``-f(x_{k-1}, .) + h2`` from the
    previous iterates, with stepsize ``lam1 / sqrt(k)`` and tolerance
    ``eps_bar / 4``.  The reported points of the cycles are averaged.

    Parameters
    ----------
    lam1 : float, optional
        Initial stepsize, default ``D / (4 M)``.
    scheme : str
        Bundle scheme of both cycles.
    max_outer : int, optional
        Outer budget.  Without exact evaluators the method runs
        ``ceil(64 M^2 D^2 / eps_bar^2)`` steps and reports the analytic
        bound ``eps_bar/2 + 4 M D / sqrt(k)`` as its gap.
    improved : bool
        Terminate cycles on the weighted-average gap and average the
        weighted-average points instead (two-/multi-cut only).
    certify : {None, "record", "raise"}
        Inexact proximal-point certificates with sigma = 0 and
        delta_k = lam_k eps_bar / 2.
    """
    if not eps_bar > 0:
        raise UsageError("eps_bar must be positive")
    if improved and scheme == "one-cut":
        raise UsageError("improved termination is unavailable for the one-cut scheme")
    lam1 = default_lam1(inst) if lam1 is None else float(lam1)
    if not lam1 > 0:
        raise UsageError("lam1 must be positive")
    exact = inst.has_exact
    if max_outer is None:
        if exact:
            max_outer = 10**9
        else:
            max_outer = int(math.ceil(64.0 * inst.M**2 * inst.D**2 / eps_bar**2))
    cfg = PdcpConfig(scheme=scheme, epsilon=eps_bar / 4.0, max_cuts=max_cuts,
                     tilde_rule=tilde_rule, max_iters=inner_max_iters,
                     gap_rule="hat" if improved else "t", track_hat=improved)
    rng = np.random.default_rng(0) if rng is None else rng

    x = np.asarray(x0, dtype=float).copy()
    y = np.asarray(y0, dtype=float).copy()
    sum_x = np.zeros_like(x)
    sum_y = np.zeros_like(y)
    log, certs, cycles = [], [], []
    total_inner = prox = oracle = 0
    gap = saddle_gap(inst, x, y) if exact else math.nan
    rec = LogRecord(0, 0, 0, 0, gap)
    log.append(rec)
    if logger is not None:
        logger(rec)
    converged = False
    k = 0
    while k < max_outer:
        k += 1
        lam = lam1 / math.sqrt(k)
        cx = pdcp_run(inst.oracle_x(y), inst.h1, x, lam, cfg)
        cy = pdcp_run(inst.oracle_y(x), inst.h2, y, lam, cfg)
        xt, yt = cx.output, cy.output
        total_inner += cx.iters + cy.iters
        prox += cx.prox_calls + cy.prox_calls
        oracle += cx.oracle_calls + cy.oracle_calls
        if certify is not None:
            data = pb_spp_step_data(inst, k, lam, x, y, cx, cy, xt, yt)
            cert = ippf_certificate(inst, data, 0.0, lam * eps_bar / 2.0, samples, rng)
            certs.append(cert)
            _certify(cert, certify)
        sum_x += xt
        sum_y += yt
        x, y = cx.x_last, cy.x_last
        if exact:
            gap = saddle_gap(inst, sum_x / k, sum_y / k)
            converged = gap <= eps_bar
        else:
            gap = eps_bar / 2.0 + 4.0 * inst.M * inst.D / math.sqrt(k)
        cycles.append(CycleSummary(k, lam, cx.iters, cy.iters, cx.t, cy.t, cx.hat_t, cy.hat_t,
                                   cx.converged and cy.converged, gap,
                                   cx.prox_calls + cy.prox_calls))
        last = k == max_outer
        if k % log_every == 0 or converged or last:
            rec = LogRecord(k, total_inner, prox, oracle, gap)
            log.append(rec)
            if logger is not None:
                logger(rec)
        if converged:
            break
    if not exact:
        converged = k >= max_outer
    x_bar = sum_x / k if k else x
    y_bar = sum_y / k if k else y
    return SaddleResult(x_bar, y_bar, gap, k, total_inner, prox, oracle, converged, log, certs,
                        cycles, lam1)
