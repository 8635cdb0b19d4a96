"""One cycle of the primal-dual cutting-plane scheme.

For a fixed prox center ``x0`` and stepsize ``lam`` the cycle approximately
minimizes ``phi^lam(u) = f(u) + h(u) + ||u - x0||^2 / (2 lam)``.  Each
iteration solves the model prox subproblem, producing ``(x_j, s_j, m_j)``,
updates an auxiliary iterate ``x~_j`` and stops once the gap
``t_j = phi^lam(x~_j) - m_j`` drops to the tolerance.  ``t_j`` bounds the
primal-dual gap ``phi^lam(x~_j) + f*(s_j) + (h^lam)*(-s_j)`` from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bundle import ModelProxSolution, initial_model, solve_model_prox, update_model
from .core import OUTSIDE, Composite, SubgradientOracle, linearize, moreau_conjugate, prox_objective
from .errors import InfeasibleDualError, UsageError

SCHEMES = ("one-cut", "two-cuts", "multi-cuts")
TILDE_RULES = ("convex-combination", "best-iterate")


def default_tau(j: int) -> float:
    return j / (j + 2.0)


@dataclass
class PdcpConfig:
    """Settings of one cycle.

    Parameters
    ----------
    scheme : str
        ``"one-cut"``, ``"two-cuts"`` or ``"multi-cuts"``.
    epsilon : float
        Cycle tolerance on the gap.
    max_cuts : int
        Bundle size limit for the multi-cut scheme.
    tilde_rule : str
        ``"convex-combination"`` (x~_{j+1} = tau_j x~_j + (1 - tau_j) x_{j+1})
        or ``"best-iterate"`` (lowest phi^lam among x_1..x_j).
    max_iters : int
        Iteration budget; hitting it returns an unconverged result.
    track_hat : bool
        Maintain the weighted average x^_j = (3 x_2 + sum_{i>=3} i x_i) / A_j
        and its gap t^_j.
    gap_rule : str
        ``"t"`` stops on t_j, ``"hat"`` stops on t^_j (implies track_hat).
    tau_rule : callable
        j -> tau_j, default j / (j + 2).
    record_iterates : bool
        Keep x_j, x~_j, s_j in every trace step.
    min_iters : int
        The stopping test is ignored before this many iterations; used to
        produce fixed-length traces for comparisons.
    """

    scheme: str = "one-cut"
    epsilon: float = 1e-6
    max_cuts: int = 10
    tilde_rule: str = "convex-combination"
    max_iters: int = 100_000
    track_hat: bool = False
    gap_rule: str = "t"
    tau_rule: Callable[[int], float] = default_tau
    record_iterates: bool = False
    min_iters: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise UsageError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.tilde_rule not in TILDE_RULES:
            raise UsageError(f"unknown tilde rule {self.tilde_rule!r}")
        if not self.epsilon > 0:
            raise UsageError("epsilon must be positive")
        if self.max_iters < 1:
            raise UsageError("max_iters must be at least 1")
        if self.gap_rule not in ("t", "hat"):
            raise UsageError("gap_rule must be 't' or 'hat'")
        if self.gap_rule == "hat":
            if self.scheme == "one-cut":
                raise UsageError("the weighted-average gap needs the two- or multi-cut scheme")
            self.track_hat = True


@dataclass
class PdcpStep:
    j: int
    t: float
    m: float
    phi_tilde: float
    step_norm: float
    hat_t: Optional[float] = None
    dual_value: float = math.nan
    n_multipliers: int = 1
    x: Optional[np.ndarray] = None
    tilde: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None


@dataclass
class CycleResult:
    """Output of one cycle.

    ``x_last``, ``tilde`` and ``s`` are the final x_j, x~_j and s_j; ``hat``
    and ``hat_t`` are present when the weighted average is tracked.
    ``model_value`` is Gamma_j(x_j) of the final model.
    """

    x_last: np.ndarray
    tilde: np.ndarray
    s: np.ndarray
    t: float
    m: float
    iters: int
    converged: bool
    best_t: float
    prox_calls: int
    oracle_calls: int
    model_value: float
    hat: Optional[np.ndarray] = None
    hat_t: Optional[float] = None
    trace: list = field(default_factory=list)
    x0: Optional[np.ndarray] = None
    lam: float = math.nan
    gap_rule: str = "t"

    @property
    def output(self):
        """The point reported by the cycle: x^ when the hat gap drove termination."""
        return self.hat if self.gap_rule == "hat" else self.tilde

    @property
    def output_gap(self):
        return self.hat_t if self.gap_rule == "hat" else self.t


def phi_lam(f: SubgradientOracle, h: Composite, x0, lam, u) -> float:
    """phi^lam(u) = f(u) + h(u) + ||u - x0||^2 / (2 lam)."""
    return f.value(u) + prox_objective(h, u, x0, lam)


def pdcp_run(f: SubgradientOracle, h: Composite, x0, lam: float, cfg: PdcpConfig,
             callback=None) -> CycleResult:
    """Run one cycle from prox center ``x0`` with stepsize ``lam``.

    ``callback(j, sol, model, result_so_far)`` is invoked after every
    iteration with the model that produced ``sol``; it is used by the
    dual-variant extraction and by tests.
    """
    if not lam > 0:
        raise UsageError("prox stepsize must be positive")
    x0 = np.asarray(x0, dtype=float)
    if not h.contains(x0):
        raise UsageError("prox center lies outside dom h")
    oracle_calls = 0
    prox_calls = 0

    cut0 = linearize(f, x0)
    oracle_calls += 1
    model = initial_model(cfg.scheme, cut0, cfg.max_cuts)

    trace = []
    tilde = None
    tilde_val = math.inf
    hat = None
    hat_t = None
    x_prev = None
    best_t = math.inf
    j = 0
    t = 2.0 * cfg.epsilon
    converged = False
    sol: ModelProxSolution = None
    while True:
        j += 1
        sol = solve_model_prox(model, h, x0, lam)
        prox_calls += sol.prox_calls
        x = sol.x
        cut = None
        if j == 1:
            tilde = x.copy()
            tilde_val = phi_lam(f, h, x0, lam, tilde)
            oracle_calls += 1
        elif cfg.tilde_rule == "convex-combination":
            tau = cfg.tau_rule(j - 1)
            tilde = tau * tilde + (1.0 - tau) * x
            tilde_val = phi_lam(f, h, x0, lam, tilde)
            oracle_calls += 1
        else:
            cut = linearize(f, x)
            oracle_calls += 1
            val = cut.anchor_value + prox_objective(h, x, x0, lam)
            if val < tilde_val:
                tilde, tilde_val = x.copy(), val
        t = tilde_val - sol.m
        best_t = min(best_t, t)

        if cfg.track_hat:
            if j <= 2:
                hat = x.copy()
            else:
                a_prev = (j - 1) * j / 2.0
                hat = (a_prev * hat + j * x) / (j * (j + 1) / 2.0)
            hat_val = tilde_val if (j == 1) else phi_lam(f, h, x0, lam, hat)
            if j > 1:
                oracle_calls += 1
            hat_t = hat_val - sol.m

        step_norm = math.nan if x_prev is None else float(np.linalg.norm(x - x_prev))
        step = PdcpStep(j, t, sol.m, tilde_val, step_norm, hat_t, sol.dual_value,
                        int(np.count_nonzero(sol.multipliers)))
        if cfg.record_iterates:
            step.x, step.tilde, step.s = x.copy(), tilde.copy(), sol.s.copy()
        trace.append(step)
        if callback is not None:
            callback(j, sol, model, step)

        stop_gap = hat_t if cfg.gap_rule == "hat" else t
        if stop_gap <= cfg.epsilon and j >= cfg.min_iters:
            converged = True
            break
        if j >= cfg.max_iters:
            break
        if cut is None:
            cut = linearize(f, x)
            oracle_calls += 1
        model = update_model(model, cfg.tau_rule(j), sol, cut)
        x_prev = x

    model_value = sol.m - prox_objective(h, sol.x, x0, lam)
    return CycleResult(
        x_last=sol.x, tilde=tilde, s=sol.s, t=t, m=sol.m, iters=j, converged=converged,
        best_t=best_t, prox_calls=prox_calls, oracle_calls=oracle_calls,
        model_value=model_value, hat=hat, hat_t=hat_t, trace=trace, x0=x0, lam=lam,
        gap_rule=cfg.gap_rule,
    )


def certificate_value(f: SubgradientOracle, h: Composite, x0, lam, point, s) -> float:
    """phi^lam(point) + f*(s) + (h^lam)*(-s).

    Raises :class:`InfeasibleDualError` when ``s`` lies outside dom f*.
    """
    fs = f.conj(s)
    if fs == OUTSIDE:
        raise InfeasibleDualError("dual vector lies outside the conjugate domain")
    hconj, _ = moreau_conjugate(h, -np.asarray(s), x0, lam)
    return phi_lam(f, h, x0, lam, point) + fs + hconj


def gap_certificate(result: CycleResult, f: SubgradientOracle, h: Composite, x0=None,
                    lam=None) -> float:
    """Primal-dual gap of the cycle's final pair (x~, s); never exceeds ``result.t``."""
    x0 = result.x0 if x0 is None else x0
    lam = result.lam if lam is None else lam
    return certificate_value(f, h, x0, lam, result.tilde, result.s)
