"""Outer loop of the primal-dual proximal bundle method and the PDS baseline.

Each cycle approximately solves the prox subproblem around the current
center with :func:`pdcp_run` and moves the center to the cycle's last model
minimizer.  The cycle outputs ``(x~_k, s_k)`` are averaged; the averages
form a primal-dual pair for ``min f + h`` whose gap is reported by
:func:`pdpb_gap_report`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import OUTSIDE, Composite, SubgradientOracle, ZeroComposite, as_point
from .errors import CapabilityError, InfeasibleDualError, UsageError
from .pdcp import CycleResult, PdcpConfig, pdcp_run


@dataclass
class PdpbState:
    """Running state of the outer loop.

    ``x_bar`` and ``s_bar`` are the running means of the cycle outputs
    ``x~_i`` and ``s_i``.  When ``keep_outputs`` was requested the per-cycle
    outputs, centers and model values are stored so the averages and the
    descent inequality can be re-checked afterwards.
    """

    k: int
    center: np.ndarray
    x_bar: np.ndarray
    s_bar: np.ndarray
    cycle_lengths: list = field(default_factory=list)
    gap_history: list = field(default_factory=list)
    first_t: list = field(default_factory=list)
    final_t: list = field(default_factory=list)
    cycle_converged: list = field(default_factory=list)
    prox_calls: int = 0
    oracle_calls: int = 0
    converged: bool = False
    aborted: bool = False
    centers: list = field(default_factory=list)
    tildes: list = field(default_factory=list)
    duals: list = field(default_factory=list)
    model_values: list = field(default_factory=list)

    @property
    def total_inner_iters(self) -> int:
        return int(sum(self.cycle_lengths))


def _ball_support(c, center, radius):
    return float(c @ center) + radius * float(np.linalg.norm(c))


def averaged_gap(f: SubgradientOracle, h: Composite, x_bar, s_bar, center0=None,
                 radius: Optional[float] = None) -> float:
    """phi(x_bar) + f*(s_bar) + h^*(-s_bar) with h restricted as needed.

    For bounded ``dom h`` the restriction is ``h`` itself.  Otherwise ``h``
    must be identically zero and is replaced by the indicator of the ball of
    the given ``radius`` around ``center0``.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    s_bar = np.asarray(s_bar, dtype=float)
    fs = f.conj(s_bar)
    if fs == OUTSIDE:
        raise InfeasibleDualError("averaged dual vector lies outside the conjugate domain")
    if h.bounded_domain:
        return f.value(x_bar) + h.value(x_bar) + fs + h.domain_support(-s_bar)
    if radius is None:
        raise CapabilityError("unbounded dom h: pass a radius for the gap report")
    if not isinstance(h, ZeroComposite):
        raise CapabilityError("the radius form of the gap report supports h = 0 only")
    if center0 is None:
        raise UsageError("the radius form of the gap report needs the initial center")
    center0 = np.asarray(center0, dtype=float)
    if np.linalg.norm(x_bar - center0) > radius * (1 + 1e-12):
        return OUTSIDE
    return f.value(x_bar) + fs + _ball_support(-s_bar, center0, radius)


def pdpb_gap_report(state: PdpbState, f_conj: SubgradientOracle, h: Composite,
                    radius: Optional[float] = None, center0=None) -> float:
    """Primal-dual gap of the averaged pair held in ``state``.

    ``f_conj`` is the oracle of ``f``; it must provide the conjugate.
    ``center0`` defaults to the first stored center (only needed with
    ``radius``).
    """
    if state.k == 0:
        raise UsageError("no cycle has completed yet")
    if center0 is None and state.centers:
        center0 = state.centers[0]
    return averaged_gap(f_conj, h, state.x_bar, state.s_bar, center0, radius)


def pdpb_run(f: SubgradientOracle, h: Composite, x_hat0, lam: float, eps_bar: float,
             cfg: Optional[PdcpConfig] = None, max_cycles: int = 1000,
             target: Optional[float] = None, radius: Optional[float] = None,
             gap_every: int = 1, on_budget: str = "continue", keep_outputs: bool = True,
             callback=None) -> PdpbState:
    """Run the outer loop from ``x_hat0`` with fixed stepsize ``lam``.

    Parameters
    ----------
    f, h : oracle and composite of ``min f + h``.
    x_hat0 : initial center, must lie in ``dom h``.
    lam : prox stepsize, fixed across cycles.
    eps_bar : tolerance handed to every cycle.
    cfg : cycle settings; its ``epsilon`` is overridden by ``eps_bar``.
    max_cycles : cycle budget.
    target : stop once the averaged gap drops to this value (needs the conjugate).
    radius : ball radius used by the gap report when ``dom h`` is unbounded.
    gap_every : cadence (in cycles) of the gap evaluation.
    on_budget : ``"continue"`` keeps going after a cycle hits its own budget,
        ``"abort"`` stops the run with ``aborted`` set.
    callback : called as ``callback(state, cycle_result)`` after each cycle.
    """
    if not lam > 0 or not eps_bar > 0:
        raise UsageError("lam and eps_bar must be positive")
    if on_budget not in ("continue", "abort"):
        raise UsageError("on_budget must be 'continue' or 'abort'")
    if gap_every < 1:
        raise UsageError("gap_every must be at least 1")
    center = as_point(x_hat0).copy()
    if not h.contains(center):
        raise UsageError("initial center lies outside dom h")
    cfg = replace(cfg or PdcpConfig(), epsilon=eps_bar)
    want_gap = target is not None or f.has_conj

    state = PdpbState(0, center, np.zeros_like(center), np.zeros_like(center))
    if keep_outputs:
        state.centers.append(center.copy())
    for k in range(1, max_cycles + 1):
        res: CycleResult = pdcp_run(f, h, state.center, lam, cfg)
        state.k = k
        out = res.output
        state.x_bar += (out - state.x_bar) / k
        state.s_bar += (res.s - state.s_bar) / k
        state.center = res.x_last.copy()
        state.cycle_lengths.append(res.iters)
        state.first_t.append(res.trace[0].t)
        state.final_t.append(res.output_gap)
        state.cycle_converged.append(res.converged)
        state.prox_calls += res.prox_calls
        state.oracle_calls += res.oracle_calls
        if keep_outputs:
            state.centers.append(state.center.copy())
            state.tildes.append(out.copy())
            state.duals.append(res.s.copy())
            state.model_values.append(res.m)
        if want_gap and (k % gap_every == 0 or k == max_cycles):
            try:
                gap = averaged_gap(f, h, state.x_bar, state.s_bar, state.centers[0] if
                                   state.centers else x_hat0, radius)
            except CapabilityError:
                if target is not None:
                    raise
                want_gap = False
            else:
                state.gap_history.append((k, gap))
                if target is not None and gap <= target:
                    state.converged = True
        if callback is not None:
            callback(state, res)
        if state.converged:
            break
        if not res.converged and on_budget == "abort":
            state.aborted = True
            break
    return state


@dataclass
class PdsResult:
    x_bar: np.ndarray
    s_bar: np.ndarray
    x_hat: np.ndarray
    iters: int
    gaps: list
    converged: bool
    prox_calls: int
    oracle_calls: int
    iterates: Optional[list] = None


def pds_run(f: SubgradientOracle, h: Composite, x_hat0, lam: float, iters: int,
            target: Optional[float] = None, gap_every: int = 1,
            radius: Optional[float] = None, record_iterates: bool = False,
            callback=None) -> PdsResult:
    """Prox-linear subgradient method with primal and dual averaging.

    ``s_k = f'(x^_{k-1})`` and ``x^_k = argmin <s_k, u> + h(u) +
    ||u - x^_{k-1}||^2 / (2 lam)``; returns the means of ``x^_1..x^_k`` and
    ``s_1..s_k``.  The gap trace is filled when ``f`` has a conjugate;
    ``callback(k, gap)`` is called at every gap evaluation.
    """
    if not lam > 0:
        raise UsageError("prox stepsize must be positive")
    if iters < 0 or gap_every < 1:
        raise UsageError("iters must be nonnegative and gap_every positive")
    x0 = as_point(x_hat0).copy()
    if not h.contains(x0):
        raise UsageError("initial point lies outside dom h")
    x = x0.copy()
    x_bar = np.zeros_like(x)
    s_bar = np.zeros_like(x)
    gaps = []
    record = [x.copy()] if record_iterates else None
    want_gap = f.has_conj
    converged = False
    k = 0
    for k in range(1, iters + 1):
        s = np.asarray(f.subgrad(x), dtype=float)
        x = h.prox(x, s, lam)
        x_bar += (x - x_bar) / k
        s_bar += (s - s_bar) / k
        if record is not None:
            record.append(x.copy())
        if want_gap and (k % gap_every == 0 or k == iters):
            try:
                gap = averaged_gap(f, h, x_bar, s_bar, x0, radius)
            except CapabilityError:
                if target is not None:
                    raise
                want_gap = False
                continue
            gaps.append((k, gap))
            if callback is not None:
                callback(k, gap)
            if target is not None and gap <= target:
                converged = True
                break
    return PdsResult(x_bar, s_bar, x, k, gaps, converged, k, k, record)


def recheck_averages(state: PdpbState) -> float:
    """Largest deviation between stored-output means and the incremental averages."""
    if not state.tildes:
        raise UsageError("state was run without keep_outputs")
    dx = np.max(np.abs(np.mean(state.tildes, axis=0) - state.x_bar))
    ds = np.max(np.abs(np.mean(state.duals, axis=0) - state.s_bar))
    return float(max(dx, ds))


def first_gap_bound(M: float, diameter: float, lam: float) -> float:
    """Upper bound 4M(3 d + lam M) on the first gap of any cycle."""
    return 4.0 * M * (3.0 * diameter + lam * M)


def cycle_bound(diameter: float, lam: float, eps_bar: float) -> int:
    """Cycle budget 2 d^2 / (lam eps_bar) within which the averaged gap reaches 10 eps_bar."""
    return int(math.ceil(2.0 * diameter ** 2 / (lam * eps_bar)))
