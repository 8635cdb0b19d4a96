"""Conditional gradient on the Fenchel dual of the prox subproblem.

The dual of ``min_u f(u) + h^lam(u)`` with ``h^lam = h + ||. - x0||^2/(2 lam)``
is ``min_z psi(z) = (h^lam)*(-z) + f*(z)``.  Its linear minimization oracle
needs no description of ``dom f*``: the gradient of ``(h^lam)*`` at ``-z``
is the prox point ``x = prox_{lam h}(x0 - lam z)`` and the minimizer over
``dom f*`` of ``<-x, .> + f*`` is any subgradient ``f'(x)``.

With the open-loop rule ``tau_j = j/(j+2)`` and ``z_1 = f'(x0)`` the dual
iterates coincide with the one-cut bundle iterates, ``s_j = z_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import OUTSIDE, Composite, SubgradientOracle, as_point, cut_eval, moreau_conjugate, prox_objective
from .errors import CapabilityError, CertificationError, InfeasibleDualError, UsageError
from .pdcp import PdcpConfig, pdcp_run

STEP_RULES = ("open-loop", "alpha", "beta")
GOLDEN_WIDTH = 1e-12
GOLDEN_MAX_PROBES = 200
STATIONARY_TOL = 1e-14
EXTRACT_TOL = 1e-6


def lmo_dual(f: SubgradientOracle, h: Composite, x0, lam: float, z):
    """Linear minimization step of the dual method.

    Returns ``(z_bar, x)`` with ``x = prox_{lam h}(x0 - lam z)`` and
    ``z_bar = f'(x)``.
    """
    x = h.prox(np.asarray(x0, dtype=float), np.asarray(z, dtype=float), lam)
    return np.asarray(f.subgrad(x), dtype=float), x


def psi_value(f: SubgradientOracle, h: Composite, x0, lam, z) -> float:
    """Dual objective ``(h^lam)*(-z) + f*(z)``; needs the conjugate of ``f``."""
    fz = f.conj(z)
    if fz == OUTSIDE:
        return OUTSIDE
    hc, _ = moreau_conjugate(h, -np.asarray(z, dtype=float), x0, lam)
    return hc + fz


def golden_section(fun, lo=0.0, hi=1.0, width=GOLDEN_WIDTH, max_probes=GOLDEN_MAX_PROBES):
    """Minimize a unimodal function on [lo, hi]; returns (argmin, value, probes)."""
    r = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - r * (b - a)
    d = a + r * (b - a)
    fc, fd = fun(c), fun(d)
    probes = 2
    while b - a > width and probes < max_probes:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - r * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + r * (b - a)
            fd = fun(d)
        probes += 1
    if fc <= fd:
        return c, fc, probes
    return d, fd, probes


@dataclass
class CgStep:
    """One iteration of the dual method.

    ``x`` is the prox point of ``z``; ``u`` the primal average; ``tau`` the
    weight used to form ``z_{j+1} = tau z + (1 - tau) z_bar``.  ``wolfe`` is
    the exact gap (``None`` without a conjugate), ``wolfe_upper`` the
    conjugate-free upper estimate.
    """

    j: int
    z: np.ndarray
    z_bar: np.ndarray
    x: np.ndarray
    u: np.ndarray
    tau: float
    wolfe: Optional[float]
    wolfe_upper: float
    psi: Optional[float]
    phi_x: float
    phi_u: float


@dataclass
class CgState:
    rule: str
    steps: list = field(default_factory=list)
    basis: list = field(default_factory=list)
    weights: Optional[np.ndarray] = None
    basis_conj: list = field(default_factory=list)
    x0: Optional[np.ndarray] = None
    lam: float = math.nan
    prox_calls: int = 0
    oracle_calls: int = 0
    converged: bool = False

    @property
    def z(self):
        return self.steps[-1].z

    def reconstruct(self) -> np.ndarray:
        """z_{next} rebuilt from the stored basis and combination weights."""
        return self.weights @ np.asarray(self.basis)


def wolfe_gap(f: SubgradientOracle, x, z, f_conj_value: Optional[float] = None) -> float:
    """S(z) = f*(z) - <x, z> + f(x) with x the prox point of z.

    With ``f_conj_value`` given it replaces ``f*(z)`` (upper-estimate mode);
    otherwise the conjugate oracle is queried.
    """
    fz = f.conj(z) if f_conj_value is None else f_conj_value
    if fz == OUTSIDE:
        raise InfeasibleDualError("dual iterate lies outside the conjugate domain")
    return fz - float(np.asarray(x) @ np.asarray(z)) + f.value(x)


def cg_run(f: SubgradientOracle, h: Composite, x0, lam: float, iters: int,
           rule: str = "open-loop", f_conj: Optional[SubgradientOracle] = None,
           u_rule: str = "current", target: Optional[float] = None,
           callback=None) -> CgState:
    """Conditional gradient on the dual of the prox subproblem.

    Parameters
    ----------
    f, h : the primal pieces; ``x0`` is the prox center, ``lam`` the stepsize.
    iters : number of iterations.
    rule : ``"open-loop"`` (tau_j = j/(j+2)), ``"alpha"`` (short step from the
        Wolfe gap) or ``"beta"`` (exact line search, needs the conjugate).
    f_conj : oracle providing the conjugate of ``f``; defaults to ``f`` when
        it has one.  Without it the Wolfe gap is only an upper estimate.
    u_rule : primal average. ``"current"`` uses
        ``u_{j+1} = tau_j u_j + (1 - tau_j) x_{j+1}`` (the aggregation used by
        the bundle side); ``"lagged"`` uses ``x_j`` in place of ``x_{j+1}``.
        Both use tau_j = j/(j+2).
    target : stop once the exact Wolfe gap (or its upper estimate when no
        conjugate is available) drops to this value.
    callback : called as ``callback(state, step)`` after every iteration.
    """
    if rule not in STEP_RULES:
        raise UsageError(f"unknown step rule {rule!r}; expected one of {STEP_RULES}")
    if u_rule not in ("current", "lagged"):
        raise UsageError("u_rule must be 'current' or 'lagged'")
    if not lam > 0:
        raise UsageError("prox stepsize must be positive")
    x0 = as_point(x0).copy()
    if f_conj is None and f.has_conj:
        f_conj = f
    if rule == "beta" and f_conj is None:
        raise CapabilityError("the line-search rule needs a conjugate oracle")

    state = CgState(rule, x0=x0, lam=lam)
    z = np.asarray(f.subgrad(x0), dtype=float)
    state.oracle_calls += 1
    state.basis.append(z.copy())
    state.basis_conj.append(float(z @ x0) - f.value(x0))
    weights = np.ones(1)

    def psi(w):
        state.prox_calls += 1
        return psi_value(f_conj, h, x0, lam, w)

    u = None
    x_prev = None
    for j in range(1, iters + 1):
        z_bar, x = lmo_dual(f, h, x0, lam, z)
        state.prox_calls += 1
        state.oracle_calls += 1
        fx = f.value(x)
        if j == 1:
            u = x.copy()
        else:
            ou = (j - 1) / (j + 1.0)
            u = ou * u + (1.0 - ou) * (x if u_rule == "current" else x_prev)
        upper_conj = float(weights @ np.asarray(state.basis_conj))
        s_up = upper_conj - float(x @ z) + fx
        s_exact = psi_z = None
        if f_conj is not None:
            s_exact = wolfe_gap(f_conj, x, z)
            psi_z = psi(z)
        phi_x = fx + prox_objective(h, x, x0, lam)
        phi_u = f.value(u) + prox_objective(h, u, x0, lam)

        d = z - z_bar
        dd = float(d @ d)
        if rule == "open-loop":
            tau = j / (j + 2.0)
        elif rule == "alpha":
            if math.sqrt(dd) <= STATIONARY_TOL:
                tau = 1.0
            else:
                gap = s_exact if s_exact is not None else s_up
                tau = max(0.0, 1.0 - gap / (lam * dd))
        else:
            if math.sqrt(dd) <= STATIONARY_TOL:
                tau = 1.0
            else:
                seg = lambda b: psi(b * z + (1.0 - b) * z_bar)
                tau, best, _ = golden_section(seg)
                for end in (0.0, 1.0):
                    v = seg(end)
                    if v < best:
                        tau, best = end, v

        state.steps.append(CgStep(j, z.copy(), z_bar.copy(), x.copy(), u.copy(), tau,
                                  s_exact, s_up, psi_z, phi_x, phi_u))
        state.basis.append(z_bar.copy())
        state.basis_conj.append(float(z_bar @ x) - fx)
        weights = np.append(tau * weights, 1.0 - tau)
        z = tau * z + (1.0 - tau) * z_bar
        x_prev = x
        if callback is not None:
            callback(state, state.steps[-1])
        if target is not None and (s_exact if s_exact is not None else s_up) <= target:
            state.converged = True
            break
    state.weights = weights
    return state


# ---------------------------------------------------------------------------
# duality with the bundle cycle
# ---------------------------------------------------------------------------


@dataclass
class DualityReport:
    iters: int
    s_vs_z: float
    x_vs_prox: float
    subgrad_vs_zbar: float

    @property
    def max_deviation(self) -> float:
        return max(self.s_vs_z, self.x_vs_prox, self.subgrad_vs_zbar)


def duality_check(f: SubgradientOracle, h: Composite, x0, lam: float, iters: int) -> DualityReport:
    """Run the one-cut cycle and open-loop CG side by side and compare.

    Deviations are the largest, over iterations, of ``||s_j - z_j||``,
    ``||x_j - prox point of z_j||`` and ``||f'(x_j) - z_bar_j||``.
    """
    cfg = PdcpConfig(scheme="one-cut", epsilon=1e-300, max_iters=iters, min_iters=iters,
                     record_iterates=True)
    res = pdcp_run(f, h, x0, lam, cfg)
    cg = cg_run(f, h, x0, lam, res.iters, rule="open-loop", f_conj=None)
    a = b = c = 0.0
    for st, cs in zip(res.trace, cg.steps):
        a = max(a, float(np.linalg.norm(st.s - cs.z)))
        xz = h.prox(np.asarray(x0, dtype=float), cs.z, lam)
        b = max(b, float(np.linalg.norm(st.x - xz)))
        c = max(c, float(np.linalg.norm(np.asarray(f.subgrad(st.x)) - cs.z_bar)))
    return DualityReport(len(cg.steps), a, b, c)


@dataclass
class ExtractStep:
    j: int
    z: np.ndarray
    x: np.ndarray
    support: int
    representation_residual: float
    prox_residual: float
    slackness_residual: float
    subgrad_residual: float
    gap: Optional[float] = None

    @property
    def residual(self) -> float:
        return max(self.representation_residual, self.prox_residual,
                   self.slackness_residual, self.subgrad_residual)


def cg_variant_extract(scheme: str, f: SubgradientOracle, h: Composite, x0, lam: float,
                       iters: int, max_cuts: Optional[int] = None, tol: float = EXTRACT_TOL,
                       f_conj: Optional[SubgradientOracle] = None) -> list:
    """Dual iterates of the two- or multi-cut cycle read from its multipliers.

    Runs the bundle cycle with the matching scheme and, at every iteration,
    publishes ``z_j = sum_i theta_i g_i`` and verifies that ``x_j`` is the
    prox point of ``z_j``, that every cut carrying weight is active at
    ``x_j`` (so ``z_j`` is a subgradient of the model there) and that the cut
    added at ``x_j`` carries ``f'(x_j)``.  Raises
    :class:`CertificationError` when a residual exceeds ``tol``.

    Without a cut limit (the default) no aggregation happens, so ``z_j`` is
    a genuine sparse combination of past subgradients.
    """
    names = {"two-cut": "two-cuts", "two-cuts": "two-cuts",
             "multi-cut": "multi-cuts", "multi-cuts": "multi-cuts"}
    if scheme not in names:
        raise UsageError(f"unknown extraction scheme {scheme!r}")
    x0 = as_point(x0)
    if f_conj is None and f.has_conj:
        f_conj = f
    cfg = PdcpConfig(scheme=names[scheme], epsilon=1e-300, max_iters=iters, min_iters=iters,
                     max_cuts=max_cuts if max_cuts is not None else iters + 2)
    out = []
    pending = {"x": x0.copy()}

    def check(j, sol, model, step):
        cuts = model.cuts()
        theta = np.asarray(sol.multipliers, dtype=float)
        G = np.array([c.grad for c in cuts])
        z = theta @ G
        rep = float(np.linalg.norm(z - sol.s))
        prox_res = float(np.linalg.norm(h.prox(x0, z, lam) - sol.x))
        vals = np.array([cut_eval(c, sol.x) for c in cuts])
        top = float(vals.max())
        slack = float(theta @ (top - vals))
        # the newest cut was taken at the previous model minimizer
        g = np.asarray(f.subgrad(pending["x"]), dtype=float)
        sub = float(np.linalg.norm(cuts[-1].grad - g))
        gap = None
        if f_conj is not None:
            p = psi_value(f_conj, h, x0, lam, z)
            gap = step.phi_tilde + p
        es = ExtractStep(j, z, sol.x.copy(), int(np.count_nonzero(theta > 0)), rep, prox_res,
                         slack, sub, gap)
        if es.residual > tol:
            raise CertificationError(f"dual extraction failed at iteration {j}", es.residual, j)
        out.append(es)
        pending["x"] = sol.x.copy()

    pdcp_run(f, h, x0, lam, cfg, callback=check)
    return out


def cg_bound(M: float, diameter: float, lam: float, j: int, tail: float = 8.0) -> float:
    """8M(3d + lam M)/(j(j+1)) + tail * lam M^2/(j+1)."""
    return 8.0 * M * (3.0 * diameter + lam * M) / (j * (j + 1.0)) + tail * lam * M * M / (j + 1.0)
