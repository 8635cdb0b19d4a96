"""Bundle models and the exact model proximal subproblem.

Three schemes are provided.

* :class:`OneCutModel` keeps a single affine aggregate.
* :class:`TwoCutModel` keeps an aggregate ``bar`` and the freshest cut;
  the model is their pointwise max.
* :class:`MultiCutModel` keeps up to ``max_cuts`` cuts; the model is their
  pointwise max.

``solve_model_prox`` returns the minimizer ``x`` of
``Gamma(u) + h(u) + ||u - x0||^2 / (2 lam)`` together with the dual vector
``s`` (a convex combination of cut gradients with ``x = prox(x0 - lam s)``),
the primal optimal value ``m`` and the multipliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Composite, Cut, combine_cuts, cut_eval, project_simplex, prox_objective
from .errors import SolverToleranceError, UsageError

BISECTION_WIDTH = 1e-12
FISTA_PG_TOL = 1e-10
FISTA_GAP_TOL = 1e-11
FISTA_ACCEPT_GAP = 1e-8
FISTA_MAX_ITERS = 10_000
PRUNE_TOL = 1e-12


@dataclass
class ModelProxSolution:
    """Primal-dual solution of one model prox subproblem.

    Attributes
    ----------
    x : ndarray
        Minimizer of the model prox subproblem.
    s : ndarray
        Dual vector, ``sum_i multipliers[i] * grad_i``.
    m : float
        Primal optimal value ``Gamma(x) + h(x) + ||x - x0||^2 / (2 lam)``.
    multipliers : ndarray
        Cut weights on the unit simplex.
    dual_value : float
        Dual objective at ``multipliers``; never exceeds ``m``.
    prox_calls : int
        Prox evaluations of ``h`` spent on the solve.
    """

    x: np.ndarray
    s: np.ndarray
    m: float
    multipliers: np.ndarray
    dual_value: float
    prox_calls: int = 1
    inner_iters: int = 0


class BundleModel:
    """Convex piecewise-affine minorant of f."""

    scheme = "base"

    def value(self, u) -> float:
        raise NotImplementedError

    def cuts(self) -> list:
        raise NotImplementedError

    def bar_model(self, sol: ModelProxSolution) -> Cut:
        """The affine aggregate implied by ``sol``'s multipliers, anchored at sol.x."""
        return combine_cuts(self.cuts(), sol.multipliers, sol.x)

    def copy(self):
        raise NotImplementedError


class OneCutModel(BundleModel):
    """Single affine aggregate stored as (value at anchor, gradient)."""

    scheme = "one-cut"

    def __init__(self, aggregate: Cut):
        self.aggregate = aggregate

    def value(self, u):
        return cut_eval(self.aggregate, u)

    def cuts(self):
        return [self.aggregate]

    def copy(self):
        return OneCutModel(self.aggregate)


class TwoCutModel(BundleModel):
    """max{bar, fresh}; ``theta`` is the weight of ``bar`` from the last solve."""

    scheme = "two-cuts"

    def __init__(self, bar: Cut, fresh: Cut, theta: float = 0.0):
        self.bar = bar
        self.fresh = fresh
        self.theta = theta

    def value(self, u):
        return max(cut_eval(self.bar, u), cut_eval(self.fresh, u))

    def cuts(self):
        return [self.bar, self.fresh]

    def copy(self):
        return TwoCutModel(self.bar, self.fresh, self.theta)


class MultiCutModel(BundleModel):
    """Pointwise max of at most ``max_cuts`` cuts."""

    scheme = "multi-cuts"

    def __init__(self, cuts, max_cuts: int = 10, multipliers=None, prune_tol: float = PRUNE_TOL):
        if max_cuts < 2:
            raise UsageError("max_cuts must be at least 2")
        self._cuts = list(cuts)
        self.max_cuts = max_cuts
        self.prune_tol = prune_tol
        if multipliers is None:
            multipliers = np.full(len(self._cuts), 1.0 / len(self._cuts))
        self.multipliers = np.asarray(multipliers, dtype=float)

    def value(self, u):
        return max(cut_eval(c, u) for c in self._cuts)

    def cuts(self):
        return list(self._cuts)

    def copy(self):
        return MultiCutModel(self._cuts, self.max_cuts, self.multipliers.copy(), self.prune_tol)


def initial_model(scheme: str, cut: Cut, max_cuts: int = 10) -> BundleModel:
    """Gamma_1 = the linearization at the prox center, in the requested scheme."""
    if scheme == "one-cut":
        return OneCutModel(cut)
    if scheme == "two-cuts":
        return TwoCutModel(cut, cut, 0.0)
    if scheme == "multi-cuts":
        return MultiCutModel([cut], max_cuts=max_cuts, multipliers=np.ones(1))
    raise UsageError(f"unknown bundle scheme {scheme!r}")


# ---------------------------------------------------------------------------
# model prox subproblem
# ---------------------------------------------------------------------------


def _finish(model, h, x0, lam, x, s, weights, dual_value, prox_calls, inner_iters=0):
    m = model.value(x) + prox_objective(h, x, x0, lam)
    return ModelProxSolution(x, s, m, weights, min(dual_value, m), prox_calls, inner_iters)


def _solve_one_cut(model: OneCutModel, h, x0, lam):
    g = model.aggregate.grad
    x = h.prox(x0, g, lam)
    m = model.value(x) + prox_objective(h, x, x0, lam)
    return ModelProxSolution(x, g.copy(), m, np.ones(1), m, 1)


def _solve_two_cut(model: TwoCutModel, h, x0, lam):
    gb, gf = model.bar.grad, model.fresh.grad
    calls = 0

    def at(theta):
        nonlocal calls
        calls += 1
        s = theta * gb + (1.0 - theta) * gf
        u = h.prox(x0, s, lam)
        return u, s, cut_eval(model.bar, u) - cut_eval(model.fresh, u)

    u0, s0, d0 = at(0.0)
    if d0 <= 0.0:
        theta, u, s = 0.0, u0, s0
    else:
        u1, s1, d1 = at(1.0)
        if d1 >= 0.0:
            theta, u, s = 1.0, u1, s1
        else:
            lo, hi = 0.0, 1.0
            while hi - lo > BISECTION_WIDTH:
                mid = 0.5 * (lo + hi)
                _, _, dm = at(mid)
                if dm > 0.0:
                    lo = mid
                elif dm < 0.0:
                    hi = mid
                else:
                    lo = hi = mid
            theta = 0.5 * (lo + hi)
            u, s, _ = at(theta)
    w = np.array([theta, 1.0 - theta])
    dual = theta * cut_eval(model.bar, u) + (1 - theta) * cut_eval(model.fresh, u)
    dual += prox_objective(h, u, x0, lam)
    return _finish(model, h, x0, lam, u, s, w, dual, calls)


def _solve_multi_cut(model: MultiCutModel, h, x0, lam):
    cuts = model.cuts()
    k = len(cuts)
    G = np.array([c.grad for c in cuts])
    b = np.array([cut_eval(c, x0) for c in cuts])
    if k == 1:
        u = h.prox(x0, G[0], lam)
        dual = cut_eval(cuts[0], u) + prox_objective(h, u, x0, lam)
        return _finish(model, h, x0, lam, u, G[0].copy(), np.ones(1), dual, 1)

    # d(theta) = theta.b + min_u <G^T theta, u - x0> + h^lam(u); grad = b + G (u - x0)
    L = lam * float(np.linalg.norm(G, 2)) ** 2
    if L <= 0.0:
        L = 1.0
    calls = 0

    def oracle(theta):
        nonlocal calls
        calls += 1
        s = G.T @ theta
        u = h.prox(x0, s, lam)
        grad = b + G @ (u - x0)
        return u, s, grad, float(theta @ grad) + prox_objective(h, u, x0, lam)

    theta = model.multipliers
    if theta.shape != (k,) or not np.all(np.isfinite(theta)):
        theta = np.full(k, 1.0 / k)
    theta = project_simplex(theta)
    u, s, grad, val = oracle(theta)
    y, y_grad = theta, grad
    t = 1.0
    best = None
    it = 0
    while True:
        # duality gap of the subproblem: max_i l_i(u) - sum_i theta_i l_i(u)
        gap = float(grad.max() - theta @ grad)
        if best is None or val > best[3]:
            best = (theta, u, s, val, gap)
        if gap <= FISTA_GAP_TOL or it >= FISTA_MAX_ITERS:
            break
        pg = L * float(np.linalg.norm(theta - project_simplex(theta + grad / L)))
        if pg <= FISTA_PG_TOL:
            break
        it += 1
        if y_grad is None:
            y_grad = oracle(y)[2]
        theta_new = project_simplex(y + y_grad / L)
        u, s, grad_new, val_new = oracle(theta_new)
        if val_new < val:
            # adaptive restart on dual-value decrease
            y, y_grad, t = theta_new, grad_new, 1.0
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = theta_new + ((t - 1.0) / t_new) * (theta_new - theta)
            y_grad, t = None, t_new
        theta, grad, val = theta_new, grad_new, val_new
    if gap > FISTA_GAP_TOL and best[4] < gap:
        theta, u, s, val, gap = best
    if it >= FISTA_MAX_ITERS and gap > FISTA_ACCEPT_GAP:
        raise SolverToleranceError("multi-cut dual solver hit its iteration cap", gap)
    return _finish(model, h, x0, lam, u, s, theta, val, calls, it)


def solve_model_prox(model: BundleModel, h: Composite, x0, lam) -> ModelProxSolution:
    """Exact solve of ``min_u Gamma(u) + h(u) + ||u - x0||^2 / (2 lam)``."""
    if lam <= 0:
        raise UsageError("prox stepsize must be positive")
    x0 = np.asarray(x0, dtype=float)
    if isinstance(model, OneCutModel):
        return _solve_one_cut(model, h, x0, lam)
    if isinstance(model, TwoCutModel):
        return _solve_two_cut(model, h, x0, lam)
    if isinstance(model, MultiCutModel):
        return _solve_multi_cut(model, h, x0, lam)
    raise UsageError(f"unsupported model type {type(model).__name__}")


# ---------------------------------------------------------------------------
# model update
# ---------------------------------------------------------------------------


def update_model(model: BundleModel, tau: float, sol: ModelProxSolution, new_cut: Cut) -> BundleModel:
    """Next model from the current one, the last solve and a fresh cut at sol.x.

    ``tau`` drives the one-cut aggregation; the two- and multi-cut schemes
    satisfy the stronger ``Gamma_next >= max{bar, new_cut}`` and use ``tau``
    for bookkeeping only.
    """
    if not (0.0 <= tau <= 1.0):
        raise UsageError(f"tau must lie in [0, 1], got {tau}")
    if isinstance(model, OneCutModel):
        agg = combine_cuts([model.aggregate, new_cut], [tau, 1.0 - tau], new_cut.anchor)
        return OneCutModel(agg)
    if isinstance(model, TwoCutModel):
        theta = float(sol.multipliers[0])
        bar = combine_cuts([model.bar, model.fresh], [theta, 1.0 - theta], sol.x)
        return TwoCutModel(bar, new_cut, theta)
    if isinstance(model, MultiCutModel):
        cuts = model.cuts()
        theta = np.asarray(sol.multipliers, dtype=float)
        keep = [i for i in range(len(cuts)) if theta[i] > model.prune_tol]
        if len(keep) + 1 > model.max_cuts:
            keep.sort(key=lambda i: -theta[i])
            top, rest = keep[: model.max_cuts - 2], keep[model.max_cuts - 2:]
            top.sort()
            w_rest = theta[rest]
            synth = combine_cuts([cuts[i] for i in rest], w_rest / w_rest.sum(), sol.x)
            new_cuts = [cuts[i] for i in top] + [synth, new_cut]
            new_theta = np.concatenate([theta[top], [w_rest.sum()], [0.0]])
        else:
            new_cuts = [cuts[i] for i in keep] + [new_cut]
            new_theta = np.concatenate([theta[keep], [0.0]])
        new_theta = new_theta / new_theta.sum()
        return MultiCutModel(new_cuts, model.max_cuts, new_theta, model.prune_tol)
    raise UsageError(f"unsupported model type {type(model).__name__}")


@dataclass
class GbmReport:
    """Largest violation of each model-update condition over the samples."""

    minorant: float
    aggregate_lower: float
    tightness: float
    strong_lower: float
    extras: dict = field(default_factory=dict)

    def holds(self, tol=1e-10, strong=False) -> bool:
        ok = self.minorant <= tol and self.aggregate_lower <= tol and self.tightness <= tol
        return ok and (self.strong_lower <= tol if strong else True)


def gbm_contract_check(before: BundleModel, after: BundleModel, tau, sol: ModelProxSolution,
                       new_cut: Cut, f_oracle, samples) -> GbmReport:
    """Measure the model-update conditions at sampled points.

    (i) ``after(u) <= f(u)``; (ii) ``after(u) >= tau bar(u) + (1-tau) new_cut(u)``;
    (iii) ``bar(x) == before(x)`` at the solve point; (iv) the stronger
    ``after(u) >= max{bar(u), new_cut(u)}``.  Violations are reported as
    nonnegative numbers (0 means the condition held everywhere).
    """
    bar = before.bar_model(sol)
    v1 = v2 = v4 = 0.0
    for u in samples:
        a = after.value(u)
        nb, nc = cut_eval(bar, u), cut_eval(new_cut, u)
        v1 = max(v1, a - f_oracle.value(u))
        v2 = max(v2, tau * nb + (1 - tau) * nc - a)
        v4 = max(v4, max(nb, nc) - a)
    v3 = abs(cut_eval(bar, sol.x) - before.value(sol.x))
    return GbmReport(v1, v2, v3, v4)
