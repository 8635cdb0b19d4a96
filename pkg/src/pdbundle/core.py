"""Oracle contracts and the cut primitives every solver consumes.

A convex function ``f`` is accessed through a :class:`SubgradientOracle`
(value, a deterministic subgradient, a bound ``M`` on subgradient norms and
optionally the conjugate ``f*``).  The prox-friendly part ``h`` is a
:class:`Composite`.  Values outside ``dom h`` or ``dom f*`` are reported as
``OUTSIDE`` (``math.inf``), never produced by overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, InstanceError, UsageError

OUTSIDE = math.inf

SIMPLEX_TOL = 1e-9


def as_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise UsageError(f"expected a 1-D point, got shape {x.shape}")
    return x


# ---------------------------------------------------------------------------
# simplex projection
# ---------------------------------------------------------------------------


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort-and-threshold)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, n + 1)
    rho = np.nonzero(u * ind > css)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


# ---------------------------------------------------------------------------
# oracles for f
# ---------------------------------------------------------------------------


class SubgradientOracle:
    """Deterministic first-order oracle of a convex function.

    Subclasses implement :meth:`value` and :meth:`subgrad`; :meth:`conj` is an
    optional capability advertised by ``has_conj``.
    """

    lipschitz_bound: float = math.inf
    has_conj: bool = False

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def subgrad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def conj(self, z: np.ndarray) -> float:
        raise CapabilityError(f"{type(self).__name__} has no conjugate oracle")


class AffineOracle(SubgradientOracle):
    """f(x) = <c, x> + b."""

    has_conj = True

    def __init__(self, c, b=0.0, lipschitz_bound=None, conj_tol=1e-9):
        self.c = as_point(c).copy()
        self.b = float(b)
        self.conj_tol = conj_tol
        self.lipschitz_bound = (
            float(np.linalg.norm(self.c)) if lipschitz_bound is None else lipschitz_bound
        )
        if self.lipschitz_bound <= 0:
            self.lipschitz_bound = 1.0

    def value(self, x):
        return float(self.c @ x) + self.b

    def subgrad(self, x):
        return self.c.copy()

    def conj(self, z):
        if np.abs(np.asarray(z) - self.c).sum() <= self.conj_tol:
            return -self.b
        return OUTSIDE


def linf_subgradient(x: np.ndarray, active_tol: float = 1e-12) -> np.ndarray:
    """Uniform-weight subgradient of ``||x||_inf`` over the active set.

    The active set is ``{j : |x_j| >= ||x||_inf * (1 - active_tol)}``; each
    active coordinate gets weight ``sign(x_j) / |I(x)|``.  Returns 0 at x = 0.
    """
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    top = a.max()
    g = np.zeros_like(x)
    if top == 0.0:
        return g
    active = a >= top * (1.0 - active_tol)
    g[active] = np.sign(x[active]) / np.count_nonzero(active)
    return g


class LinfLinearOracle(SubgradientOracle):
    """f(x) = <c, x> + gamma * ||x||_inf + const.

    The conjugate is ``-const`` on the l1-ball ``{z : ||z - c||_1 <= gamma}``
    and ``OUTSIDE`` elsewhere.
    """

    has_conj = True

    def __init__(self, c, gamma, const=0.0, lipschitz_bound=None, conj_tol=1e-9,
                 active_tol=1e-12):
        if gamma < 0:
            raise UsageError("gamma must be nonnegative")
        self.c = as_point(c).copy()
        self.gamma = float(gamma)
        self.const = float(const)
        self.conj_tol = conj_tol
        self.active_tol = active_tol
        if lipschitz_bound is None:
            lipschitz_bound = float(np.linalg.norm(self.c)) + self.gamma
        self.lipschitz_bound = max(float(lipschitz_bound), np.finfo(float).tiny)

    def value(self, x):
        return float(self.c @ x) + self.gamma * float(np.abs(x).max()) + self.const

    def subgrad(self, x):
        return self.c + self.gamma * linf_subgradient(x, self.active_tol)

    def conj(self, z):
        if np.abs(np.asarray(z) - self.c).sum() <= self.gamma + self.conj_tol:
            return -self.const
        return OUTSIDE


class MaxAffineOracle(SubgradientOracle):
    """f(x) = max_i <g_i, x> + b_i, subgradient from the first maximizer."""

    has_conj = True

    def __init__(self, G, b, conj_tol=1e-9):
        self.G = np.atleast_2d(np.asarray(G, dtype=float))
        self.b = np.asarray(b, dtype=float)
        self.conj_tol = conj_tol
        self.lipschitz_bound = float(np.linalg.norm(self.G, axis=1).max())

    def value(self, x):
        return float((self.G @ x + self.b).max())

    def subgrad(self, x):
        return self.G[int(np.argmax(self.G @ x + self.b))].copy()

    def conj(self, z):
        # f*(z) = min{-<lam, b> : G^T lam = z, lam in simplex}
        from scipy.optimize import linprog

        p = self.G.shape[0]
        A_eq = np.vstack([self.G.T, np.ones((1, p))])
        b_eq = np.concatenate([np.asarray(z, dtype=float), [1.0]])
        res = linprog(-self.b, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if res.status != 0:
            return OUTSIDE
        if np.abs(A_eq @ res.x - b_eq).max() > self.conj_tol:
            return OUTSIDE
        return float(res.fun)


class FunctionOracle(SubgradientOracle):
    """Wraps plain callables into the oracle contract."""

    def __init__(self, value, subgrad, lipschitz_bound, conj=None):
        self._value = value
        self._subgrad = subgrad
        self._conj = conj
        self.has_conj = conj is not None
        self.lipschitz_bound = float(lipschitz_bound)

    def value(self, x):
        return float(self._value(x))

    def subgrad(self, x):
        return np.asarray(self._subgrad(x), dtype=float)

    def conj(self, z):
        if self._conj is None:
            return super().conj(z)
        return float(self._conj(z))


# ---------------------------------------------------------------------------
# composites h
# ---------------------------------------------------------------------------


class Composite:
    """Prox-capable convex function h."""

    bounded_domain: bool = False

    def value(self, u: np.ndarray) -> float:
        raise NotImplementedError

    def prox(self, center, tilt, lam) -> np.ndarray:
        """argmin_u <tilt, u> + h(u) + ||u - center||^2 / (2 lam)."""
        raise NotImplementedError

    def contains(self, u) -> bool:
        return self.value(u) < OUTSIDE

    def domain_support(self, c) -> float:
        """sup_{u in dom h} <c, u> - h(u)."""
        raise CapabilityError(f"{type(self).__name__} has an unbounded domain")

    def diameter(self) -> float:
        raise CapabilityError(f"{type(self).__name__} has an unbounded domain")


class SimplexIndicator(Composite):
    """Indicator of the unit simplex in R^n."""

    bounded_domain = True

    def __init__(self, n: int, tol: float = SIMPLEX_TOL):
        self.n = n
        self.tol = tol

    def value(self, u):
        u = np.asarray(u)
        if u.shape != (self.n,):
            raise UsageError(f"expected shape ({self.n},), got {u.shape}")
        if u.min() >= -self.tol and abs(u.sum() - 1.0) <= self.tol:
            return 0.0
        return OUTSIDE

    def prox(self, center, tilt, lam):
        if lam <= 0:
            raise UsageError("prox stepsize must be positive")
        return project_simplex(np.asarray(center) - lam * np.asarray(tilt))

    def domain_support(self, c):
        return float(np.max(c))

    def diameter(self):
        return math.sqrt(2.0) if self.n > 1 else 0.0

    def sample(self, rng, size=None):
        """Uniform samples from the simplex."""
        return rng.dirichlet(np.ones(self.n), size=size)


class ZeroComposite(Composite):
    """h identically zero on R^n."""

    def __init__(self, n: int):
        self.n = n

    def value(self, u):
        return 0.0

    def prox(self, center, tilt, lam):
        if lam <= 0:
            raise UsageError("prox stepsize must be positive")
        return np.asarray(center) - lam * np.asarray(tilt)


def prox_objective(h: Composite, u, x0, lam) -> float:
    """h^lam(u) = h(u) + ||u - x0||^2 / (2 lam)."""
    d = np.asarray(u) - x0
    return h.value(u) + float(d @ d) / (2.0 * lam)


def moreau_conjugate(h: Composite, w, x0, lam):
    """(h^lam)^*(w) and its maximizer, via one prox call.

    The maximizer of <w, u> - h^lam(u) is prox_{lam h}(x0 + lam w).
    """
    u = h.prox(x0, -np.asarray(w), lam)
    return float(np.asarray(w) @ u) - prox_objective(h, u, x0, lam), u


# ---------------------------------------------------------------------------
# cuts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cut:
    """Affine minorant ``anchor_value + <grad, . - anchor>`` of f."""

    anchor: np.ndarray
    anchor_value: float
    grad: np.ndarray

    def __call__(self, u) -> float:
        return cut_eval(self, u)

    def reanchor(self, point) -> "Cut":
        point = np.asarray(point, dtype=float)
        return Cut(point, cut_eval(self, point), self.grad)


def linearize(oracle: SubgradientOracle, x) -> Cut:
    x = as_point(x)
    val = oracle.value(x)
    g = oracle.subgrad(x)
    if not math.isfinite(val) or not np.all(np.isfinite(g)):
        raise InstanceError(f"oracle returned a non-finite value at {x!r}")
    return Cut(x.copy(), float(val), np.asarray(g, dtype=float))


def cut_eval(cut: Cut, u) -> float:
    u = np.asarray(u, dtype=float)
    if u.shape != cut.anchor.shape:
        raise UsageError(f"dimension mismatch: cut has {cut.anchor.shape}, point {u.shape}")
    return cut.anchor_value + float(cut.grad @ (u - cut.anchor))


def combine_cuts(cuts, weights, anchor) -> Cut:
    """Affine combination sum_i w_i cut_i, re-anchored at ``anchor``."""
    anchor = np.asarray(anchor, dtype=float)
    w = np.asarray(weights, dtype=float)
    grad = np.zeros_like(anchor)
    value = 0.0
    for wi, c in zip(w, cuts):
        grad += wi * c.grad
        value += wi * cut_eval(c, anchor)
    return Cut(anchor, value, grad)
