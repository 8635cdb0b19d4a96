"""l_inf-regularized matrix games on simplices.

    min_{x in D_n} max_{y in D_m}  y^T A x + gamma_x ||x||_inf - gamma_y ||y||_inf

The payoff matrix is sparse and stored as coordinate triplets in row-major
order so every mat-vec accumulates in the same order on every run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import (
    OUTSIDE,
    LinfLinearOracle,
    SimplexIndicator,
    linf_subgradient,
    project_simplex,
)
from .errors import ConfigError, UsageError

SIMPLEX_CHECK_TOL = 1e-8
CONJ_TOL = 1e-9
ACTIVE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GameInstance:
    """Sparse payoff matrix plus regularization weights.

    Attributes
    ----------
    m, n : int
        Number of rows (y-player) and columns (x-player).
    rows, cols, vals : ndarray
        Coordinate triplets, sorted row-major.
    gamma_x, gamma_y : float
        l_inf weights.
    density : float
        Generation density (informational for loaded files).
    seed : int
        Generation seed.
    """

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    gamma_x: float
    gamma_y: float
    density: float = 1.0
    seed: int = 0
    _csr: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        if self.gamma_x < 0 or self.gamma_y < 0:
            raise UsageError("regularization weights must be nonnegative")
        order = np.lexsort((self.cols, self.rows))
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.int64)[order])
        object.__setattr__(self, "cols", np.asarray(self.cols, dtype=np.int64)[order])
        object.__setattr__(self, "vals", np.asarray(self.vals, dtype=float)[order])
        A = sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.m, self.n))
        object.__setattr__(self, "_csr", A)

    @classmethod
    def from_dense(cls, A, gamma_x=0.0, gamma_y=0.0, seed=0):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        r, c = np.nonzero(A)
        return cls(A.shape[0], A.shape[1], r, c, A[r, c], float(gamma_x), float(gamma_y),
                   density=1.0, seed=seed)

    @property
    def indptr(self) -> np.ndarray:
        """Row pointers into the (row-major) triplet arrays."""
        return np.concatenate(([0], np.cumsum(np.bincount(self.rows, minlength=self.m)))).astype(np.int64)

    @property
    def A(self) -> sp.csr_matrix:
        return self._csr

    def dense(self) -> np.ndarray:
        return self._csr.toarray()

    def Ax(self, x):
        return self._csr @ x

    def ATy(self, y):
        return self._csr.T @ y

    @property
    def M_x(self) -> float:
        """Bound on ||A^T v + gamma_x g_u|| over the simplices: max row norm + gamma_x."""
        sq = np.bincount(self.rows, weights=self.vals**2, minlength=self.m)
        return float(np.sqrt(sq.max())) + self.gamma_x if self.m else self.gamma_x

    @property
    def M_y(self) -> float:
        """Bound on ||A u - gamma_y g_v||: max column norm + gamma_y."""
        sq = np.bincount(self.cols, weights=self.vals**2, minlength=self.n)
        return float(np.sqrt(sq.max())) + self.gamma_y if self.n else self.gamma_y

    @property
    def M(self) -> float:
        return max(self.M_x, self.M_y)

    def value(self, x, y) -> float:
        """f(x, y) = y^T A x + gamma_x ||x||_inf - gamma_y ||y||_inf."""
        return (float(y @ self.Ax(x)) + self.gamma_x * float(np.abs(x).max())
                - self.gamma_y * float(np.abs(y).max()))

    def grad_x(self, x, y):
        return self.ATy(y) + self.gamma_x * linf_subgradient(x, ACTIVE_TOL)

    def grad_y(self, x, y):
        """Supergradient of f(x, .) at y."""
        return self.Ax(x) - self.gamma_y * linf_subgradient(y, ACTIVE_TOL)


def generate_instance(m, n, density, gamma_x, gamma_y, seed) -> GameInstance:
    """Random sparse game: per-entry Bernoulli(density) mask, N(0,1) values.

    The mask is drawn first (row-major), then one standard normal per
    nonzero in row-major order, from ``numpy.random.default_rng(seed)``.
    """
    if not (0.0 < density <= 1.0):
        raise UsageError("density must lie in (0, 1]")
    if m < 1 or n < 1:
        raise UsageError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    mask = rng.random((m, n)) < density
    r, c = np.nonzero(mask)
    vals = rng.standard_normal(r.size)
    return GameInstance(m, n, r, c, vals, float(gamma_x), float(gamma_y),
                        density=float(density), seed=int(seed))


# ---------------------------------------------------------------------------
# subproblems
# ---------------------------------------------------------------------------


def simplex_prox(center, tilt, lam):
    """Projection of ``center - lam * tilt`` onto the unit simplex."""
    if lam <= 0:
        raise UsageError("prox stepsize must be positive")
    return project_simplex(np.asarray(center, dtype=float) - lam * np.asarray(tilt, dtype=float))


@dataclass(frozen=True)
class FzSolution:
    x: np.ndarray
    value: float
    j_star: int
    S: np.ndarray


def fz_sequence(z, gamma):
    """Sorted order and the sequence S_j = (gamma + sum_{i<=j} z_(i)) / j."""
    z = np.asarray(z, dtype=float)
    order = np.argsort(z, kind="stable")
    S = (gamma + np.cumsum(z[order])) / np.arange(1, z.size + 1)
    return order, S


def exact_fz(z, gamma) -> FzSolution:
    """Exact minimizer of <z, x> + gamma ||x||_inf over the unit simplex.

    Sort z ascending, form S_j, and take j* as the first index with
    S_j <= S_{j+1} (n if none).  The minimizer spreads mass 1/j* uniformly
    over the j* smallest coordinates and the optimal value is S_{j*}.
    """
    if gamma < 0:
        raise UsageError("gamma must be nonnegative")
    order, S = fz_sequence(z, gamma)
    n = S.size
    hits = np.nonzero(S[:-1] <= S[1:])[0]
    j_star = int(hits[0]) + 1 if hits.size else n
    x = np.zeros(n)
    x[order[:j_star]] = 1.0 / j_star
    return FzSolution(x, float(S[j_star - 1]), j_star, S)


def _check_simplex(v, name):
    v = np.asarray(v, dtype=float)
    if v.min() < -SIMPLEX_CHECK_TOL or abs(v.sum() - 1.0) > SIMPLEX_CHECK_TOL:
        raise UsageError(f"{name} is not on the simplex")
    return v


def phi_eval(inst: GameInstance, x) -> float:
    """phi(x) = gamma_x ||x||_inf + max_y {y^T A x - gamma_y ||y||_inf}."""
    x = _check_simplex(x, "x")
    return inst.gamma_x * float(np.abs(x).max()) - exact_fz(-inst.Ax(x), inst.gamma_y).value


def psi_eval(inst: GameInstance, y) -> float:
    """psi(y) = -gamma_y ||y||_inf + min_x {y^T A x + gamma_x ||x||_inf}."""
    y = _check_simplex(y, "y")
    return -inst.gamma_y * float(np.abs(y).max()) + exact_fz(inst.ATy(y), inst.gamma_x).value


def phi_psi_eval(inst: GameInstance, x, y):
    return phi_eval(inst, x), psi_eval(inst, y)


def side_oracle(inst: GameInstance, side: str, anchor) -> LinfLinearOracle:
    """Objective of one PDCP subproblem with the other player frozen.

    side ``"x"``: u -> f(u, anchor) = <A^T anchor, u> + gamma_x ||u||_inf - gamma_y ||anchor||_inf.
    side ``"y"``: v -> -f(anchor, v) = <-A anchor, v> + gamma_y ||v||_inf - gamma_x ||anchor||_inf.
    """
    anchor = np.asarray(anchor, dtype=float)
    if side == "x":
        return LinfLinearOracle(inst.ATy(anchor), inst.gamma_x,
                                const=-inst.gamma_y * float(np.abs(anchor).max()),
                                lipschitz_bound=inst.M, conj_tol=CONJ_TOL, active_tol=ACTIVE_TOL)
    if side == "y":
        return LinfLinearOracle(-inst.Ax(anchor), inst.gamma_y,
                                const=-inst.gamma_x * float(np.abs(anchor).max()),
                                lipschitz_bound=inst.M, conj_tol=CONJ_TOL, active_tol=ACTIVE_TOL)
    raise UsageError(f"side must be 'x' or 'y', got {side!r}")


def conj_membership(inst: GameInstance, side: str, anchor, z) -> float:
    """Conjugate of the side subproblem objective evaluated at z.

    Equals ``-const`` inside the l1-ball ``||z - c||_1 <= gamma`` and
    ``OUTSIDE`` elsewhere.  With ``const`` dropped (as for a pure
    ``<c,u> + gamma ||u||_inf``) this is 0 on the ball.
    """
    return side_oracle(inst, side, anchor).conj(z)


def ball_membership(c, gamma, z, tol=CONJ_TOL) -> float:
    """Conjugate of u -> <c,u> + gamma ||u||_inf: 0 on the l1-ball, OUTSIDE off it."""
    return 0.0 if np.abs(np.asarray(z) - c).sum() <= gamma + tol else OUTSIDE


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------


def write_instance(inst: GameInstance, path) -> None:
    """Text format: ``m n density gamma_x gamma_y seed`` then ``i j value`` lines (0-based)."""
    with open(path, "w") as fh:
        fh.write(f"{inst.m} {inst.n} {inst.density:.17g} {inst.gamma_x:.17g} "
                 f"{inst.gamma_y:.17g} {inst.seed}\n")
        for i, j, v in zip(inst.rows, inst.cols, inst.vals):
            fh.write(f"{i} {j} {v:.17g}\n")


def read_instance(path) -> GameInstance:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty instance file")
    head = lines[0].split()
    if len(head) != 6:
        raise ConfigError(f"{path}:1: header needs 'm n density gamma_x gamma_y seed'")
    try:
        m, n = int(head[0]), int(head[1])
        density, gx, gy = float(head[2]), float(head[3]), float(head[4])
        seed = int(head[5])
    except ValueError as exc:
        raise ConfigError(f"{path}:1: bad header field ({exc})") from None
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError(f"{path}:{lineno}: expected 'i j value'")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad triplet ({exc})") from None
        if not (0 <= i < m and 0 <= j < n):
            raise ConfigError(f"{path}:{lineno}: index ({i}, {j}) outside {m}x{n}")
        if not math.isfinite(v):
            raise ConfigError(f"{path}:{lineno}: non-finite value")
        rows.append(i)
        cols.append(j)
        vals.append(v)
    return GameInstance(m, n, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                        np.array(vals, dtype=float), gx, gy, density=density, seed=seed)


def simplex_pair(inst: GameInstance):
    return SimplexIndicator(inst.n), SimplexIndicator(inst.m)


def to_saddle_instance(inst: GameInstance):
    """Wrap a game as a :class:`~pdbundle.saddle.SaddleInstance` with exact evaluators."""
    from .saddle import SaddleInstance

    h1, h2 = simplex_pair(inst)
    gx, gy = inst.gamma_x, inst.gamma_y

    def batch_x(U, y):
        return U @ inst.ATy(y) + gx * np.abs(U).max(axis=1) - gy * float(np.abs(y).max())

    def batch_y(x, V):
        return V @ inst.Ax(x) + gx * float(np.abs(x).max()) - gy * np.abs(V).max(axis=1)

    return SaddleInstance(
        value=inst.value, grad_x=inst.grad_x, grad_y=inst.grad_y, h1=h1, h2=h2,
        M=inst.M, D=2.0,
        phi_exact=lambda x: phi_eval(inst, x), psi_exact=lambda y: psi_eval(inst, y),
        x_oracle=lambda y: side_oracle(inst, "x", y), y_oracle=lambda x: side_oracle(inst, "y", x),
        value_batch_x=batch_x, value_batch_y=batch_y, game=inst,
    )
