"""Compiled inner loops for the matrix-game CS-SPP benchmark.

CS-SPP at the benchmark tolerance needs on the order of 1e9 steps, far out
of reach for a numpy loop.  These kernels perform the identical recursion
(sparse mat-vecs in triplet order, uniform-weight l_inf subgradient,
Euclidean simplex projection) inside numba.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def project_simplex_inplace(v, out):
    """Michelot's projection onto the unit simplex.

    In exact arithmetic the active count never grows; under rounding it can
    tick back up near ties, so the loop stops as soon as it fails to shrink.
    """
    n = v.size
    total = 0.0
    for i in range(n):
        total += v[i]
    theta = (total - 1.0) / n
    count = n
    while True:
        s = 0.0
        c = 0
        for i in range(n):
            if v[i] > theta:
                s += v[i]
                c += 1
        if c >= count:
            break
        theta = (s - 1.0) / c
        count = c
    for i in range(n):
        d = v[i] - theta
        out[i] = d if d > 0.0 else 0.0


@nb.njit(cache=True)
def add_linf_subgradient(x, weight, out, active_tol):
    n = x.size
    top = 0.0
    for i in range(n):
        a = abs(x[i])
        if a > top:
            top = a
    if top == 0.0:
        return
    cut = top * (1.0 - active_tol)
    cnt = 0
    for i in range(n):
        if abs(x[i]) >= cut:
            cnt += 1
    w = weight / cnt
    for i in range(n):
        if x[i] >= cut:
            out[i] += w
        elif -x[i] >= cut:
            out[i] -= w


@nb.njit(cache=True)
def exact_fz_value(z, gamma):
    zs = np.sort(z)
    n = zs.size
    acc = gamma + zs[0]
    prev = acc
    for j in range(1, n):
        acc += zs[j]
        cur = acc / (j + 1)
        if prev <= cur:
            return prev
        prev = cur
    return prev


@nb.njit(cache=True)
def game_gap(rows, cols, vals, m, n, gx, gy, x, y):
    """phi(x) - psi(y) for the regularized game."""
    ax = np.zeros(m)
    aty = np.zeros(n)
    for t in range(vals.size):
        ax[rows[t]] += vals[t] * x[cols[t]]
        aty[cols[t]] += vals[t] * y[rows[t]]
    xinf = np.max(np.abs(x))
    yinf = np.max(np.abs(y))
    phi = gx * xinf - exact_fz_value(-ax, gy)
    psi = -gy * yinf + exact_fz_value(aty, gx)
    return phi - psi


@nb.njit(cache=True)
def cs_spp_steps(indptr, cols, vals, m, n, gx, gy, x, y, sum_x, sum_y, lam, steps, active_tol):
    """Advance CS-SPP by ``steps`` iterations in place, accumulating iterate sums.

    ``indptr``/``cols``/``vals`` is the row-major (CSR) layout of the triplets,
    so both mat-vecs accumulate in triplet order.  Rows with ``y_i = 0``
    contribute exact zeros to ``A^T y`` and are skipped.
    """
    gxv = np.zeros(n)
    gyv = np.zeros(m)
    vx = np.zeros(n)
    vy = np.zeros(m)
    for _ in range(steps):
        gxv[:] = 0.0
        for i in range(m):
            yi = y[i]
            acc = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                c = cols[p]
                acc += vals[p] * x[c]
                if yi != 0.0:
                    gxv[c] += vals[p] * yi
            gyv[i] = acc
        add_linf_subgradient(x, gx, gxv, active_tol)
        add_linf_subgradient(y, -gy, gyv, active_tol)
        for i in range(n):
            vx[i] = x[i] - lam * gxv[i]
        for i in range(m):
            vy[i] = y[i] + lam * gyv[i]
        project_simplex_inplace(vx, x)
        project_simplex_inplace(vy, y)
        for i in range(n):
            sum_x[i] += x[i]
        for i in range(m):
            sum_y[i] += y[i]
