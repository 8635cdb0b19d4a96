import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdbundle.core import OUTSIDE, linf_subgradient
from pdbundle.errors import ConfigError, UsageError
from pdbundle.matrix_game import (GameInstance, ball_membership, conj_membership, exact_fz,
                                  fz_sequence, generate_instance, phi_psi_eval, read_instance,
                                  side_oracle, simplex_prox, write_instance)


def subset_min(z, gamma):
    """min over x in the simplex of <z,x> + gamma ||x||_inf by enumerating uniform-on-subset vertices."""
    n = len(z)
    return min((gamma + sum(z[i] for i in S)) / len(S)
               for r in range(1, n + 1) for S in itertools.combinations(range(n), r))


@given(arrays(float, st.integers(1, 6), elements=st.floats(-20, 20)), st.floats(0, 5))
def test_exact_fz_matches_subset_enumeration(z, gamma):
    sol = exact_fz(z, gamma)
    assert sol.value == pytest.approx(subset_min(z, gamma), abs=1e-12)
    assert sol.x.sum() == pytest.approx(1.0)
    assert float(z @ sol.x + gamma * sol.x.max()) == pytest.approx(sol.value, abs=1e-12)
    # S is non-increasing up to j* and non-decreasing after it
    S = sol.S
    j = sol.j_star
    assert np.all(np.diff(S[:j]) <= 1e-12)
    assert np.all(np.diff(S[j - 1:]) >= -1e-12)


@pytest.mark.parametrize("z,gamma,x,val,j", [
    ([3.0, 1.0, 2.0], 0.0, [0, 1, 0], 1.0, 1),
    ([1.0, 1.0], 2.0, [0.5, 0.5], 2.0, 2),
    ([0.0, 0.0, 0.0], 3.0, [1 / 3] * 3, 1.0, 3),
])
def test_exact_fz_examples(z, gamma, x, val, j):
    sol = exact_fz(np.array(z), gamma)
    assert np.allclose(sol.x, x) and sol.value == pytest.approx(val) and sol.j_star == j


def test_exact_fz_ties_pick_smaller_index():
    # S_1 = S_2 = 1: the first index with S_j <= S_{j+1}
    sol = exact_fz(np.array([1.0, 1.0]), 0.0)
    assert sol.j_star == 1
    with pytest.raises(UsageError):
        exact_fz(np.zeros(2), -1.0)
    order, S = fz_sequence(np.array([2.0, 0.0]), 1.0)
    assert list(order) == [1, 0] and np.allclose(S, [1.0, 1.5])


def test_phi_psi_hand_examples():
    g = GameInstance.from_dense(np.eye(2))
    assert phi_psi_eval(g, np.full(2, 0.5), np.full(2, 0.5)) == pytest.approx((0.5, 0.5))
    g = GameInstance.from_dense([[0.0, 1.0], [1.0, 0.0]])
    assert phi_psi_eval(g, np.array([1.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx((1.0, 0.0))
    with pytest.raises(UsageError):
        phi_psi_eval(g, np.array([0.7, 0.7]), np.array([1.0, 0.0]))


@pytest.mark.parametrize("seed", range(5))
def test_phi_psi_against_subset_enumeration(seed):
    g = generate_instance(5, 4, 0.6, 0.3, 0.2, seed)
    rng = np.random.default_rng(seed)
    A = g.dense()
    for _ in range(10):
        x = rng.dirichlet(np.ones(4))
        y = rng.dirichlet(np.ones(5))
        phi, psi = phi_psi_eval(g, x, y)
        phi_ref = g.gamma_x * x.max() - subset_min(-(A @ x), g.gamma_y)
        psi_ref = -g.gamma_y * y.max() + subset_min(A.T @ y, g.gamma_x)
        assert phi == pytest.approx(phi_ref, abs=1e-12)
        assert psi == pytest.approx(psi_ref, abs=1e-12)
        # phi(x) >= f(x, y) >= psi(y)
        assert phi >= g.value(x, y) - 1e-12 >= psi - 2e-12


def test_linf_subgradient_examples():
    assert np.allclose(linf_subgradient(np.array([1.0, 0, 0])), [1, 0, 0])
    assert np.allclose(linf_subgradient(np.array([0.5, 0.5])), [0.5, 0.5])
    g = linf_subgradient(np.array([-2.0, 2.0]))
    assert np.allclose(g, [-0.5, 0.5])
    rng = np.random.default_rng(0)
    for u in rng.normal(size=(100, 2)) * 5:
        assert np.abs(u).max() >= 2.0 + g @ (u - np.array([-2.0, 2.0])) - 1e-12


def test_simplex_prox_examples():
    assert np.allclose(simplex_prox(np.full(3, 0.5), np.zeros(3), 1.0), np.full(3, 1 / 3))
    assert np.allclose(simplex_prox(np.array([1.0, 0, 0]), np.zeros(3), 1.0), [1, 0, 0])
    assert np.allclose(simplex_prox(np.array([2.0, 0, 0]), np.zeros(3), 1.0), [1, 0, 0])
    assert np.allclose(simplex_prox(np.zeros(3), np.array([-1.0, 0, 0]), 2.0), [1, 0, 0])
    with pytest.raises(UsageError):
        simplex_prox(np.zeros(3), np.zeros(3), 0.0)


def test_conjugate_membership():
    g = generate_instance(3, 3, 1.0, 0.4, 0.0, 2)
    y = np.array([0.2, 0.3, 0.5])
    c = g.ATy(y)
    assert conj_membership(g, "x", y, c + 0.4 * np.eye(3)[0]) == 0.0
    assert conj_membership(g, "x", y, c + 0.8 * np.eye(3)[0]) == OUTSIDE
    # gamma = 0 on the y side: only z = c is a member; the value is minus the constant term
    x = np.array([0.5, 0.5, 0.0])
    cy = -g.Ax(x)
    assert conj_membership(g, "y", x, cy) == 0.4 * 0.5
    assert conj_membership(g, "y", x, cy + 1e-6) == OUTSIDE
    assert ball_membership(c, 0.4, c + 0.2) == OUTSIDE
    with pytest.raises(UsageError):
        side_oracle(g, "z", y)


def test_conjugate_against_grid_in_2d():
    # sup over a box of <z,u> - <c,u> - gamma |u|_inf: 0 inside the ball, grows with the box outside
    c, gamma = np.array([0.3, -0.2]), 0.5
    ts = np.linspace(-50, 50, 1001)
    U = np.stack(np.meshgrid(ts, ts), axis=-1).reshape(-1, 2)
    for z, member in (([0.3, -0.2], True), ([0.7, -0.1], True), ([0.8, 0.1], False)):
        vals = U @ (np.array(z) - c) - gamma * np.abs(U).max(axis=1)
        assert (ball_membership(c, gamma, np.array(z)) == 0.0) is member
        assert bool(abs(vals.max()) < 1e-9) is member


def test_generation_is_deterministic_and_sparse():
    a = generate_instance(100, 100, 0.05, 0.05, 0.05, 7)
    b = generate_instance(100, 100, 0.05, 0.05, 0.05, 7)
    assert np.array_equal(a.rows, b.rows) and np.array_equal(a.vals, b.vals)
    assert 300 < a.vals.size < 700
    one = generate_instance(1, 1, 1.0, 0.0, 0.0, 3)
    assert one.vals.size == 1
    with pytest.raises(UsageError):
        generate_instance(2, 2, 0.0, 0.1, 0.1, 0)
    with pytest.raises(UsageError):
        generate_instance(0, 2, 0.5, 0.1, 0.1, 0)
    with pytest.raises(UsageError):
        GameInstance.from_dense(np.eye(2), gamma_x=-1.0)


@pytest.mark.parametrize("seed", range(3))
def test_lipschitz_bounds_hold_at_samples(seed):
    g = generate_instance(20, 15, 0.2, 0.05, 0.1, seed)
    rng = np.random.default_rng(seed)
    A = g.dense()
    assert g.M_x <= np.linalg.norm(A, axis=1).max() + g.gamma_x + 1e-12
    assert g.M_y <= np.linalg.norm(A, axis=0).max() + g.gamma_y + 1e-12
    for _ in range(200):
        x = rng.dirichlet(np.ones(15) * 0.3)
        y = rng.dirichlet(np.ones(20) * 0.3)
        assert np.linalg.norm(g.grad_x(x, y)) <= g.M_x + 1e-12
        assert np.linalg.norm(g.grad_y(x, y)) <= g.M_y + 1e-12
    assert g.M == max(g.M_x, g.M_y)


def test_instance_file_roundtrip(tmp_path):
    g = generate_instance(12, 9, 0.3, 0.05, 0.07, 4)
    p = tmp_path / "g.txt"
    write_instance(g, p)
    h = read_instance(p)
    assert (h.m, h.n, h.gamma_x, h.gamma_y, h.seed) == (12, 9, 0.05, 0.07, 4)
    assert np.array_equal(g.vals, h.vals) and np.array_equal(g.cols, h.cols)


@pytest.mark.parametrize("text,where", [
    ("", "empty"),
    ("2 2 0.5 0.1\n", ":1:"),
    ("2 2 0.5 0.1 0.1 x\n", ":1:"),
    ("2 2 0.5 0.1 0.1 0\n0 1\n", ":2:"),
    ("2 2 0.5 0.1 0.1 0\n0 1 2.0\n5 0 1.0\n", ":3:"),
    ("2 2 0.5 0.1 0.1 0\n0 1 nan\n", ":2:"),
    ("2 2 0.5 0.1 0.1 0\n0 b 1.0\n", ":2:"),
])
def test_malformed_instance_files(tmp_path, text, where):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(ConfigError, match=where):
        read_instance(p)
