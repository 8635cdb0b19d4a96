import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdbundle.core import AffineOracle, LinfLinearOracle, SimplexIndicator, ZeroComposite
from pdbundle.errors import InfeasibleDualError, UsageError
from pdbundle.harness.checks import rate_residuals
from pdbundle.pdcp import (PdcpConfig, certificate_value, gap_certificate, pdcp_run, phi_lam)

from conftest import game_subproblem

SCHEMES = ("one-cut", "two-cuts", "multi-cuts")


@pytest.mark.parametrize("scheme", SCHEMES)
@settings(max_examples=20)
@given(seed=st.integers(0, 10**6), loglam=st.floats(-2, 1))
def test_every_iterate_is_certified(scheme, seed, loglam):
    f, h, x0, M = game_subproblem(seed % 40, n=8)
    lam = 10.0 ** loglam
    res = pdcp_run(f, h, x0, lam, PdcpConfig(scheme=scheme, epsilon=1e-8, max_iters=40,
                                             record_iterates=True))
    for st_ in res.trace:
        cert = certificate_value(f, h, x0, lam, st_.tilde, st_.s)
        assert cert <= st_.t + 1e-9
        # weak duality: the certificate is a gap, hence nonnegative
        assert cert >= -1e-9
    assert rate_residuals(res.trace, lam, M) <= 1e-12


@pytest.mark.parametrize("scheme", ["two-cuts", "multi-cuts"])
@pytest.mark.parametrize("seed", range(5))
def test_hat_and_step_bounds(scheme, seed):
    f, h, x0, M = game_subproblem(seed, n=10)
    lam = 0.3
    res = pdcp_run(f, h, x0, lam, PdcpConfig(scheme=scheme, epsilon=1e-9, max_iters=80,
                                             track_hat=True))
    for st_ in res.trace:
        assert st_.hat_t <= 16 * lam * M * M / (st_.j + 1) + 1e-12
        if st_.j > 1:
            assert st_.step_norm <= 2 * lam * M + 1e-12


@pytest.mark.parametrize("scheme", SCHEMES)
def test_converges_and_certifies(scheme):
    f, h, x0, _ = game_subproblem(1, n=10)
    res = pdcp_run(f, h, x0, 0.5, PdcpConfig(scheme=scheme, epsilon=1e-4))
    assert res.converged
    assert res.t <= 1e-4
    assert gap_certificate(res, f, h) <= res.t + 1e-12
    assert res.iters == len(res.trace)
    assert res.best_t <= res.t


def test_affine_f_is_solved_in_one_step():
    # the first cut is exact, so x_1 is the prox point and t_1 = 0
    c = np.array([0.3, -0.1, 0.7])
    f = AffineOracle(c)
    h = SimplexIndicator(3)
    x0 = np.full(3, 1 / 3)
    for scheme in SCHEMES:
        res = pdcp_run(f, h, x0, 0.4, PdcpConfig(scheme=scheme, epsilon=1e-12))
        assert res.iters == 1
        assert abs(res.t) <= 1e-15
        assert np.allclose(res.tilde, h.prox(x0, c, 0.4))


def test_grid_oracle_for_prox_value():
    # phi^lam(x~) approaches min phi^lam from above; compare with a dense 1-D search
    f = LinfLinearOracle(np.array([0.4, -0.2]), 0.3)
    h = SimplexIndicator(2)
    x0 = np.array([0.9, 0.1])
    lam = 0.8
    res = pdcp_run(f, h, x0, lam, PdcpConfig(scheme="two-cuts", epsilon=1e-10))
    ts = np.linspace(0, 1, 1_000_001)
    U = np.stack([ts, 1 - ts], axis=1)
    vals = U @ f.c + 0.3 * np.abs(U).max(axis=1) + ((U - x0) ** 2).sum(axis=1) / (2 * lam)
    best = vals.min()
    assert res.m <= best + 1e-12
    assert phi_lam(f, h, x0, lam, res.tilde) - best <= 1e-9


def test_min_iters_and_budget():
    f, h, x0, _ = game_subproblem(2, n=6)
    res = pdcp_run(f, h, x0, 0.1, PdcpConfig(scheme="one-cut", epsilon=1e3, min_iters=7))
    assert res.iters == 7 and res.converged
    res = pdcp_run(f, h, x0, 0.1, PdcpConfig(scheme="one-cut", epsilon=1e-14, max_iters=5))
    assert res.iters == 5 and not res.converged


def test_best_iterate_rule_is_monotone():
    f, h, x0, _ = game_subproblem(4, n=8)
    res = pdcp_run(f, h, x0, 0.3, PdcpConfig(scheme="two-cuts", epsilon=1e-7, max_iters=60,
                                             tilde_rule="best-iterate"))
    vals = [s.phi_tilde for s in res.trace]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_hat_rule_output():
    f, h, x0, _ = game_subproblem(5, n=8)
    res = pdcp_run(f, h, x0, 0.3, PdcpConfig(scheme="two-cuts", epsilon=1e-4, gap_rule="hat"))
    assert res.converged and res.hat_t <= 1e-4
    assert res.output is res.hat and res.output_gap == res.hat_t
    assert certificate_value(f, h, x0, 0.3, res.hat, res.s) <= res.hat_t + 1e-10


def test_counters():
    f, h, x0, _ = game_subproblem(6, n=6)
    res = pdcp_run(f, h, x0, 0.3, PdcpConfig(scheme="one-cut", epsilon=1e-5))
    # one-cut: one prox per iteration; one cut plus one phi evaluation per iteration
    assert res.prox_calls == res.iters
    assert res.oracle_calls == 1 + res.iters + (res.iters - 1)


def test_config_and_input_errors():
    with pytest.raises(UsageError):
        PdcpConfig(scheme="four-cuts")
    with pytest.raises(UsageError):
        PdcpConfig(epsilon=0.0)
    with pytest.raises(UsageError):
        PdcpConfig(max_iters=0)
    with pytest.raises(UsageError):
        PdcpConfig(scheme="one-cut", gap_rule="hat")
    with pytest.raises(UsageError):
        PdcpConfig(tilde_rule="nearest")
    f, h, x0, _ = game_subproblem(0, n=4)
    with pytest.raises(UsageError):
        pdcp_run(f, h, x0, -1.0, PdcpConfig())
    with pytest.raises(UsageError):
        pdcp_run(f, h, np.array([2.0, 0, 0, 0]), 1.0, PdcpConfig())
    with pytest.raises(InfeasibleDualError):
        certificate_value(f, h, x0, 1.0, x0, np.full(4, 1e6))


def test_unbounded_composite():
    f = LinfLinearOracle(np.array([1.0, -1.0]), 0.5)
    h = ZeroComposite(2)
    x0 = np.zeros(2)
    res = pdcp_run(f, h, x0, 0.2, PdcpConfig(scheme="multi-cuts", epsilon=1e-8))
    assert res.converged
    assert gap_certificate(res, f, h) <= res.t + 1e-12
    assert math.isfinite(res.m)
