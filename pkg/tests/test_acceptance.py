"""Acceptance suite: one test group per criterion, each recording a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
are produced; a per-criterion summary is printed at the end of any session
that collected this module.  The benchmark-scale runs are marked ``slow``
(about 1.5 hours in total on one core, dominated by CS-SPP) and run by
default; deselect them with ``-m "not slow"``.
"""

import math
import time

import numpy as np
import pytest

from pdbundle._kernels import project_simplex_inplace
from pdbundle.cg import duality_check
from pdbundle.core import project_simplex
from pdbundle.harness.checks import brute_force_fz
from pdbundle.harness.config import RunConfig
from pdbundle.harness.experiment import run_experiment
from pdbundle.matrix_game import exact_fz, generate_instance, to_saddle_instance
from pdbundle.pdcp import PdcpConfig, certificate_value, pdcp_run
from pdbundle.saddle import cs_spp_run, pb_spp_run

from conftest import game_subproblem, record_criterion

SCHEMES = ("one-cut", "two-cuts", "multi-cuts")
PB_METHODS = ("pb-spp-1cut", "pb-spp-2cut", "pb-spp-multicut(10)", "pb-spp-multicut(20)")
BENCHMARK = dict(m=100, n=100, density=0.05, gamma_x=0.05, gamma_y=0.05, seed=0, eps_bar=1e-4)


def uniform(k):
    return np.full(k, 1.0 / k)


def desk_game(seed):
    return to_saddle_instance(generate_instance(20, 20, 0.2, 0.05, 0.05, seed))


# -- 1: duality between the one-cut cycle and open-loop CG ------------------------


def test_criterion_1_duality_equivalence():
    rng = np.random.default_rng(11)
    start = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        n = 2 + seed % 9
        f, h, x0, _ = game_subproblem(seed, n=n)
        lam = 10 ** rng.uniform(-2, 1)
        rep = duality_check(f, h, x0, lam, 100)
        assert rep.iters == 100
        worst = max(worst, rep.max_deviation)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 10.0
    record_criterion(1, "duality", ok, f"max deviation {worst:.2e} over 50 instances, {elapsed:.1f}s")
    assert worst <= 1e-10
    assert elapsed < 10.0


# -- 2: gap certificate along every recorded trace --------------------------------


def test_criterion_2_gap_certificate():
    worst, count = -math.inf, 0
    for seed in range(20):
        for side in ("x", "y"):
            f, h, x0, M = game_subproblem(seed, n=4 + seed % 7, side=side)
            lam = 0.05 * (1 + seed % 5)
            for scheme in SCHEMES:
                cfg = PdcpConfig(scheme=scheme, epsilon=1e-9, max_iters=150, record_iterates=True)
                res = pdcp_run(f, h, x0, lam, cfg)
                for st in res.trace:
                    cert = certificate_value(f, h, x0, lam, st.tilde, st.s)
                    worst = max(worst, cert - st.t)
                    count += 1
    ok = worst <= 1e-8
    record_criterion(2, "certificate", ok, f"max excess {worst:.2e} over {count} iterates")
    assert ok


# -- 3: PDCP rate, hat rate and step bound ----------------------------------------


def test_criterion_3_pdcp_rate():
    rng = np.random.default_rng(3)
    rate = hat = step = -math.inf
    for seed in range(20):
        f, h, x0, M = game_subproblem(seed, n=10)
        lam = 10 ** rng.uniform(-2, 0.5)
        for scheme in SCHEMES:
            track = scheme != "one-cut"
            res = pdcp_run(f, h, x0, lam, PdcpConfig(scheme=scheme, epsilon=1e-9, max_iters=200,
                                                     track_hat=track))
            t1 = res.trace[0].t
            for st in res.trace:
                j = st.j
                rate = max(rate, st.t - (2 * t1 / (j * (j + 1)) + 16 * lam * M * M / (j + 1)))
                if track:
                    hat = max(hat, st.hat_t - 16 * lam * M * M / (j + 1))
                    if j > 1:
                        step = max(step, st.step_norm - 2 * lam * M)
    ok = rate <= 1e-12 and hat <= 1e-12 and step <= 1e-12
    record_criterion(3, "rate", ok, f"worst excess: rate {rate:.2e}, hat {hat:.2e}, step {step:.2e}")
    assert ok


# -- 4: exact subsolver -----------------------------------------------------------


def test_criterion_4_exact_subsolver():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    mismatches, margin = 0, math.inf
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        z = rng.normal(size=n) * rng.choice([0.01, 1.0, 100.0])
        gamma = float(rng.uniform(0, 3)) * rng.choice([0.0, 1.0, 10.0])
        sol = exact_fz(z, gamma)
        if sol.value != brute_force_fz(z, gamma):
            mismatches += 1
        U = rng.dirichlet(np.ones(n), size=10_000)
        margin = min(margin, float(np.min(U @ z + gamma * U.max(axis=1)) - sol.value))
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and margin >= -1e-10 and elapsed < 5.0
    record_criterion(4, "exact_fz", ok, f"{mismatches} mismatches, worst margin {margin:.2e}, "
                     f"{elapsed:.1f}s")
    assert mismatches == 0
    assert margin >= -1e-10
    assert elapsed < 5.0


# -- 5: inexact proximal-point certificates -----------------------------------------


def _cert_worst(certs):
    return max(max(-c.eps - 1e-10, c.inclusion_residual, c.proximity_excess) for c in certs)


def test_criterion_5_cs_spp_certificates():
    # every step of a fixed-length run; see the ledger for the step count
    eps = 1e-2
    worst, steps = -math.inf, 0
    for seed in range(10):
        inst = desk_game(seed)
        lam = eps / (32 * inst.M ** 2)
        res = cs_spp_run(inst, uniform(20), uniform(20), lam, 10_000, certify="record",
                         samples=100, rng=np.random.default_rng(seed))
        assert all(c.sigma == 1.0 and c.delta == pytest.approx(8 * lam * lam * inst.M ** 2)
                   for c in res.certificates)
        worst = max(worst, _cert_worst(res.certificates))
        steps += len(res.certificates)
    ok = worst <= 1e-8
    record_criterion(5, "cs-spp", ok, f"worst residual {worst:.2e} over {steps} steps")
    assert ok


def test_criterion_5_pb_spp_certificates():
    eps = 1e-2
    worst, steps, bad = -math.inf, 0, []
    for seed in range(10):
        inst = desk_game(seed)
        res = pb_spp_run(inst, uniform(20), uniform(20), eps, certify="record", samples=100,
                         rng=np.random.default_rng(seed))
        assert res.converged
        for c in res.certificates:
            assert c.sigma == 0.0
            r = max(-c.eps - 1e-10, c.inclusion_residual, c.proximity_excess)
            if r > 1e-8:
                bad.append((seed, c.k))
        worst = max(worst, _cert_worst(res.certificates))
        steps += len(res.certificates)
    ok = worst <= 1e-8
    where = ", ".join(f"seed {s} k={k}" for s, k in bad[:6])
    record_criterion(5, "pb-spp", ok, f"worst residual {worst:.2e} over {steps} steps"
                     + (f"; violations at {where}" if bad else ""))
    assert ok


# -- 6 and 8: benchmark-scale runs ------------------------------------------------


@pytest.fixture(scope="module")
def benchmark_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("benchmark")
    runs = {}
    for method in PB_METHODS + ("cs-spp",):
        start = time.perf_counter()
        name = method.replace("(", "-").replace(")", "")
        res = run_experiment(RunConfig(method=method, **BENCHMARK), out / f"{name}.csv")
        runs[method] = (res, time.perf_counter() - start)
    return runs


@pytest.mark.slow
def test_criterion_6_termination(benchmark_runs):
    lines = []
    ok = True
    for method, (out, secs) in benchmark_runs.items():
        res = out.result
        done = bool(out.converged) and res.gap <= 1e-4
        ok &= done
        lines.append(f"{method} gap {res.gap:.2e} in {secs:.0f}s")
    record_criterion(6, "termination", ok, "; ".join(lines))
    assert ok


@pytest.mark.slow
def test_criterion_6_two_cuts_fewest_inner_iterations(benchmark_runs):
    inner = {m: benchmark_runs[m][0].result.total_inner_iters for m in PB_METHODS}
    ok = inner["pb-spp-2cut"] == min(inner.values())
    record_criterion(6, "ordering", ok, ", ".join(f"{m} {v}" for m, v in inner.items()))
    assert ok


@pytest.mark.slow
def test_criterion_6_ten_vs_twenty_cuts(benchmark_runs):
    a = benchmark_runs["pb-spp-multicut(10)"][0].result.total_inner_iters
    b = benchmark_runs["pb-spp-multicut(20)"][0].result.total_inner_iters
    rel = abs(a - b) / max(a, b)
    ok = rel <= 0.10
    record_criterion(6, "10 vs 20 cuts", ok, f"{a} vs {b}, relative difference {rel:.3%}")
    assert ok


def _trajectory_excess(res, inst, eps):
    lam1, M, D = res.lam1, inst.M, inst.D
    worst = -math.inf
    for rec in res.log:
        if rec.outer_iter == 0:
            continue
        k = rec.outer_iter
        bound = eps / 2 + 8 * lam1 * M * M / math.sqrt(k) + D * D / (2 * lam1 * math.sqrt(k)) + 1e-6
        worst = max(worst, rec.gap - bound)
    return worst


def test_criterion_8_trajectory_desk_scale():
    eps = 1e-2
    worst, logged = -math.inf, 0
    for seed in range(10):
        inst = desk_game(seed)
        for scheme in SCHEMES:
            res = pb_spp_run(inst, uniform(20), uniform(20), eps, scheme=scheme, log_every=1)
            worst = max(worst, _trajectory_excess(res, inst, eps))
            logged += len(res.log) - 1
    ok = worst <= 0
    record_criterion(8, "desk scale", ok, f"worst excess {worst:.2e} over {logged} logged steps")
    assert ok


@pytest.mark.slow
def test_criterion_8_trajectory_benchmark_scale(benchmark_runs):
    inst = to_saddle_instance(generate_instance(100, 100, 0.05, 0.05, 0.05, 0))
    worst, logged = -math.inf, 0
    for method in PB_METHODS:
        res = benchmark_runs[method][0].result
        worst = max(worst, _trajectory_excess(res, inst, 1e-4))
        logged += len(res.log) - 1
    ok = worst <= 0
    record_criterion(8, "benchmark scale", ok, f"worst excess {worst:.2e} over {logged} logged steps")
    assert ok


# -- 7: CS-SPP complexity envelope --------------------------------------------------


def test_criterion_7_cs_spp_envelope():
    eps = 1e-2
    start = time.perf_counter()
    lines, ok = [], True
    for seed in range(5):
        inst = desk_game(seed)
        lam = eps / (32 * inst.M ** 2)
        budget = math.ceil(128 * inst.M ** 2 * inst.D ** 2 / eps ** 2)
        res = cs_spp_run(inst, uniform(20), uniform(20), lam, budget, eps_target=eps,
                         log_every=1000)
        ok &= bool(res.converged) and res.gap <= eps and res.outer_iters <= budget
        lines.append(f"{res.outer_iters}/{budget}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60.0
    record_criterion(7, "envelope", ok, f"steps used/budget {', '.join(lines)}; {elapsed:.1f}s")
    assert ok


# -- 9: simplex projection ------------------------------------------------------------


def test_criterion_9_simplex_projection():
    rng = np.random.default_rng(9)
    worst = math.inf
    out = np.empty(0)
    for _ in range(100_000):
        n = int(rng.integers(1, 40))
        v = rng.normal(size=n) * 10 ** rng.uniform(-3, 2)
        if rng.random() < 0.2:
            v[: n // 2] = v[0]
        U = rng.dirichlet(np.ones(n), size=10)
        p = project_simplex(v)
        if out.size != n:
            out = np.empty(n)
        project_simplex_inplace(v, out)
        # <p - v, u - p> >= 0 for every feasible u
        worst = min(worst, float(np.min((U - p) @ (p - v))), float(np.min((U - out) @ (out - v))))
    ok = worst >= -1e-10
    record_criterion(9, "projection", ok, f"worst residual {worst:.2e} over 1e5 projections "
                     "(numpy and compiled)")
    assert ok
