"""Single benchmark runs on a matrix-game instance, logged to CSV.

The saddle methods (cs-spp, pb-spp-*) solve the game itself.  The
single-problem methods (pdpb, pds, cg) solve the x-player subproblem
``min_{u in simplex} f(u, y_ref)`` with ``y_ref`` the uniform mixed strategy,
which has an exact conjugate and therefore an exact gap.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..cg import cg_run, psi_value
from ..matrix_game import GameInstance, generate_instance, read_instance, side_oracle, to_saddle_instance
from ..pdcp import PdcpConfig, phi_lam
from ..pdpb import averaged_gap, cycle_bound, pdpb_run, pds_run
from ..saddle import LogRecord, cs_spp_run, pb_spp_run
from .config import RunConfig

CSV_HEADER = ("method", "outer_iter", "total_inner_iters", "prox_evals", "oracle_calls",
              "elapsed_seconds", "gap")
CG_DEFAULT_ITERS = 10_000


@dataclass
class RunRecord:
    method: str
    outer_iter: int
    total_inner_iters: int
    prox_evals: int
    oracle_calls: int
    elapsed_seconds: float
    gap: float

    def row(self):
        return [self.method, str(self.outer_iter), str(self.total_inner_iters),
                str(self.prox_evals), str(self.oracle_calls), f"{self.elapsed_seconds:.6f}",
                f"{self.gap:.17g}"]


@dataclass
class RunOutcome:
    path: Path
    records: list = field(default_factory=list)
    converged: bool = False
    result: object = None


def load_instance(cfg: RunConfig) -> GameInstance:
    if cfg.instance:
        return read_instance(cfg.instance)
    return generate_instance(cfg.m, cfg.n, cfg.density, cfg.gamma_x, cfg.gamma_y, cfg.seed)


def default_pdpb_lam(M: float, eps_bar: float, d0: float = math.sqrt(2.0)) -> float:
    """Geometric midpoint of the admissible range [sqrt(eps d0)/M^1.5, 2 d0^2/eps]."""
    lo = math.sqrt(eps_bar * d0) / M ** 1.5
    hi = 2.0 * d0 ** 2 / eps_bar
    return math.sqrt(lo * hi)


class _Writer:
    def __init__(self, path: Path, label: str):
        self.path = path
        self.label = label
        self.records = []
        self.t0 = time.monotonic()
        path.parent.mkdir(parents=True, exist_ok=True)
        self.fh = open(path, "w", newline="")
        self.csv = csv.writer(self.fh, lineterminator="\n")
        self.csv.writerow(CSV_HEADER)

    def emit(self, outer, inner, prox, oracle, gap):
        rec = RunRecord(self.label, int(outer), int(inner), int(prox), int(oracle),
                        time.monotonic() - self.t0, float(gap))
        self.records.append(rec)
        self.csv.writerow(rec.row())
        self.fh.flush()

    def log(self, rec: LogRecord):
        self.emit(rec.outer_iter, rec.total_inner_iters, rec.prox_evals, rec.oracle_calls, rec.gap)

    def close(self):
        self.fh.close()


def run_experiment(cfg: RunConfig, path=None) -> RunOutcome:
    """Run ``cfg`` and write its CSV; deterministic apart from elapsed time."""
    meth = cfg.parsed_method
    game = load_instance(cfg)
    path = Path(path) if path is not None else cfg.output_path()
    writer = _Writer(path, meth.label)
    cadence = cfg.cadence()
    eps = cfg.eps_bar
    try:
        if meth.kind == "cs-spp" or meth.kind.startswith("pb-spp"):
            inst = to_saddle_instance(game)
            x0 = np.full(game.n, 1.0 / game.n)
            y0 = np.full(game.m, 1.0 / game.m)
            M, D = inst.M, inst.D
            if meth.kind == "cs-spp":
                lam = cfg.lam if cfg.lam is not None else eps / (32.0 * M * M)
                budget = cfg.max_iters
                if budget is None:
                    budget = int(math.ceil(128.0 * M * M * D * D / eps ** 2))
                res = cs_spp_run(inst, x0, y0, lam, budget, eps_target=eps, log_every=cadence,
                                 logger=writer.log)
            else:
                scheme = {"pb-spp-1cut": "one-cut", "pb-spp-2cut": "two-cuts",
                          "pb-spp-multicut": "multi-cuts"}[meth.kind]
                budget = cfg.max_iters
                if budget is None:
                    budget = int(math.ceil(64.0 * M * M * D * D / eps ** 2))
                res = pb_spp_run(inst, x0, y0, eps, lam1=cfg.lam1, scheme=scheme,
                                 max_outer=budget, max_cuts=meth.max_cuts,
                                 improved=cfg.improved, log_every=cadence, logger=writer.log)
            return RunOutcome(path, writer.records, bool(res.converged), res)

        h = to_saddle_instance(game).h1
        f = side_oracle(game, "x", np.full(game.m, 1.0 / game.m))
        x0 = np.full(game.n, 1.0 / game.n)
        M = game.M
        if meth.kind == "cg":
            lam = cfg.lam if cfg.lam is not None else default_pdpb_lam(M, eps)
            z1 = f.subgrad(x0)
            writer.emit(0, 0, 1, 1, phi_lam(f, h, x0, lam, x0) + psi_value(f, h, x0, lam, z1))
        else:
            writer.emit(0, 0, 0, 1, averaged_gap(f, h, x0, f.subgrad(x0)))
        if meth.kind == "pdpb":
            lam = cfg.lam if cfg.lam is not None else default_pdpb_lam(M, eps)
            budget = cfg.max_iters
            if budget is None:
                budget = cycle_bound(math.sqrt(2.0), lam, eps)

            def on_cycle(state, res):
                k = state.k
                if k % cadence == 0 or state.converged or k == budget:
                    writer.emit(k, state.total_inner_iters, state.prox_calls, state.oracle_calls,
                                state.gap_history[-1][1])

            pcfg = PdcpConfig(scheme=cfg.scheme, epsilon=eps, max_cuts=10,
                              gap_rule="hat" if cfg.improved else "t")
            res = pdpb_run(f, h, x0, lam, eps, pcfg, max_cycles=budget, target=eps,
                           keep_outputs=False, callback=on_cycle)
            return RunOutcome(path, writer.records, res.converged, res)
        if meth.kind == "pds":
            lam = cfg.lam if cfg.lam is not None else eps / (16.0 * M * M)
            budget = cfg.max_iters
            if budget is None:
                budget = int(math.ceil(256.0 * M * M * 2.0 / eps ** 2))
            res = pds_run(f, h, x0, lam, budget, target=eps, gap_every=cadence,
                          callback=lambda k, gap: writer.emit(k, k, k, k, gap))
            return RunOutcome(path, writer.records, res.converged, res)
        # cg on the prox subproblem centred at the uniform point
        budget = cfg.max_iters if cfg.max_iters is not None else CG_DEFAULT_ITERS

        def on_step(state, step):
            j = step.j
            if j % cadence == 0 or j == budget or step.wolfe <= eps:
                writer.emit(j, j, state.prox_calls, state.oracle_calls, step.wolfe)

        res = cg_run(f, h, x0, lam, budget, rule=meth.rule, target=eps, callback=on_step)
        return RunOutcome(path, writer.records, res.converged, res)
    finally:
        writer.close()
