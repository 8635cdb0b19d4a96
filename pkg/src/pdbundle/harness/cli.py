"""Command-line entry point: ``pdbundle generate|run|check|report``.

Exit codes: 0 success, 1 configuration error, 2 check failure, 3 budget
exhausted before the target gap.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError, UsageError
from ..matrix_game import generate_instance, write_instance
from .checks import SUITES, check_suite
from .config import OUTPUT_ENV, RunConfig, load_config
from .experiment import run_experiment
from .report import report

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_BUDGET = 0, 1, 2, 3


def _int_list(text: str):
    """``"0-49"`` or ``"1,3,5"`` or ``""``."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _add_run_flags(p):
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--method", help="cs-spp, pb-spp-1cut, pb-spp-2cut, pb-spp-multicut(k), "
                                    "pdpb, pds, cg(open-loop|alpha|beta)")
    p.add_argument("--instance", help="instance file written by 'generate'")
    for name, kind in (("m", int), ("n", int), ("density", float), ("gamma-x", float),
                       ("gamma-y", float), ("seed", int), ("eps-bar", float), ("lam", float),
                       ("lam1", float), ("log-cadence", int), ("max-iters", int)):
        p.add_argument(f"--{name}", type=kind)
    p.add_argument("--scheme", help="bundle scheme of pdpb")
    p.add_argument("--improved", action="store_const", const=True,
                   help="stop cycles on the weighted-average gap")
    p.add_argument("--output", help=f"CSV path (default: ${OUTPUT_ENV} or the working dir)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdbundle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random sparse matrix game")
    g.add_argument("--m", type=int, default=100)
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--density", type=float, default=0.05)
    g.add_argument("--gamma-x", type=float, default=0.05)
    g.add_argument("--gamma-y", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run one method and log a CSV")
    _add_run_flags(r)

    c = sub.add_parser("check", help="run property suites")
    c.add_argument("--suite", default="all", choices=SUITES + ("all",))
    c.add_argument("--seeds", default="0-9", help="e.g. 0-49 or 1,2,3")
    c.add_argument("--dims", default="5,10")
    c.add_argument("--json", help="write the machine-readable report here")

    rp = sub.add_parser("report", help="summarize run CSVs into plot-ready series")
    rp.add_argument("csv", nargs="+")
    rp.add_argument("--out-dir", help="where to write summary.csv and series_*.csv")
    return parser


def _cmd_generate(args) -> int:
    inst = generate_instance(args.m, args.n, args.density, args.gamma_x, args.gamma_y, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_instance(inst, args.out)
    print(f"wrote {args.out}: {inst.m}x{inst.n}, {inst.vals.size} nonzeros, M={inst.M:.6g}")
    return EXIT_OK


def _cmd_run(args) -> int:
    keys = ("method", "instance", "m", "n", "density", "gamma_x", "gamma_y", "seed", "eps_bar",
            "lam", "lam1", "log_cadence", "max_iters", "scheme", "improved", "output")
    overrides = {k: getattr(args, k) for k in keys}
    cfg: RunConfig = load_config(args.config, overrides)
    out = run_experiment(cfg)
    last = out.records[-1]
    status = "converged" if out.converged else "budget exhausted"
    print(f"{last.method}: {status} after {last.outer_iter} outer / {last.total_inner_iters} "
          f"inner iterations, gap {last.gap:.3e}, {last.elapsed_seconds:.2f}s -> {out.path}")
    return EXIT_OK if out.converged else EXIT_BUDGET


def _cmd_check(args) -> int:
    seeds = _int_list(args.seeds)
    dims = _int_list(args.dims)
    suites = SUITES if args.suite == "all" else (args.suite,)
    ok = True
    blobs = []
    for name in suites:
        rep = check_suite(name, seeds, dims)
        blobs.append(rep.to_json())
        checks = sorted({e.check for e in rep.entries})
        for chk in checks:
            worst = rep.max_residual(chk)
            tol = next(e.tol for e in rep.entries if e.check == chk)
            print(f"{name:<13} {chk:<28} max residual {worst:+.3e} (tol {tol:.0e})")
        for e in rep.failures:
            print(f"FAIL {name} {e.check} seed={e.seed} dim={e.dim} residual={e.residual:.3e}",
                  file=sys.stderr)
        if not rep.entries:
            print(f"{name:<13} (no seeds: vacuous pass)")
        ok = ok and rep.passed
    if args.json:
        Path(args.json).write_text("[\n" + ",\n".join(blobs) + "\n]\n")
    return EXIT_OK if ok else EXIT_CHECK


def _cmd_report(args) -> int:
    rep = report(args.csv, args.out_dir)
    print(rep.format_table())
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"generate": _cmd_generate, "run": _cmd_run, "check": _cmd_check,
               "report": _cmd_report}[args.command]
    try:
        return handler(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
