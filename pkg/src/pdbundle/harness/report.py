"""Summaries and plot-ready series from run CSVs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from .experiment import CSV_HEADER

GAP_FLOOR = 1e-16
PANELS = {"time": "elapsed_seconds", "prox_evals": "prox_evals", "iterations": "outer_iter"}


class ReportParseError(ConfigError):
    """A run CSV does not follow the expected schema."""


@dataclass
class Series:
    method: str
    rows: list = field(default_factory=list)

    def column(self, name):
        return [r[name] for r in self.rows]

    def gaps(self):
        """Gap column clipped from below so it can be drawn on a log axis."""
        return [max(g, GAP_FLOOR) if not math.isnan(g) else g for g in self.column("gap")]


def read_run(path) -> list:
    """Parse one CSV into series keyed by method (a file normally holds one)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in CSV_HEADER:
            if col not in header:
                raise ReportParseError(f"{path}: missing column '{col}'")
        series = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                rec = {
                    "method": row["method"],
                    "outer_iter": int(row["outer_iter"]),
                    "total_inner_iters": int(row["total_inner_iters"]),
                    "prox_evals": int(row["prox_evals"]),
                    "oracle_calls": int(row["oracle_calls"]),
                    "elapsed_seconds": float(row["elapsed_seconds"]),
                    "gap": float(row["gap"]),
                }
            except (TypeError, ValueError) as exc:
                raise ReportParseError(f"{path}:{lineno}: {exc}") from None
            series.setdefault(rec["method"], Series(rec["method"])).rows.append(rec)
    return list(series.values())


@dataclass
class Report:
    series: list

    def summary(self) -> list:
        out = []
        for s in self.series:
            last = s.rows[-1] if s.rows else None
            if last is None:
                continue
            out.append({
                "method": s.method,
                "outer_iter": last["outer_iter"],
                "total_inner_iters": last["total_inner_iters"],
                "prox_evals": last["prox_evals"],
                "oracle_calls": last["oracle_calls"],
                "elapsed_seconds": last["elapsed_seconds"],
                "final_gap": last["gap"],
            })
        return out

    def panel(self, name: str) -> dict:
        """method -> (x values, clipped gaps) for one of time/prox_evals/iterations."""
        col = PANELS[name]
        return {s.method: (s.column(col), s.gaps()) for s in self.series}

    def format_table(self) -> str:
        rows = self.summary()
        head = f"{'method':<24}{'outer':>10}{'inner':>12}{'prox':>12}{'seconds':>11}{'gap':>12}"
        lines = [head]
        for r in rows:
            lines.append(f"{r['method']:<24}{r['outer_iter']:>10}{r['total_inner_iters']:>12}"
                         f"{r['prox_evals']:>12}{r['elapsed_seconds']:>11.2f}{r['final_gap']:>12.3e}")
        return "\n".join(lines)

    def write(self, out_dir) -> list:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        path = out_dir / "summary.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "outer_iter", "total_inner_iters", "prox_evals",
                        "oracle_calls", "elapsed_seconds", "final_gap"])
            for r in self.summary():
                w.writerow([r["method"], r["outer_iter"], r["total_inner_iters"], r["prox_evals"],
                            r["oracle_calls"], r["elapsed_seconds"], repr(r["final_gap"])])
        written.append(path)
        for name, col in PANELS.items():
            path = out_dir / f"series_{name}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["method", col, "gap"])
                for method, (xs, gs) in self.panel(name).items():
                    for x, g in zip(xs, gs):
                        w.writerow([method, x, repr(g)])
            written.append(path)
        return written


def report(paths, out_dir=None) -> Report:
    series = []
    for p in paths:
        series.extend(read_run(p))
    rep = Report(series)
    if out_dir is not None:
        rep.write(out_dir)
    return rep
