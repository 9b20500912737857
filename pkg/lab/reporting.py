"""
CSV / JSON report writers and console tables.

CSV columns are fixed (see *_COLUMNS); floats are written with 17 significant
digits and rows end in CRLF. Wall times never reach the files, so identical
configs give byte-identical outputs.
"""

import csv
import json
import os
import subprocess
from typing import Iterable, List, Optional, Sequence, Tuple

from config import Config
from utils.data_structures import (
    ConvergenceReport,
    ExperimentConfig,
    LowerBoundReport,
    SelfCheckSummary,
)
from utils.logging_utils import log_step
from utils.serialization import json_safe, to_dict

CONVERGENCE_COLUMNS = ("epsilon", "resolution", "value", "abs_error", "rel_error")
LOWER_BOUND_COLUMNS = ("h", "amplitude", "epsilon", "resolution", "value", "reference", "deficit")


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def version_string() -> str:
    """git-describe of the working tree, or the package version outside a repository."""
    fallback = f"v{Config.VERSION}"
    try:
        p = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            check=False,
            text=True,
        )
        if p.returncode != 0:
            return fallback
        described = (p.stdout or "").strip()
        return described if described else fallback
    except Exception:
        return fallback


def output_paths(cfg: ExperimentConfig) -> Tuple[str, str]:
    base = os.path.join(cfg.output.directory, cfg.output.stem)
    return base + ".csv", base + ".json"


def _write_rows(path: str, columns: Sequence[str], rows: Iterable[dict]):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[column]) for column in columns])
    log_step("CLI", f"Wrote {path}")


def write_convergence_csv(path: str, report: ConvergenceReport):
    _write_rows(path, CONVERGENCE_COLUMNS, (to_dict(row) for row in report.rows))


def write_lower_bound_csv(path: str, report: LowerBoundReport):
    _write_rows(path, LOWER_BOUND_COLUMNS, (to_dict(row) for row in report.rows))


def write_json_report(path: str, kind: str, report, cfg: Optional[ExperimentConfig] = None):
    """Report object plus config echo and version string, keys sorted."""
    payload = {
        "kind": kind,
        "version": version_string(),
        "config": json_safe(cfg) if cfg is not None else None,
        "report": json_safe(report),
    }
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    log_step("CLI", f"Wrote {path}")


def _table(header: Sequence[str], rows: List[Sequence[str]]) -> str:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(header)]
    lines = ["  ".join(str(h).rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(str(c).rjust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)


def _optional(value, spec: str = ".3e") -> str:
    return "n/a" if value is None else format(value, spec)


def format_convergence(report: ConvergenceReport) -> str:
    rows = [(f"{r.epsilon:.6g}", str(r.resolution), f"{r.value:.10g}", f"{r.abs_error:.3e}",
             f"{r.rel_error:.3e}", _optional(r.resolution_delta), _optional(r.epsilon_increment),
             f"{r.wall_time:.2f}s") for r in report.rows]
    text = _table(("epsilon", "res", "F_eps", "|F_eps - F|", "rel", "2x res delta", "eps step", "time"), rows)
    rate = f"{report.rate:.3f}" if report.rate is not None else report.rate_note
    extrapolated = f"{report.extrapolated:.10g}" if report.extrapolated is not None else "n/a"
    text += (f"\nF(E) = {report.reference:.10g}   rate = {rate}   extrapolated = {extrapolated}"
             f"   monotone = {report.monotone}"
             f"   resolution limited = {report.resolution_limited}   passed = {report.passed}")
    if report.flags:
        text += f"\nflags: {', '.join(report.flags)}"
    return text


def format_lower_bound(report: LowerBoundReport) -> str:
    rows = [(str(r.h), f"{r.amplitude:.4g}", f"{r.epsilon:.6g}", str(r.resolution), f"{r.value:.10g}",
             f"{r.deficit:.3e}", f"{r.wall_time:.2f}s") for r in report.rows]
    text = _table(("h", "a_h", "eps_h", "res", "F_eps_h(E_h)", "deficit", "time"), rows)
    trend = f"{report.extrapolated_deficit:.3e}" if report.extrapolated_deficit is not None else "n/a"
    text += (f"\nF(E) = {report.reference:.10g}   extrapolated deficit = {trend}"
             f"   passed = {report.passed}   (liminf bound only)")
    if report.flags:
        text += f"\nflags: {', '.join(report.flags)}"
    return text


def format_selfcheck(summary: SelfCheckSummary) -> str:
    rows = [(r.name, "PASS" if r.passed else "FAIL", f"{r.elapsed:.2f}s", r.detail) for r in summary.results]
    return _table(("check", "status", "time", "detail"), rows)
