"""End-to-end collapse experiments driven by an :class:`ExperimentConfig`."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import ExperimentConfig, parse_config
from .geometry import CollapseReport, clifford_norm, validate_collapse_family
from .sectors import SpectrumTable, assemble_family, sector_base_spectrum, zero_order_enclosure
from .theorems import (
    BoundReport,
    check_thm1_convergence,
    check_thm1_lower,
    check_thm1_upper,
    check_thm2,
    check_thm3,
)

__all__ = ["ExperimentError", "ExperimentResult", "run_collapse_experiment", "build_table"]


class ExperimentError(RuntimeError):
    """The family violates the collapse conditions; raised before any eigensolve."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("collapse conditions violated:\n  " + "\n  ".join(self.diagnostics))


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    table: SpectrumTable
    reports: tuple[BoundReport, ...]
    collapse: CollapseReport | None
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def _collapse_report(cfg, family):
    if len(family) >= 2:
        rep = validate_collapse_family(family)
        if not rep.ok:
            raise ExperimentError(rep.diagnostics)
        return rep
    g = family.stages[0]
    sup, _, grad = g.functionals()
    limit = 1.0 if g.spin.fiber_projectable else 0.5
    if not grad < limit:
        raise ExperimentError([f"alpha = {grad:.6g} violates alpha < {limit:g}"])
    return CollapseReport(grad, True, "projectable" if limit == 1.0 else "nonprojectable",
                          (sup,), (clifford_norm(g.connection, g.profile),), (grad,))


def build_table(cfg: ExperimentConfig, family=None) -> SpectrumTable:
    """Spectrum table of every stage, with zero-order enclosures attached."""
    family = family or cfg.family()
    s = cfg.solver
    grids = {n: cfg.grid_for(g) for n, g in zip(family.labels, family.stages)}
    table = assemble_family(family, tuple(s["k_range"]), s["j_count"], grids,
                            cutoff=s["cutoff"])
    cl = {n: clifford_norm(g.connection, g.profile) for n, g in zip(family.labels, family.stages)}
    return zero_order_enclosure(table, cl)


def run_collapse_experiment(config) -> ExperimentResult:
    """Validate the family, assemble spectra per stage and run the requested checks.

    Deterministic: the same configuration produces identical tables and
    reports.
    """
    cfg = config if isinstance(config, ExperimentConfig) else parse_config(config)
    family = cfg.family()
    collapse = _collapse_report(cfg, family)
    table = build_table(cfg, family)
    s = cfg.solver
    numeric = table.metadata.get("numeric", False)
    tol = s["tol_numeric"] if numeric else s["tol_closed"]
    eps = s["epsilon"]
    alpha = collapse.alpha
    reports = []
    for check in cfg.checks:
        if check == "thm1_lower":
            reports.append(check_thm1_lower(table, family, eps, tol, alpha))
        elif check == "thm1_upper":
            reports.append(check_thm1_upper(table, family, tol, alpha, s["upper_window"]))
        elif check == "thm1_convergence":
            g = family.stages[0]
            top = max(abs(r.lam) for r in table.select(k=0))
            base = sector_base_spectrum(g, 0, top + 4 * s["convergence_tol"] + 1.0)
            parity = "odd" if g.b % 2 else "even"
            reports.append(check_thm1_convergence(table, base, parity, s["convergence_tol"]))
        elif check == "thm2":
            reports.append(check_thm2(table, family, eps, tol, alpha))
        elif check == "thm3":
            reports.append(check_thm3(table, family, tol))
    summary = {
        "alpha": alpha,
        "collapse_ok": collapse.ok,
        "sup_series": {str(n): v for n, v in zip(sorted(family.labels), collapse.sup_series)},
        "grad_series": {str(n): v for n, v in zip(sorted(family.labels), collapse.grad_series)},
        "clifford_series": {str(n): v for n, v in zip(sorted(family.labels),
                                                        collapse.clifford_series)},
        "tolerance": tol,
        "numeric": numeric,
        "checks": {r.check: _jsonable(r.summary()) for r in reports},
        "passed": all(r.passed for r in reports),
        "config": cfg.as_dict(),
    }
    return ExperimentResult(cfg, table, tuple(reports), collapse, summary)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x
