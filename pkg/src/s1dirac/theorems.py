"""Finite-stage checks of the collapse theorems.

Asymptotic statements ("for all eps there is n0", limsup) are rendered as
reports over the stages actually computed: every row carries its value,
bound and margin, and ``n0`` is the first stage from which every later row
passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .geometry import BundleGeometry, CollapseFamily, clifford_norm, validate_collapse_family
from .model_spectra import EigenvalueList
from .sectors import SpectrumTable

__all__ = [
    "TheoremError",
    "BoundRow",
    "BoundReport",
    "TOL_CLOSED",
    "TOL_NUMERIC",
    "default_tolerance",
    "check_thm1_lower",
    "check_thm1_upper",
    "check_thm1_convergence",
    "check_thm2",
    "check_thm2_upper",
    "check_thm3",
    "thm3_bound",
    "sup_distance",
]

TOL_CLOSED = 1e-6
TOL_NUMERIC = 1e-4


class TheoremError(ValueError):
    """A check was applied outside its hypotheses (wrong spin type, missing rows...)."""


@dataclass(frozen=True)
class BoundRow:
    check: str
    n: int
    k: Fraction
    j: int
    value: float
    bound: float
    margin: float
    passed: bool


@dataclass(frozen=True)
class BoundReport:
    """Rows of one check; each row passes iff ``margin >= -tolerance``."""

    check: str
    rows: tuple[BoundRow, ...]
    tolerance: float
    passed: bool
    epsilon: float | None = None
    n0: int | None = None
    info: Mapping = field(default_factory=dict)

    @property
    def worst_margin(self) -> float:
        return min((r.margin for r in self.rows), default=math.inf)

    @property
    def failing_rows(self) -> list[BoundRow]:
        return [r for r in self.rows if not r.passed]

    def summary(self) -> dict:
        return {
            "passed": self.passed,
            "n0": self.n0,
            "tolerance": self.tolerance,
            "epsilon": self.epsilon,
            "worst_margin": self.worst_margin if self.rows else None,
            "failing_rows": len(self.failing_rows),
            **{k: v for k, v in self.info.items()},
        }


def default_tolerance(t: SpectrumTable) -> float:
    """1e-6 for closed-form tables, 1e-4 once any sector was discretized."""
    method = t.metadata.get("method", "auto")
    if method == "closed":
        return TOL_CLOSED
    if method == "numeric" or t.metadata.get("numeric", False):
        return TOL_NUMERIC
    return TOL_CLOSED


def _row(check, r, value, bound, margin, tol):
    return BoundRow(check, r.n, r.k, r.j, float(value), float(bound), float(margin),
                    bool(margin >= -tol))


def _first_passing_stage(rows: Sequence[BoundRow], stages: Sequence[int]) -> int | None:
    """First stage ``n0`` such that every row at every stage ``>= n0`` passes."""
    n0 = None
    for n in sorted(stages, reverse=True):
        if all(r.passed for r in rows if r.n == n):
            n0 = n
        else:
            break
    return n0


def _functionals(f: CollapseFamily):
    return {n: g.functionals() for n, g in zip(f.labels, f.stages)}


def _require_projectable(f: CollapseFamily, want: bool, name: str):
    if f.spin.fiber_projectable != want:
        kind = "non-projectable" if want is False else "projectable"
        raise TheoremError(f"{name} applies to {kind} spin structures only")


def _lower_rows(check, t, f, alpha, eps, tol, sectors_ok):
    fun = _functionals(f)
    rows = []
    for r in t.rows:
        if r.k == 0:
            continue
        if not sectors_ok(r.k):
            raise TheoremError(f"{check}: sector k={r.k} does not belong to this spin structure")
        sup = fun[r.n][0]
        k = abs(float(r.k))
        value = sup * sup * r.lam_sq
        bound = k * (k - alpha) - eps
        rows.append(_row(check, r, value, bound, value - bound, tol))
    return rows


def check_thm1_lower(t: SpectrumTable, f: CollapseFamily, eps: float,
                     tol: float | None = None, alpha: float | None = None) -> BoundReport:
    """Lower bound ``||l_n||^2 lambda^2 >= |k|(|k| - alpha) - eps`` on sectors ``k != 0``."""
    _require_projectable(f, True, "Theorem 1")
    tol = default_tolerance(t) if tol is None else tol
    if alpha is None:
        alpha = validate_collapse_family(f, "projectable").alpha
    rows = _lower_rows("thm1_lower", t, f, alpha, eps, tol, lambda k: k.denominator == 1)
    n0 = _first_passing_stage(rows, t.stages)
    return BoundReport("thm1_lower", tuple(rows), tol, n0 is not None and bool(rows), eps, n0,
                       {"alpha": alpha})


def _check_upper(check, t, f, tol, alpha, count, sectors_ok):
    if not f.fixed_connection:
        raise TheoremError(f"{check}: the upper bound needs a connection independent of n")
    fun = _functionals(f)
    n = max(t.stages)
    rows = []
    for k in t.sectors(n):
        if k == 0:
            continue
        if not sectors_ok(k):
            raise TheoremError(f"{check}: sector k={k} does not belong to this spin structure")
        sel = sorted(t.select(n, k), key=lambda r: (abs(r.lam), r.lam))[:count]
        lo = fun[n][1]
        kk = abs(float(k))
        bound = kk * (kk + alpha)
        for r in sel:
            value = lo * lo * r.lam_sq
            rows.append(_row(check, r, value, bound, bound - value, tol))
    passed = bool(rows) and all(r.passed for r in rows)
    return BoundReport(check, tuple(rows), tol, passed, None, n if passed else None,
                       {"alpha": alpha, "stage": n, "window": count,
                        "note": "limsup approximated at the largest stage"})


def check_thm1_upper(t: SpectrumTable, f: CollapseFamily, tol: float | None = None,
                     alpha: float | None = None, count: int = 2) -> BoundReport:
    """``(min l_n)^2 lambda^2 <= |k|(|k| + alpha)`` at the largest stage.

    The bound is not uniform in ``(j, k)``, so only the ``count`` eigenvalues
    of smallest modulus in each sector are checked.
    """
    _require_projectable(f, True, "Theorem 1")
    tol = default_tolerance(t) if tol is None else tol
    if alpha is None:
        alpha = validate_collapse_family(f, "projectable").alpha
    return _check_upper("thm1_upper", t, f, tol, alpha, count, lambda k: k.denominator == 1)


def check_thm2_upper(t: SpectrumTable, f: CollapseFamily, tol: float | None = None,
                     alpha: float | None = None, count: int = 2) -> BoundReport:
    """Half-integer-sector version of :func:`check_thm1_upper`."""
    _require_projectable(f, False, "Theorem 2")
    tol = default_tolerance(t) if tol is None else tol
    if alpha is None:
        alpha = validate_collapse_family(f, "nonprojectable").alpha
    return _check_upper("thm2_upper", t, f, tol, alpha, count, lambda k: k.denominator == 2)


def sup_distance(computed, target) -> float:
    """Bottleneck distance of the best order-preserving embedding of ``computed`` into ``target``.

    Both are multisets on the line; ``target`` must have at least as many
    elements.  In 1-D a monotone matching is optimal for the bottleneck
    cost, so a small dynamic program suffices.
    """
    c = np.sort(np.asarray(computed, dtype=float))
    T = np.sort(np.asarray(target, dtype=float))
    J, M = len(c), len(T)
    if J > M:
        raise TheoremError(f"{J} eigenvalues cannot be matched to {M} target values")
    if J == 0:
        return 0.0
    prev = np.zeros(M + 1)
    for i in range(1, J + 1):
        cur = np.full(M + 1, np.inf)
        for m in range(i, M + 1):
            cur[m] = min(cur[m - 1], max(prev[m - 1], abs(c[i - 1] - T[m - 1])))
        prev = cur
    return float(prev[M])


def check_thm1_convergence(t: SpectrumTable, base: EigenvalueList, b_parity: str,
                           tol: float = 1e-3, floor: float = 1e-10) -> BoundReport:
    """Sector-0 eigenvalues against the base spectrum, stage by stage.

    The target is the base spectrum for an even-dimensional base and the
    base spectrum together with its negative for an odd one (the spinor
    rank doubles).  The sup-distance must be non-increasing along the stages
    (up to a round-off ``floor``) and below ``tol`` at the last stage.
    """
    if b_parity not in ("even", "odd"):
        raise ValueError("b_parity must be 'even' or 'odd'")
    target = base.values()
    if b_parity == "odd":
        target = np.concatenate([target, -target])
    rows = []
    dists = []
    stages = [n for n in t.stages if t.select(n, 0)]
    if not stages:
        raise TheoremError("thm1_convergence needs sector k = 0 in the table")
    for n in stages:
        sel = t.select(n, 0)
        lam = np.array([r.lam for r in sel])
        reach = np.max(np.abs(lam)) + 2 * tol
        if reach > base.truncation_bound:
            raise TheoremError(
                f"base spectrum truncated at {base.truncation_bound:.6g} cannot cover "
                f"|lambda| up to {reach:.6g} at stage n={n}"
            )
        window = target[np.abs(target) <= reach]
        d = sup_distance(lam, window)
        dists.append(d)
        worst = max(sel, key=lambda r: min(abs(r.lam - window), default=0.0))
        rows.append(BoundRow("thm1_convergence", n, Fraction(0), worst.j, d, tol, tol - d, d <= tol))
    monotone = all(b <= a + floor for a, b in zip(dists, dists[1:]))
    passed = monotone and dists[-1] <= tol
    n0 = _first_passing_stage(rows, stages) if passed else None
    return BoundReport("thm1_convergence", tuple(rows), tol, passed, None, n0,
                       {"distances": dists, "monotone": monotone, "floor": floor,
                        "b_parity": b_parity})


def check_thm2(t: SpectrumTable, f: CollapseFamily, eps: float, tol: float | None = None,
               alpha: float | None = None, eps_prime: float | None = None) -> BoundReport:
    """Divergence for non-projectable spin structures.

    Rows ``thm2`` check ``||l_n||^2 lambda^2 >= |k|(|k| - alpha) - eps`` on the
    half-integer sectors; rows ``thm2_min`` check that the smallest
    ``|lambda|`` at stage ``n`` is at least ``(sqrt(1/4 - alpha/2) - eps') / ||l_n||``.
    """
    _require_projectable(f, False, "Theorem 2")
    tol = default_tolerance(t) if tol is None else tol
    if alpha is None:
        alpha = validate_collapse_family(f, "nonprojectable").alpha
    if not alpha < 0.5:
        raise TheoremError(f"Theorem 2 needs alpha < 1/2, got {alpha:.6g}")
    eps_prime = eps if eps_prime is None else eps_prime
    if any(r.k.denominator != 2 for r in t.rows):
        raise TheoremError("Theorem 2: table contains integer sectors")
    rows = _lower_rows("thm2", t, f, alpha, eps, tol, lambda k: k.denominator == 2)
    fun = _functionals(f)
    mins = {}
    for n in t.stages:
        sel = t.select(n)
        r = min(sel, key=lambda r: (abs(r.lam), r.k, r.j))
        bound = (math.sqrt(0.25 - alpha / 2) - eps_prime) / fun[n][0]
        value = abs(r.lam)
        mins[n] = value
        rows.append(_row("thm2_min", r, value, bound, value - bound, tol))
    n0 = _first_passing_stage(rows, t.stages)
    return BoundReport("thm2", tuple(rows), tol, n0 is not None and bool(rows), eps, n0,
                       {"alpha": alpha, "min_abs_lambda": mins})


def thm3_bound(sup: float, grad_sup: float, clifford: float) -> tuple[float, float]:
    """The two terms ``sqrt(1 - 2 alpha) / (2 ||l||)`` and ``||l d omega||_Cl / 4``."""
    if not grad_sup < 0.5:
        raise TheoremError(f"Theorem 3 is vacuous for ||grad l|| = {grad_sup:.6g} >= 1/2")
    return math.sqrt(1 - 2 * grad_sup) / (2 * sup), clifford / 4


def check_thm3(t: SpectrumTable, g, tol: float | None = None) -> BoundReport:
    """Uniform lower bound on ``|lambda|`` for a non-projectable spin structure.

    ``g`` is a :class:`BundleGeometry` (single-stage table) or a
    :class:`CollapseFamily`.  When the table carries zero-order enclosures
    the lower edge of each enclosure is tested instead of the eigenvalue.
    Stages with ``||grad l|| >= 1/2`` are reported as inapplicable.
    """
    family = g if isinstance(g, CollapseFamily) else CollapseFamily((g,), (t.stages[0],))
    _require_projectable(family, False, "Theorem 3")
    tol = default_tolerance(t) if tol is None else tol
    rows = []
    terms = {}
    inapplicable = []
    for n in t.stages:
        geo = family.stage(n)
        sup, _, grad = geo.functionals()
        if not grad < 0.5:
            inapplicable.append(n)
            continue
        a, c = thm3_bound(sup, grad, clifford_norm(geo.connection, geo.profile))
        terms[n] = {"fiber_term": a, "curvature_term": c}
        bound = a - c
        for r in t.select(n):
            if r.lo <= 0.0 <= r.hi:
                value = 0.0
            else:
                value = min(abs(r.lo), abs(r.hi))
            rows.append(_row("thm3", r, value, bound, value - bound, tol))
    passed = all(r.passed for r in rows)
    return BoundReport("thm3", tuple(rows), tol, passed, None,
                       _first_passing_stage(rows, [n for n in t.stages if n not in inapplicable])
                       if rows else None,
                       {"terms": terms, "inapplicable": inapplicable,
                        "uses_enclosures": t.has_enclosures})
