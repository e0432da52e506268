"""Fourier-sector reduction of the total-space Dirac operator.

``L^2(Sigma M)`` splits into sectors ``V_k`` on which the Lie derivative along
the Killing field acts as ``i k``.  On each sector the Dirac operator is the
sum of a vertical part ``(k / l) gamma(K/l)``, the twisted base operator and
a zero-order curvature term.  With a constant fiber the square separates and
the sector spectrum is ``+-sqrt(mu^2 + k^2 / l^2)``.  Over a circle base with a
varying fiber, the reduced 2x2 system is discretized in the gauge
``psi -> l^(1/2) psi``, which removes the ``l'/(2l)`` weight and makes the
operator symmetric in the flat measure.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .eigensolve import fourier_diff_matrix, hermitian_eigenvalues
from .geometry import BundleGeometry, CollapseFamily, GeometryError, as_sector
from .model_spectra import (
    BudgetError,
    EigenvalueList,
    flat_torus_spectrum,
    landau_twisted_torus_spectrum,
)

__all__ = [
    "GridError",
    "SectorOperator",
    "SpectrumRow",
    "SpectrumTable",
    "combine_constant_fiber",
    "sector_base_spectrum",
    "required_grid",
    "build_warped_sector_operator",
    "assemble_spectrum",
    "assemble_family",
    "zero_order_enclosure",
    "thread_count",
]

GRID_FACTOR = 8
THREADS_ENV = "S1DIRAC_THREADS"


class GridError(ValueError):
    """The collocation grid cannot resolve the fiber profile."""

    def __init__(self, message, required):
        super().__init__(message, required)
        self.required = required

    def __str__(self):
        return str(self.args[0])


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# closed form


def combine_constant_fiber(
    base_spectrum: EigenvalueList, k, fiber_radius: float, doubled: bool = True
) -> EigenvalueList:
    """Sector-``k`` spectrum for a constant fiber radius ``l``.

    With ``grad l = 0`` the vertical and horizontal parts anticommute and
    square to ``k^2/l^2`` and ``D^2``, so each base eigenvalue ``mu`` yields
    ``+-sqrt(mu^2 + k^2/l^2)``.

    ``doubled=True`` (odd-dimensional base, spinor rank doubles): every base
    eigenvalue of multiplicity ``m`` gives both signs with multiplicity ``m``.
    ``doubled=False`` (even-dimensional base, same rank): a pair ``{mu, -mu}``
    gives one eigenvalue of each sign, and zero modes go to ``+k/l`` or
    ``-k/l`` according to their chirality.
    """
    k = float(as_sector(k))
    if not fiber_radius > 0:
        raise ValueError("fiber radius must be positive")
    kl2 = (k / fiber_radius) ** 2
    out: dict[float, int] = {}

    def add(v, m):
        if m:
            out[v] = out.get(v, 0) + m

    if doubled:
        for mu, m in base_spectrum.entries:
            lam = math.sqrt(mu * mu + kl2)
            add(lam, m)
            add(-lam, m)
    else:
        pos = {mu: m for mu, m in base_spectrum.entries if mu > 0}
        neg = {-mu: m for mu, m in base_spectrum.entries if mu < 0}
        for mu in sorted(set(pos) | set(neg)):
            mp, mn = pos.get(mu, 0), _close_get(neg, mu)
            if mp != mn:
                raise ValueError(
                    f"even-dimensional base spectrum is not symmetric at |mu|={mu:.6g}"
                )
            lam = math.sqrt(mu * mu + kl2)
            add(lam, mp)
            add(-lam, mp)
        m0 = sum(m for mu, m in base_spectrum.entries if mu == 0.0)
        chi = base_spectrum.zero_chirality
        if (m0 + chi) % 2 or abs(chi) > m0:
            raise ValueError("zero-mode chirality inconsistent with zero-mode count")
        n_plus, n_minus = (m0 + chi) // 2, (m0 - chi) // 2
        add(k / fiber_radius + 0.0, n_plus)
        add(-k / fiber_radius + 0.0, n_minus)
    bound = math.sqrt(base_spectrum.truncation_bound**2 + kl2)
    return EigenvalueList(tuple(sorted(out.items())), bound)


def _close_get(d, key, rtol=1e-12):
    if key in d:
        return d[key]
    for k, v in d.items():
        if abs(k - key) <= rtol * max(1.0, key):
            return v
    return 0


def sector_base_spectrum(g: BundleGeometry, k, cutoff: float) -> EigenvalueList:
    """Spectrum of the base Dirac operator twisted by the sector-``k`` line bundle.

    Flat connections shift the base boundary twists by ``-k hol / 2 pi``;
    a flux bundle of Euler number ``c`` gives a Landau spectrum of degree
    ``-k c``, which must be an integer.
    """
    k = as_sector(k)
    hol = g.connection.holonomy
    c = g.connection.euler_number
    if c and k != 0:
        degree = -k * c
        if degree.denominator != 1:
            raise GeometryError(
                f"sector k={k} of a degree-{c} bundle twists by a line bundle of "
                f"non-integral degree {degree}; a non-projectable spin structure "
                f"needs an even Euler number"
            )
        return landau_twisted_torus_spectrum(g.base.volume, int(degree), cutoff)
    shifts = [
        float(t) - (float(k) * h / (2 * math.pi) if not c else 0.0)
        for t, h in zip(g.spin.base_twists, hol)
    ]
    return flat_torus_spectrum(g.base.periods, shifts, cutoff)


def _closed_form_sector(g, k, j_count, cutoff=None, base_spectrum=None):
    ell = g.profile.constant
    doubled = g.b % 2 == 1
    if base_spectrum is not None:
        spec = combine_constant_fiber(base_spectrum, k, ell, doubled)
        vals = spec.values()
        vals = vals[np.abs(vals) <= spec.truncation_bound]
        if len(vals) < j_count:
            raise BudgetError(
                f"supplied base spectrum yields {len(vals)} eigenvalues below its "
                f"truncation bound, {j_count} requested"
            )
        return vals
    cut = cutoff if cutoff else 2 * math.pi * max(1.0, j_count) / min(g.base.periods)
    for _ in range(40):
        spec = combine_constant_fiber(sector_base_spectrum(g, k, cut), k, ell, doubled)
        vals = spec.values()
        vals = vals[np.abs(vals) <= spec.truncation_bound]
        if len(vals) >= j_count:
            return vals
        cut *= 2
    raise BudgetError("could not reach the requested eigenvalue count")


# ---------------------------------------------------------------------------
# discretized warped operator


@dataclass(frozen=True)
class SectorOperator:
    """Discretized reduced Dirac operator on one fiber sector over a circle base.

    ``matrix`` acts on two spinor components sampled on ``grid`` and has the
    block form ``[[0, B], [B^H, 0]]`` with ``B = i (d/dx + k / l(x))``.
    """

    sector: Fraction
    matrix: np.ndarray = field(repr=False)
    grid: np.ndarray = field(repr=False)
    stage: int = 1
    mode_shift: float = 0.0

    @property
    def size(self) -> int:
        return len(self.grid)

    def hermiticity_defect(self) -> float:
        a = self.matrix
        return float(np.max(np.abs(a - a.conj().T)) / max(np.max(np.abs(a)), 1e-300))

    def anticommutator_defect(self) -> float:
        """Relative size of ``A sigma + sigma A`` for ``sigma = diag(1, -1)`` blockwise."""
        a = self.matrix
        G = self.size
        sig = np.concatenate([np.ones(G), -np.ones(G)])
        ac = a * sig[None, :] + sig[:, None] * a
        return float(np.max(np.abs(ac)) / max(np.max(np.abs(a)), 1e-300))

    def eigenvalues(self) -> np.ndarray:
        return hermitian_eigenvalues(self.matrix)


def required_grid(g: BundleGeometry, factor: int = GRID_FACTOR, minimum: int = 4) -> int:
    """Smallest admissible grid: even, ``>= factor * max frequency`` and ``>= minimum``."""
    G = max(factor * g.profile.max_frequency, minimum, 4)
    return G + (G % 2)


def build_warped_sector_operator(g: BundleGeometry, k, G: int, stage: int = 1) -> SectorOperator:
    """Collocation matrix of the sector-``k`` operator for a circle base.

    Raises :class:`GridError` (with the required size) if ``G`` is odd or
    below eight samples per period of the fastest profile mode, and
    :class:`GeometryError` if ``k`` is not in the spin structure's lattice.
    """
    if g.b != 1:
        raise GeometryError("the discretized sector operator needs a 1-dimensional base")
    k = as_sector(k)
    if not g.spin.in_lattice(k):
        lattice = "integers" if g.spin.fiber_projectable else "half-integers"
        raise GeometryError(f"sector k={k} is not in the spin structure's lattice ({lattice})")
    need = required_grid(g)
    if G % 2 or G < need:
        raise GridError(
            f"grid G={G} under-resolves the fiber profile (max frequency "
            f"{g.profile.max_frequency}); need even G >= {need}",
            need,
        )
    a = g.base.periods[0]
    shift = float(g.spin.base_twists[0]) - float(k) * g.connection.holonomy[0] / (2 * math.pi)
    D = fourier_diff_matrix(G, a, shift)
    x = np.arange(G) * (a / G)
    B = 1j * (D + np.diag(float(k) / g.profile(x)))
    Z = np.zeros((G, G), dtype=complex)
    A = np.block([[Z, B], [B.conj().T, Z]])
    return SectorOperator(k, A, x, stage, shift)


# ---------------------------------------------------------------------------
# tables


@dataclass(frozen=True)
class SpectrumRow:
    n: int
    k: Fraction
    j: int
    lam: float
    lo: float
    hi: float

    @property
    def lam_sq(self) -> float:
        return self.lam * self.lam


@dataclass(frozen=True)
class SpectrumTable:
    """Eigenvalues ``lambda_{j,k}(n)``; within each ``(n, k)`` sorted ascending, ``j`` the index."""

    rows: tuple[SpectrumRow, ...]
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        rows = tuple(sorted(self.rows, key=lambda r: (r.n, r.k, r.j)))
        object.__setattr__(self, "rows", rows)

    @property
    def stages(self) -> list[int]:
        return sorted({r.n for r in self.rows})

    def sectors(self, n=None) -> list[Fraction]:
        return sorted({r.k for r in self.rows if n is None or r.n == n})

    def select(self, n=None, k=None) -> list[SpectrumRow]:
        return [
            r for r in self.rows
            if (n is None or r.n == n) and (k is None or r.k == as_sector(k))
        ]

    def eigenvalues(self, n, k) -> np.ndarray:
        return np.array([r.lam for r in self.select(n, k)])

    @property
    def has_enclosures(self) -> bool:
        return any(r.lo != r.lam or r.hi != r.lam for r in self.rows)

    @classmethod
    def merge(cls, tables: Sequence["SpectrumTable"], metadata=None) -> "SpectrumTable":
        rows = [r for t in tables for r in t.rows]
        meta = dict(metadata or {})
        return cls(tuple(rows), meta)


def _select(vals, j_count, rtol=1e-8):
    """The ``j_count`` eigenvalues of smallest modulus, returned ascending.

    Moduli within ``rtol`` of each other count as tied and are taken in
    ascending order of value, so a cut through a degenerate cluster picks
    the same members whatever the rounding of the computed values.
    """
    vals = np.asarray(vals, dtype=float)
    mod = np.abs(vals)
    order = np.argsort(mod, kind="stable")
    cluster = np.zeros(len(vals), dtype=int)
    c = 0
    for prev, cur in zip(order, order[1:]):
        if mod[cur] - mod[prev] > rtol * max(1.0, mod[cur]):
            c += 1
        cluster[cur] = c
    order = np.lexsort((vals, cluster))
    return np.sort(vals[order[:j_count]])


def _sector_rows(n, k, vals):
    return [SpectrumRow(int(n), k, j, float(v), float(v), float(v)) for j, v in enumerate(vals)]


def _solve_sector(g, k, n, j_count, grid, method, cutoff, base_spectrum):
    if method == "closed" or (method == "auto" and g.profile.is_constant):
        if not g.profile.is_constant:
            raise GeometryError("the closed-form path needs a constant fiber profile")
        vals = _closed_form_sector(g, k, j_count, cutoff, base_spectrum)
    elif method in ("numeric", "auto"):
        G = grid if grid is not None else required_grid(g, minimum=32)
        vals = build_warped_sector_operator(g, k, G, n).eigenvalues()
    else:
        raise ValueError(f"unknown method {method!r}")
    return _sector_rows(n, k, _select(vals, j_count))


def assemble_spectrum(
    g: BundleGeometry,
    k_range=(-3, 3),
    j_count: int = 20,
    grid: int | None = None,
    *,
    stage: int = 1,
    method: str = "auto",
    cutoff: float | None = None,
    base_spectrum: EigenvalueList | None = None,
) -> SpectrumTable:
    """Per-sector spectra of one geometry for all lattice sectors in ``k_range``.

    ``method="auto"`` uses the closed form for constant profiles and the
    discretized operator otherwise; ``"closed"`` and ``"numeric"`` force one.
    """
    return assemble_family(
        CollapseFamily((g,), (stage,)),
        k_range,
        j_count,
        grid,
        method=method,
        cutoff=cutoff,
        base_spectrum=base_spectrum,
    )


def assemble_family(
    family: CollapseFamily,
    k_range=(-3, 3),
    j_count: int = 20,
    grid=None,
    *,
    method: str = "auto",
    cutoff: float | None = None,
    base_spectrum: EigenvalueList | None = None,
    threads: int | None = None,
) -> SpectrumTable:
    """Assemble the spectrum table of every stage of a family.

    ``grid`` is ``None`` (minimal admissible grid), an int, or a mapping
    from stage label to grid size.  Sectors are solved independently, in a
    thread pool of ``threads`` workers (default from ``S1DIRAC_THREADS``),
    and merged in ``(n, k, j)`` order.
    """
    if j_count < 1:
        raise ValueError("j_count must be positive")
    lo, hi = k_range
    tasks = []
    for n, g in zip(family.labels, family.stages):
        G = grid.get(n) if isinstance(grid, Mapping) else grid
        for k in g.spin.sector_lattice(lo, hi):
            tasks.append((g, k, n, j_count, G, method, cutoff, base_spectrum))
    threads = threads or thread_count()

    def run(t):
        try:
            return _solve_sector(*t)
        except (GeometryError, GridError, BudgetError) as exc:
            raise type(exc)(f"stage n={t[2]}, sector k={t[1]}: {exc}", *exc.args[1:]) from exc

    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    rows = tuple(r for res in results for r in res)
    meta = {
        "grid": grid if not isinstance(grid, Mapping) else dict(grid),
        "cutoff": cutoff,
        "method": method,
        "numeric": method == "numeric"
        or (method == "auto" and any(not g.profile.is_constant for g in family.stages)),
        "j_count": j_count,
        "k_range": [str(Fraction(lo)), str(Fraction(hi))],
        "geometry": [g.digest() for g in family.stages],
    }
    return SpectrumTable(rows, meta)


def zero_order_enclosure(t: SpectrumTable, clifford) -> SpectrumTable:
    """Annotate each eigenvalue with ``[lam - r, lam + r]``, ``r = clifford / 4``.

    ``clifford`` is ``||l d omega||_Cl`` (a number, or a mapping from stage to
    number); ``r`` bounds the norm of the zero-order curvature term, so each
    eigenvalue of the full operator lies within ``r`` of its counterpart.
    """
    def radius(n):
        c = clifford[n] if isinstance(clifford, Mapping) else clifford
        if c < 0:
            raise ValueError("Clifford norm must be non-negative")
        return c / 4.0

    rows = tuple(replace(r, lo=r.lam - radius(r.n), hi=r.lam + radius(r.n)) for r in t.rows)
    meta = dict(t.metadata)
    meta["enclosure"] = (
        {int(n): float(v) for n, v in clifford.items()}
        if isinstance(clifford, Mapping) else float(clifford)
    )
    return SpectrumTable(rows, meta)
