"""Closed-form Dirac spectra of flat tori, circles and magnetic 2-tori."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "BudgetError",
    "EigenvalueList",
    "spinor_rank",
    "circle_dirac_spectrum",
    "flat_torus_spectrum",
    "landau_twisted_torus_spectrum",
]

ENUMERATION_BUDGET = 2_000_000


class BudgetError(RuntimeError):
    """The requested cutoff needs more lattice points than the enumeration budget."""


@dataclass(frozen=True)
class EigenvalueList:
    """Sorted ``(value, multiplicity)`` pairs, complete for ``|value| <= truncation_bound``.

    ``zero_chirality`` is ``n+ - n-`` for the zero modes of an even-dimensional
    base (the index); it decides how zero modes split when a fiber is added.
    """

    entries: tuple[tuple[float, int], ...]
    truncation_bound: float
    zero_chirality: int = 0

    def __post_init__(self):
        vals = [v for v, _ in self.entries]
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ValueError("entries must be sorted ascending")
        if any(m < 1 for _, m in self.entries):
            raise ValueError("multiplicities must be positive")

    @classmethod
    def from_values(cls, values, truncation_bound, zero_chirality=0, atol=1e-12):
        """Group a flat array of eigenvalues into (value, multiplicity) entries."""
        vals = np.sort(np.asarray(values, dtype=float))
        entries = []
        for v in vals:
            if entries and abs(v - entries[-1][0]) <= atol * max(1.0, abs(v)):
                entries[-1][1] += 1
            else:
                entries.append([float(v), 1])
        return cls(tuple((v, m) for v, m in entries), float(truncation_bound), zero_chirality)

    def values(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity."""
        return np.repeat([v for v, _ in self.entries], [m for _, m in self.entries]).astype(float)

    def multiplicity(self, value, atol=1e-9) -> int:
        return sum(m for v, m in self.entries if abs(v - value) <= atol * max(1.0, abs(value)))

    def total(self) -> int:
        return sum(m for _, m in self.entries)

    def __len__(self):
        return len(self.entries)


def spinor_rank(dim: int) -> int:
    """Complex rank ``2^floor(dim/2)`` of the spinor bundle."""
    return 2 ** (dim // 2)


def _check_budget(count):
    if count > ENUMERATION_BUDGET:
        raise BudgetError(
            f"cutoff needs about {count:.3g} lattice points, budget is {ENUMERATION_BUDGET}"
        )


def circle_dirac_spectrum(length: float, twist: float, cutoff: float) -> EigenvalueList:
    """Spectrum ``{2 pi (m + twist) / length}`` of ``-i d/dx`` on a circle, all simple."""
    if not length > 0:
        raise ValueError("circle length must be positive")
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    mmax = cutoff * length / (2 * math.pi) + abs(twist) + 1
    _check_budget(2 * mmax)
    ms = np.arange(-math.ceil(mmax), math.ceil(mmax) + 1)
    vals = 2 * math.pi * (ms + twist) / length
    vals = np.sort(vals[np.abs(vals) <= cutoff])
    return EigenvalueList(tuple((float(v), 1) for v in vals), cutoff)


def flat_torus_spectrum(
    periods: Sequence[float], twists: Sequence[float], cutoff: float
) -> EigenvalueList:
    """Dirac spectrum of the flat torus ``R^d / prod(a_i Z)`` with twisted boundary conditions.

    Each lattice point ``j`` gives ``|lam| = 2 pi |(j + delta) / a|`` with total
    multiplicity ``spinor_rank(d)``, split evenly between ``+|lam|`` and
    ``-|lam|``; a zero lattice vector contributes the full rank at zero.  For
    ``d = 1`` this is the signed circle spectrum.
    """
    periods = [float(a) for a in periods]
    twists = [float(t) for t in twists]
    if not periods:
        raise ValueError("need at least one period")
    if len(twists) != len(periods):
        raise ValueError("one twist per period required")
    if any(not a > 0 for a in periods):
        raise ValueError("periods must be positive")
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    d = len(periods)
    if d == 1:
        return circle_dirac_spectrum(periods[0], twists[0], cutoff)
    ranges = []
    count = 1.0
    for a, t in zip(periods, twists):
        mmax = math.ceil(cutoff * a / (2 * math.pi) + abs(t) + 1)
        ranges.append(np.arange(-mmax, mmax + 1) + t)
        count *= 2 * mmax + 1
    _check_budget(count)
    sq = np.zeros(1)
    for r, a in zip(ranges, periods):
        sq = (sq[:, None] + (2 * math.pi * r / a)[None, :] ** 2).ravel()
    lam = np.sqrt(sq)
    lam = np.sort(lam[lam <= cutoff])
    rank = spinor_rank(d)
    half = rank // 2
    entries: dict[float, int] = {}
    groups = _group(lam)
    for v, m in groups:
        if v == 0.0:
            entries[0.0] = entries.get(0.0, 0) + m * rank
        else:
            entries[v] = entries.get(v, 0) + m * half
            entries[-v] = entries.get(-v, 0) + m * half
    return EigenvalueList(tuple(sorted(entries.items())), cutoff)


def _group(sorted_vals, rtol=1e-12):
    out: list[list] = []
    for v in sorted_vals:
        if out and abs(v - out[-1][0]) <= rtol * max(1.0, v):
            out[-1][1] += 1
        else:
            out.append([float(v), 1])
    return out


def landau_twisted_torus_spectrum(area: float, flux: int, cutoff: float) -> EigenvalueList:
    """Dirac spectrum of a flat 2-torus twisted by a line bundle of degree ``flux``.

    ``lam^2 = 4 pi |flux| m / area``: the zero level has multiplicity ``|flux|``
    (all of one chirality, the index), every other level ``|flux|`` at each sign.
    """
    flux = int(flux)
    if flux == 0:
        raise ValueError("flux 0 is untwisted: use flat_torus_spectrum")
    if not area > 0:
        raise ValueError("area must be positive")
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    c = abs(flux)
    step = 4 * math.pi * c / area
    mmax = int(math.floor(cutoff**2 / step * (1 + 1e-14)))
    _check_budget(2 * mmax + 1)
    entries = [(0.0, c)]
    pos = [math.sqrt(step * m) for m in range(1, mmax + 1)]
    entries = [(-v, c) for v in reversed(pos)] + entries + [(v, c) for v in pos]
    return EigenvalueList(tuple(entries), cutoff, zero_chirality=flux)
