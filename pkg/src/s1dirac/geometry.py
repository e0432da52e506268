"""Circle-bundle geometries, spin structures and collapse families.

A bundle ``M -> N`` over a flat torus base ``N`` is described by the fiber
profile ``l`` (the fiber over ``p`` has length ``2 pi l(p)``), the connection
data of ``i omega`` and a spin structure given by its sector lattice and base
holonomy twists.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "FiberProfile",
    "ConnectionData",
    "SpinStructureSpec",
    "BaseTorus",
    "BundleGeometry",
    "CollapseFamily",
    "CollapseReport",
    "as_sector",
    "profile_functionals",
    "clifford_norm",
    "validate_collapse_family",
    "torus_spin_structures",
]

HALF = Fraction(1, 2)


class GeometryError(ValueError):
    """Inconsistent or unsupported geometric input."""


def as_sector(k) -> Fraction:
    """Exact sector label; only integers and half-integers are allowed."""
    q = Fraction(k).limit_denominator(2) if isinstance(k, float) else Fraction(k)
    if isinstance(k, float) and float(q) != k:
        raise GeometryError(f"sector {k!r} is not an integer or half-integer")
    if q.denominator not in (1, 2):
        raise GeometryError(f"sector {k!r} is not an integer or half-integer")
    return q


# ---------------------------------------------------------------------------
# fiber profile


def _pairs(items) -> tuple[tuple[int, float], ...]:
    out = {}
    for f, c in items:
        f = int(f)
        if f <= 0:
            raise GeometryError(f"trigonometric frequencies must be positive, got {f}")
        out[f] = out.get(f, 0.0) + float(c)
    return tuple(sorted((f, c) for f, c in out.items() if c != 0.0))


@dataclass(frozen=True)
class FiberProfile:
    """Trigonometric polynomial fiber radius on a base circle.

    ``l(x) = constant + sum_f a_f cos(2 pi f x / period) + b_f sin(2 pi f x / period)``.
    On a base of dimension >= 2 only constant profiles are supported; the
    period is then irrelevant.
    """

    constant: float
    cos: tuple[tuple[int, float], ...] = ()
    sin: tuple[tuple[int, float], ...] = ()
    period: float = 2 * math.pi

    def __post_init__(self):
        if not self.period > 0:
            raise GeometryError("profile period must be positive")
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "cos", _pairs(self.cos))
        object.__setattr__(self, "sin", _pairs(self.sin))
        lo = self._extremum(self._coefficients(), minimize=True)
        if not lo > 0:
            raise GeometryError(f"fiber profile must be positive, minimum is {lo:.6g}")

    @classmethod
    def constant_profile(cls, value, period=2 * math.pi):
        return cls(value, period=period)

    @property
    def max_frequency(self) -> int:
        return max([f for f, _ in self.cos + self.sin], default=0)

    @property
    def is_constant(self) -> bool:
        return self.max_frequency == 0

    def _coefficients(self) -> np.ndarray:
        """Complex coefficients c_m, m = -F..F, with l(x) = sum c_m e^{i m t}."""
        F = self.max_frequency
        c = np.zeros(2 * F + 1, dtype=complex)
        c[F] = self.constant
        for f, a in self.cos:
            c[F + f] += a / 2
            c[F - f] += a / 2
        for f, b in self.sin:
            c[F + f] += b / 2j
            c[F - f] -= b / 2j
        return c

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        t = 2 * math.pi * x / self.period
        out = np.full(x.shape, self.constant)
        for f, a in self.cos:
            out = out + a * np.cos(f * t)
        for f, b in self.sin:
            out = out + b * np.sin(f * t)
        return out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        w = 2 * math.pi / self.period
        t = w * x
        out = np.zeros(x.shape)
        for f, a in self.cos:
            out = out - a * f * w * np.sin(f * t)
        for f, b in self.sin:
            out = out + b * f * w * np.cos(f * t)
        return out

    def scaled(self, factor: float, frequency_factor: int = 1) -> "FiberProfile":
        """``factor * l(frequency_factor * x)``."""
        if not factor > 0 or frequency_factor < 1:
            raise GeometryError("scaling needs factor > 0 and integer frequency factor >= 1")
        q = int(frequency_factor)
        return FiberProfile(
            self.constant * factor,
            tuple((f * q, a * factor) for f, a in self.cos),
            tuple((f * q, b * factor) for f, b in self.sin),
            self.period,
        )

    def shifted(self, s: float) -> "FiberProfile":
        """The profile ``x -> l(x + s)``."""
        w = 2 * math.pi / self.period
        cos, sin = [], []
        for f in sorted({f for f, _ in self.cos + self.sin}):
            a = dict(self.cos).get(f, 0.0)
            b = dict(self.sin).get(f, 0.0)
            ph = f * w * s
            cos.append((f, a * math.cos(ph) + b * math.sin(ph)))
            sin.append((f, b * math.cos(ph) - a * math.sin(ph)))
        return FiberProfile(self.constant, tuple(cos), tuple(sin), self.period)

    def left_derivative_coefficients(self) -> np.ndarray:
        """Coefficients of dl/dt in the variable t = 2 pi x / period."""
        c = self._coefficients()
        F = self.max_frequency
        return c * (1j * np.arange(-F, F + 1))

    @staticmethod
    def _extremum(c: np.ndarray, minimize: bool) -> float:
        """Exact extremum over a period of sum c_m e^{i m t} (real-valued)."""
        F = (len(c) - 1) // 2
        if F == 0:
            return float(c[0].real)
        candidates = [0.0]
        # derivative as a Laurent polynomial in z = e^{it}; roots on |z|=1
        dc = c * (1j * np.arange(-F, F + 1))
        poly = dc[::-1]
        nz = np.flatnonzero(np.abs(poly) > 0)
        poly = poly[nz[0]:nz[-1] + 1]
        if len(poly) > 1:
            for z in np.roots(poly):
                if abs(abs(z) - 1.0) < 1e-6:
                    candidates.append(float(np.angle(z)))
        m = np.arange(-F, F + 1)
        grid = np.linspace(0, 2 * math.pi, 64 * F + 1)
        candidates.extend(grid.tolist())

        def val(t):
            return float(np.real(np.sum(c * np.exp(1j * m * t))))

        def dval(t):
            return float(np.real(np.sum(dc * np.exp(1j * m * t))))

        def ddval(t):
            return float(np.real(np.sum(-c * m * m * np.exp(1j * m * t))))

        sign = 1.0 if minimize else -1.0
        best = sign * math.inf
        for t in candidates:
            # Newton polish of each critical-point candidate
            for _ in range(4):
                h = ddval(t)
                if h == 0.0:
                    break
                step = dval(t) / h
                if abs(step) > 0.1:
                    break
                t -= step
            v = val(t)
            if sign * v < sign * best:
                best = v
        return best

    def functionals(self) -> tuple[float, float, float]:
        """``(sup l, min l, sup |grad l|)``."""
        c = self._coefficients()
        sup = self._extremum(c, minimize=False)
        lo = self._extremum(c, minimize=True)
        if self.is_constant:
            return sup, lo, 0.0
        w = 2 * math.pi / self.period
        dc = self.left_derivative_coefficients() * w
        gmax = self._extremum(dc, minimize=False)
        gmin = self._extremum(dc, minimize=True)
        return sup, lo, max(abs(gmax), abs(gmin))

    def as_dict(self) -> dict:
        return {
            "constant": self.constant,
            "cos": [list(p) for p in self.cos],
            "sin": [list(p) for p in self.sin],
            "period": self.period,
        }


def profile_functionals(p: FiberProfile) -> tuple[float, float, float]:
    """Return ``(||l||_inf, min l, ||grad l||_inf)`` of a fiber profile.

    Extrema are located from the roots of the derivative (a Laurent
    polynomial on the unit circle) and Newton-polished; a dense grid of
    ``64 F + 1`` candidates guards against missed roots.
    """
    return p.functionals()


# ---------------------------------------------------------------------------
# connection and spin data


@dataclass(frozen=True)
class ConnectionData:
    """Connection form ``i omega`` of the circle bundle.

    ``holonomy`` holds one angle per base generator (reduced mod 2 pi).
    ``curvature`` lists ``((i, j), f)``: ``d omega = sum f e^i ^ e^j`` with
    constant coefficients.  ``euler_number`` is the degree over the base
    2-torus (zero for a circle base).
    """

    holonomy: tuple[float, ...] = (0.0,)
    curvature: tuple[tuple[tuple[int, int], float], ...] = ()
    euler_number: int = 0

    def __post_init__(self):
        hol = tuple(float(h) % (2 * math.pi) for h in self.holonomy)
        object.__setattr__(self, "holonomy", hol)
        curv = []
        for (i, j), f in self.curvature:
            i, j = int(i), int(j)
            if i == j:
                raise GeometryError("curvature plane needs two distinct indices")
            if i > j:
                i, j, f = j, i, -f
            if f != 0.0:
                curv.append(((i, j), float(f)))
        object.__setattr__(self, "curvature", tuple(sorted(curv)))
        object.__setattr__(self, "euler_number", int(self.euler_number))

    @property
    def has_curvature(self) -> bool:
        return bool(self.curvature)

    def check_disjoint(self):
        used = set()
        for (i, j), _ in self.curvature:
            if i in used or j in used:
                raise GeometryError(
                    "curvature planes overlap; only disjoint coordinate planes are supported"
                )
            used.update((i, j))

    def as_dict(self) -> dict:
        return {
            "holonomy": list(self.holonomy),
            "curvature": [[list(p), f] for p, f in self.curvature],
            "euler_number": self.euler_number,
        }


@dataclass(frozen=True)
class SpinStructureSpec:
    """Spin structure on the total space, described by its sectors.

    ``fiber_projectable`` selects the fiber Fourier lattice (integers when
    the circle action lifts, half-integers otherwise); ``base_twists`` are
    the boundary twists ``delta_i`` in {0, 1/2} along the base generators.
    """

    fiber_projectable: bool
    base_twists: tuple[Fraction, ...] = (Fraction(0),)

    def __post_init__(self):
        tw = []
        for t in self.base_twists:
            q = Fraction(t).limit_denominator(2)
            if q not in (0, HALF) or abs(float(t) - float(q)) > 1e-12:
                raise GeometryError(f"base twist must be 0 or 1/2, got {t!r}")
            tw.append(q)
        object.__setattr__(self, "base_twists", tuple(tw))
        object.__setattr__(self, "fiber_projectable", bool(self.fiber_projectable))

    @property
    def fiber_offset(self) -> Fraction:
        return Fraction(0) if self.fiber_projectable else HALF

    def in_lattice(self, k) -> bool:
        return (as_sector(k) - self.fiber_offset).denominator == 1

    def sector_lattice(self, k_min, k_max) -> list[Fraction]:
        """Lattice sectors k with ``k_min <= k <= k_max``."""
        lo, hi = Fraction(k_min), Fraction(k_max)
        off = self.fiber_offset
        start = math.ceil(lo - off)
        out = []
        m = start
        while m + off <= hi:
            out.append(m + off)
            m += 1
        return out

    def as_dict(self) -> dict:
        return {
            "fiber": "projectable" if self.fiber_projectable else "nonprojectable",
            "base_twists": [float(t) for t in self.base_twists],
        }


def torus_spin_structures(b: int) -> list[SpinStructureSpec]:
    """All ``2^(b+1)`` spin structures of ``T^(b+1) -> T^b``; half are projectable."""
    out = []
    for proj in (True, False):
        for tw in itertools.product((Fraction(0), HALF), repeat=b):
            out.append(SpinStructureSpec(proj, tw))
    return out


# ---------------------------------------------------------------------------
# bundles and families


@dataclass(frozen=True)
class BaseTorus:
    """Flat rectangular torus ``R^b / (a_1 Z x ... x a_b Z)``; a circle for b = 1."""

    periods: tuple[float, ...]

    def __post_init__(self):
        per = tuple(float(a) for a in self.periods)
        if not per or any(not a > 0 for a in per):
            raise GeometryError("base periods must be a non-empty list of positive reals")
        object.__setattr__(self, "periods", per)

    @property
    def dim(self) -> int:
        return len(self.periods)

    @property
    def volume(self) -> float:
        return math.prod(self.periods)


@dataclass(frozen=True)
class BundleGeometry:
    """One circle bundle ``M -> N`` with metric, connection and spin structure."""

    base: BaseTorus
    profile: FiberProfile
    connection: ConnectionData = field(default_factory=ConnectionData)
    spin: SpinStructureSpec = field(default_factory=lambda: SpinStructureSpec(True))

    def __post_init__(self):
        b = self.base.dim
        if len(self.spin.base_twists) != b:
            raise GeometryError(
                f"spin structure has {len(self.spin.base_twists)} base twists for a "
                f"{b}-dimensional base"
            )
        if len(self.connection.holonomy) != b:
            raise GeometryError(
                f"connection has {len(self.connection.holonomy)} holonomies for a "
                f"{b}-dimensional base"
            )
        if b == 1:
            if self.connection.curvature:
                raise GeometryError("a 1-dimensional base carries no curvature (d omega = 0)")
            if self.connection.euler_number:
                raise GeometryError("a circle base has no Euler number")
            if abs(self.profile.period - self.base.periods[0]) > 1e-12 * self.base.periods[0]:
                raise GeometryError("profile period must equal the base circle length")
        else:
            if not self.profile.is_constant:
                raise GeometryError("variable fiber profiles are only supported over a circle base")
        for (i, j), _ in self.connection.curvature:
            if not (0 <= i < b and 0 <= j < b):
                raise GeometryError(f"curvature plane ({i}, {j}) outside base indices 0..{b - 1}")
        self.connection.check_disjoint()
        if self.connection.euler_number or self.connection.curvature:
            if b != 2:
                raise GeometryError("flux bundles are supported over a 2-torus base only")
            flux = sum(f for _, f in self.connection.curvature) * self.base.volume
            if abs(flux - 2 * math.pi * self.connection.euler_number) > 1e-9 * max(1.0, abs(flux)):
                raise GeometryError(
                    f"flux quantization violated: integral of d omega is {flux:.12g}, "
                    f"expected 2 pi * {self.connection.euler_number}"
                )
            if not self.spin.fiber_projectable and self.connection.euler_number % 2:
                # half-integer k would twist the base by a line bundle of
                # non-integral degree -k c: every spin structure is projectable
                raise GeometryError(
                    f"no non-projectable spin structure on a bundle of odd Euler number "
                    f"{self.connection.euler_number}: sector twists would have non-integral degree"
                )

    @classmethod
    def warped_circle(cls, length, profile, *, projectable=True, twist=0, holonomy=0.0):
        """Total space ``T^2`` over a circle of ``length`` (``profile.period`` must match)."""
        return cls(
            BaseTorus((length,)),
            profile,
            ConnectionData((holonomy,)),
            SpinStructureSpec(projectable, (twist,)),
        )

    @classmethod
    def flat_torus(cls, periods, fiber_radius, *, projectable=True, twists=None, holonomy=None):
        periods = tuple(periods)
        b = len(periods)
        return cls(
            BaseTorus(periods),
            FiberProfile(fiber_radius, period=periods[0]),
            ConnectionData(tuple(holonomy) if holonomy is not None else (0.0,) * b),
            SpinStructureSpec(projectable, tuple(twists) if twists is not None else (0,) * b),
        )

    @classmethod
    def flux_bundle(cls, area, flux, fiber_radius, *, projectable=True, twists=(0, 0)):
        """Degree-``flux`` bundle over a square 2-torus of the given ``area``."""
        a = math.sqrt(area)
        return cls(
            BaseTorus((a, a)),
            FiberProfile(fiber_radius, period=a),
            ConnectionData((0.0, 0.0), (((0, 1), 2 * math.pi * flux / area),), flux),
            SpinStructureSpec(projectable, tuple(twists)),
        )

    @property
    def b(self) -> int:
        return self.base.dim

    def functionals(self) -> tuple[float, float, float]:
        return self.profile.functionals()

    def as_dict(self) -> dict:
        return {
            "base": list(self.base.periods),
            "profile": self.profile.as_dict(),
            "connection": self.connection.as_dict(),
            "spin": self.spin.as_dict(),
        }

    def digest(self) -> str:
        text = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CollapseFamily:
    """Stages ``M_n`` over a common base with a common spin structure."""

    stages: tuple[BundleGeometry, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        stages = tuple(self.stages)
        labels = tuple(int(n) for n in self.labels)
        if len(stages) != len(labels):
            raise GeometryError("need one label per stage")
        if len(set(labels)) != len(labels):
            raise GeometryError("stage labels must be distinct")
        for g in stages[1:]:
            if g.base != stages[0].base:
                raise GeometryError("all stages must share the base torus")
            if g.spin != stages[0].spin:
                raise GeometryError("all stages must share the spin structure")
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_rule(cls, base_geometry: BundleGeometry, stages: Sequence[int], rule="shrink"):
        """Family ``l_n = l / n`` (``shrink``) or ``l_n(x) = l(n x) / n`` (``shrink_oscillate``)."""
        out = []
        for n in stages:
            if rule == "shrink":
                prof = base_geometry.profile.scaled(1.0 / n)
            elif rule == "shrink_oscillate":
                prof = base_geometry.profile.scaled(1.0 / n, n)
            else:
                raise GeometryError(f"unknown collapse rule {rule!r}")
            out.append(
                BundleGeometry(base_geometry.base, prof, base_geometry.connection, base_geometry.spin)
            )
        return cls(tuple(out), tuple(stages))

    @property
    def spin(self) -> SpinStructureSpec:
        return self.stages[0].spin

    @property
    def fixed_connection(self) -> bool:
        return all(g.connection == self.stages[0].connection for g in self.stages)

    def stage(self, n) -> BundleGeometry:
        return self.stages[self.labels.index(int(n))]

    def __len__(self):
        return len(self.stages)


def clifford_norm(c: ConnectionData, p: FiberProfile) -> float:
    """``||l d omega||_Cl``: operator norm of Clifford multiplication by ``l d omega``.

    For ``d omega = sum f_j e^{2j-1} ^ e^{2j}`` on disjoint planes the Clifford
    action has eigenvalues ``i sum(+-f_j)``, so the norm is ``sup l * sum |f_j|``.
    """
    c.check_disjoint()
    if not c.curvature:
        return 0.0
    sup = p.functionals()[0]
    return sup * sum(abs(f) for _, f in c.curvature)


@dataclass(frozen=True)
class CollapseReport:
    alpha: float
    ok: bool
    mode: str
    sup_series: tuple[float, ...]
    clifford_series: tuple[float, ...]
    grad_series: tuple[float, ...]
    diagnostics: tuple[str, ...] = ()


def validate_collapse_family(f: CollapseFamily, mode: str | None = None) -> CollapseReport:
    """Check the collapse conditions on a finite family.

    ``alpha`` (a limsup) is estimated as the largest ``||grad l_n||_inf`` over
    the tail half of the stages.  The sup norms ``||l_n||_inf`` must decrease
    strictly and ``||l_n d omega_n||_Cl`` must not increase.  The threshold is
    ``alpha < 1`` for ``mode="projectable"`` and ``alpha < 1/2`` for
    ``"nonprojectable"``; by default the mode follows the spin structure.
    """
    if mode is None:
        mode = "projectable" if f.spin.fiber_projectable else "nonprojectable"
    if mode not in ("projectable", "nonprojectable"):
        raise ValueError(f"unknown mode {mode!r}")
    order = np.argsort(f.labels)
    stages = [f.stages[i] for i in order]
    labels = [f.labels[i] for i in order]
    if len(stages) < 2:
        raise GeometryError("a collapse family needs at least two stages")
    fun = [g.functionals() for g in stages]
    sups = tuple(x[0] for x in fun)
    grads = tuple(x[2] for x in fun)
    cls = tuple(clifford_norm(g.connection, g.profile) for g in stages)
    tail = grads[len(grads) // 2:]
    alpha = max(tail)
    diag = []
    for i in range(1, len(sups)):
        if not sups[i] < sups[i - 1]:
            diag.append(
                f"||l_n||_inf does not decrease at stage n={labels[i]} "
                f"({sups[i]:.6g} >= {sups[i - 1]:.6g})"
            )
        if cls[i] > cls[i - 1] * (1 + 1e-12):
            diag.append(f"||l_n d omega_n||_Cl increases at stage n={labels[i]}")
    limit = 1.0 if mode == "projectable" else 0.5
    if not alpha < limit:
        worst = labels[len(grads) // 2 + int(np.argmax(tail))]
        diag.append(
            f"alpha = {alpha:.6g} violates alpha < {limit:g} ({mode}); "
            f"largest gradient at stage n={worst}"
        )
    return CollapseReport(alpha, not diag, mode, sups, cls, grads, tuple(diag))
