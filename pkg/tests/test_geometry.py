import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from s1dirac.geometry import (
    BaseTorus,
    BundleGeometry,
    CollapseFamily,
    ConnectionData,
    FiberProfile,
    GeometryError,
    SpinStructureSpec,
    clifford_norm,
    profile_functionals,
    torus_spin_structures,
    validate_collapse_family,
)

from oracles import grid_functionals


def osc(amp=0.4, n=1):
    return FiberProfile(2.0, sin=[(1, amp)]).scaled(1.0 / n, n)


class TestProfileFunctionals:
    def test_constant(self):
        assert profile_functionals(FiberProfile(0.7)) == (0.7, 0.7, 0.0)

    def test_sine(self):
        sup, lo, grad = profile_functionals(FiberProfile(2.0, sin=[(1, 0.4)]))
        assert sup == pytest.approx(2.4, abs=1e-14)
        assert lo == pytest.approx(1.6, abs=1e-14)
        assert grad == pytest.approx(0.4, abs=1e-14)

    @pytest.mark.parametrize("n", [1, 3, 8, 32])
    def test_scaled_oscillation(self, n):
        p = osc(0.4, n)
        sup, lo, grad = profile_functionals(p)
        np.testing.assert_allclose([sup, lo, grad], [2.4 / n, 1.6 / n, 0.4], rtol=1e-13)
        gs, gl, gg = grid_functionals(p, 10_000)
        np.testing.assert_allclose([sup, lo, grad], [gs, gl, gg], rtol=2e-4)

    def test_multi_harmonic_against_grid(self):
        p = FiberProfile(1.5, cos=[(1, 0.3), (3, 0.2)], sin=[(2, -0.25)], period=3.0)
        exact = profile_functionals(p)
        grid = grid_functionals(p, 10_000)
        np.testing.assert_allclose(exact, grid, rtol=1e-5)
        # exact extrema dominate any sample
        x = np.linspace(0, 3.0, 4001)
        assert exact[0] >= p(x).max() - 1e-15 and exact[1] <= p(x).min() + 1e-15

    def test_nonpositive_rejected(self):
        with pytest.raises(GeometryError, match="positive"):
            FiberProfile(1.0, cos=[(2, 1.5)])

    @settings(max_examples=30, deadline=None)
    @given(c=st.floats(0.1, 5), a=st.floats(-0.9, 0.9), b=st.floats(-0.9, 0.9),
           scale=st.floats(0.01, 10))
    def test_scaling_homogeneity(self, c, a, b, scale):
        p = FiberProfile(c, cos=[(1, a * c / 2)], sin=[(2, b * c / 2)])
        s0 = np.array(profile_functionals(p))
        s1 = np.array(profile_functionals(p.scaled(scale)))
        np.testing.assert_allclose(s1, scale * s0, rtol=1e-9, atol=1e-14)
        assert s0[0] >= s0[1] > 0 and s0[2] >= 0


class TestCliffordNorm:
    def test_zero_form(self):
        assert clifford_norm(ConnectionData((0.0,)), FiberProfile(1.0)) == 0.0

    def test_single_plane(self):
        c = ConnectionData((0, 0), (((0, 1), -2.5),))
        assert clifford_norm(c, FiberProfile(0.3)) == pytest.approx(0.75)

    def test_two_planes_brute_force(self):
        # Clifford action of f1 e1^e2 + f2 e3^e4 on the rank-4 spinor module
        s1 = np.array([[0, 1], [1, 0]], dtype=complex)
        s2 = np.array([[0, -1j], [1j, 0]])
        s3 = np.diag([1.0 + 0j, -1.0])
        I = np.eye(2)
        g = [1j * np.kron(s1, I), 1j * np.kron(s2, I), 1j * np.kron(s3, s1), 1j * np.kron(s3, s2)]
        for a, b in zip(g, g):
            assert np.allclose(a @ a, -np.eye(4))
        f1, f2 = 1.3, -0.4
        eta = f1 * g[0] @ g[1] + f2 * g[2] @ g[3]
        brute = np.max(np.abs(np.linalg.eigvals(eta)))
        c = ConnectionData((0, 0, 0, 0), (((0, 1), f1), ((2, 3), f2)))
        assert clifford_norm(c, FiberProfile(1.0)) == pytest.approx(brute, rel=1e-12)
        assert brute == pytest.approx(abs(f1) + abs(f2), rel=1e-12)

    def test_overlap_rejected(self):
        c = ConnectionData((0, 0, 0), (((0, 1), 1.0), ((1, 2), 1.0)))
        with pytest.raises(GeometryError, match="overlap"):
            clifford_norm(c, FiberProfile(1.0))

    @settings(max_examples=25, deadline=None)
    @given(f=st.floats(-10, 10), t=st.floats(-5, 5), r1=st.floats(0.01, 3), r2=st.floats(0.01, 3))
    def test_homogeneous_and_monotone(self, f, t, r1, r2):
        c = ConnectionData((0, 0), (((0, 1), f),))
        ct = ConnectionData((0, 0), (((0, 1), t * f),))
        p = FiberProfile(r1)
        assert clifford_norm(ct, p) == pytest.approx(abs(t) * clifford_norm(c, p), abs=1e-12)
        lo, hi = sorted([r1, r2])
        assert clifford_norm(c, FiberProfile(lo)) <= clifford_norm(c, FiberProfile(hi)) + 1e-12


class TestSpin:
    def test_lattices(self):
        proj = SpinStructureSpec(True, (0,))
        nonp = SpinStructureSpec(False, (Fraction(1, 2),))
        assert proj.sector_lattice(-2, 2) == [-2, -1, 0, 1, 2]
        assert nonp.sector_lattice(-2, 2) == [Fraction(-3, 2), Fraction(-1, 2), Fraction(1, 2),
                                              Fraction(3, 2)]

    @pytest.mark.parametrize("b", [1, 2, 3])
    def test_torus_count(self, b):
        specs = torus_spin_structures(b)
        assert len(set(specs)) == 2 ** (b + 1)
        assert sum(s.fiber_projectable for s in specs) == 2**b

    @settings(max_examples=20, deadline=None)
    @given(proj=st.booleans(), lo=st.integers(-6, 0), hi=st.integers(0, 6))
    def test_lattice_is_pure(self, proj, lo, hi):
        ks = SpinStructureSpec(proj, (0,)).sector_lattice(lo, hi)
        assert all(k.denominator == (1 if proj else 2) for k in ks)
        assert len(ks) == (hi - lo + 1 if proj else hi - lo)

    def test_bad_twist(self):
        with pytest.raises(GeometryError):
            SpinStructureSpec(True, (0.3,))


class TestBundle:
    def test_twist_count_mismatch(self):
        with pytest.raises(GeometryError, match="base twists"):
            BundleGeometry(BaseTorus((1.0,)), FiberProfile(1.0, period=1.0), ConnectionData((0.0,)),
                           SpinStructureSpec(True, (0, 0)))

    def test_curvature_on_circle_rejected(self):
        with pytest.raises(GeometryError):
            BundleGeometry(BaseTorus((1.0,)), FiberProfile(1.0, period=1.0),
                           ConnectionData((0.0,), (((0, 1), 1.0),)), SpinStructureSpec(True, (0,)))

    def test_plane_outside_base(self):
        with pytest.raises(GeometryError):
            BundleGeometry(BaseTorus((1.0, 1.0)), FiberProfile(1.0, period=1.0),
                           ConnectionData((0.0, 0.0), (((0, 2), 1.0),)),
                           SpinStructureSpec(True, (0, 0)))

    def test_flux_quantization(self):
        g = BundleGeometry.flux_bundle(2.0, 3, 0.1)
        assert sum(f for _, f in g.connection.curvature) * g.base.volume == pytest.approx(6 * math.pi)
        with pytest.raises(GeometryError, match="quantization"):
            BundleGeometry(BaseTorus((1.0, 1.0)), FiberProfile(0.1, period=1.0),
                           ConnectionData((0, 0), (((0, 1), 1.0),), 1), SpinStructureSpec(True, (0, 0)))


class TestCollapse:
    def test_constant_shrinking(self):
        fam = CollapseFamily.from_rule(BundleGeometry.flat_torus((1.0,), 1.0), [1, 2, 3, 4])
        rep = validate_collapse_family(fam)
        assert rep.ok and rep.alpha == 0.0

    @pytest.mark.parametrize("mode", ["projectable", "nonprojectable"])
    def test_oscillating_ok(self, mode):
        base = BundleGeometry.warped_circle(2 * math.pi, FiberProfile(2.0, sin=[(1, 0.4)]))
        fam = CollapseFamily.from_rule(base, [4, 8, 16, 32], "shrink_oscillate")
        rep = validate_collapse_family(fam, mode)
        assert rep.ok
        assert rep.alpha == pytest.approx(0.4, abs=1e-13)

    def test_steep_nonprojectable_fails(self):
        base = BundleGeometry.warped_circle(2 * math.pi, FiberProfile(2.0, sin=[(1, 0.8)]),
                                            projectable=False)
        fam = CollapseFamily.from_rule(base, [4, 8, 16, 32], "shrink_oscillate")
        rep = validate_collapse_family(fam)
        assert not rep.ok
        assert rep.alpha == pytest.approx(0.8, abs=1e-13)
        assert any("alpha" in d and "n=" in d for d in rep.diagnostics)
        assert validate_collapse_family(fam, "projectable").ok

    def test_not_shrinking(self):
        g = BundleGeometry.flat_torus((1.0,), 0.5)
        fam = CollapseFamily((g, g, g), (1, 2, 3))
        rep = validate_collapse_family(fam)
        assert not rep.ok
        assert any("does not decrease" in d for d in rep.diagnostics)

    def test_single_stage_rejected(self):
        fam = CollapseFamily((BundleGeometry.flat_torus((1.0,), 0.5),), (1,))
        with pytest.raises(GeometryError):
            validate_collapse_family(fam)
