"""Cones, regions, distances, and the nested-cone step."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinboson import (
    Cone,
    ConfigError,
    ModelConfig,
    Region,
    cone_contains,
    dist_to_cone,
    region_contains,
    verify_cone_chain,
)
from spinboson.geometry import cone_complement_distance

NU = 0.2


def brute_force_dist(cone: Cone, z: complex, samples: int = 10_000) -> float:
    """Dense minimization over boundary rays with one local refinement."""
    if cone_contains(cone, z, tol=0.0):
        return 0.0
    best = abs(z - cone.vertex)
    scale = max(1.0, 4.0 * abs(z - cone.vertex))
    for direction in cone.edge_directions():
        xs = np.linspace(0.0, scale, samples)
        for _ in range(2):
            pts = cone.vertex + xs * direction
            dists = np.abs(pts - z)
            k = int(np.argmin(dists))
            best = min(best, float(dists[k]))
            lo, hi = xs[max(0, k - 1)], xs[min(len(xs) - 1, k + 1)]
            xs = np.linspace(lo, hi, samples)
    return best


class TestConeMembership:
    def test_vertex_contained(self):
        cone = Cone(1.0 + 0.5j, NU, 4)
        assert cone_contains(cone, 1.0 + 0.5j)

    def test_axis_ray_contained(self):
        cone = Cone(0.0, NU, 4)
        assert cone_contains(cone, np.exp(-1j * NU))

    def test_beyond_aperture_excluded(self):
        cone = Cone(0.0, NU, 4)
        z = np.exp(-1j * (NU + 2 * NU / 4))
        assert not cone_contains(cone, z)

    def test_edge_ray_boundary(self):
        cone = Cone(0.0, NU, 4)
        z = 2.0 * np.exp(-1j * (NU + NU / 4))
        assert dist_to_cone(cone, z) < 1e-12

    def test_aperture_validation(self):
        with pytest.raises(ConfigError):
            Cone(0.0, NU, 3)
        with pytest.raises(ConfigError):
            Cone(0.0, -0.1, 4)


class TestConeDistance:
    def test_interior_zero(self):
        cone = Cone(0.0, NU, 4)
        assert dist_to_cone(cone, 0.5 * np.exp(-1j * NU)) == 0.0

    def test_perpendicular_point(self):
        cone = Cone(0.0, NU, 4)
        t = 0.01
        z = 1j * t * np.exp(-1j * NU)  # perpendicular to the axis at vertex
        got = dist_to_cone(cone, z)
        # angle from the upper edge is pi/2 - nu/m
        want = t * np.sin(np.pi / 2 - NU / 4)
        assert got == pytest.approx(want, rel=1e-12)
        assert got == pytest.approx(brute_force_dist(cone, z), rel=1e-4)

    def test_behind_apex_full_distance(self):
        cone = Cone(0.0, NU, 4)
        z = -1.0 + 0.2j
        assert dist_to_cone(cone, z) == pytest.approx(abs(z), rel=1e-9)

    @given(
        re=st.floats(-3, 3), im=st.floats(-3, 3),
        vre=st.floats(-1, 1), vim=st.floats(-1, 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_membership_iff_zero_distance(self, re, im, vre, vim):
        cone = Cone(complex(vre, vim), NU, 4)
        z = complex(re, im)
        d = dist_to_cone(cone, z)
        assert cone_contains(cone, z) == (d == 0.0)

    @given(re=st.floats(-2, 2), im=st.floats(-2, 2),
           wre=st.floats(-1, 1), wim=st.floats(-1, 1))
    @settings(max_examples=40, deadline=None)
    def test_translation_equivariance(self, re, im, wre, wim):
        w = complex(wre, wim)
        z = complex(re, im)
        base = Cone(0.0, NU, 5)
        moved = Cone(w, NU, 5)
        assert dist_to_cone(moved, z) == pytest.approx(
            dist_to_cone(base, z - w), abs=1e-13
        )

    def test_monotone_along_axis(self, rng):
        # retreating the vertex along the axis only enlarges the cone
        for _ in range(50):
            v = complex(*rng.uniform(-1, 1, 2))
            t = rng.uniform(0, 2)
            inner = Cone(v, NU, 4)
            outer = Cone(v - t * np.exp(-1j * NU), NU, 4)
            assert cone_contains(outer, inner.vertex, tol=1e-14)

    def test_brute_force_random_instances(self, rng):
        for _ in range(25):
            cone = Cone(complex(*rng.uniform(-1, 1, 2)), NU, 4)
            z = complex(*rng.uniform(-2, 2, 2))
            got = dist_to_cone(cone, z)
            ref = brute_force_dist(cone, z)
            assert got == pytest.approx(ref, abs=1e-6)
            assert got <= ref + 1e-12  # sampling only overestimates

    def test_thousand_random_membership_distance(self, rng):
        cone = Cone(0.3 - 0.1j, NU, 4)
        for _ in range(1000):
            z = complex(*rng.uniform(-2, 2, 2))
            d = dist_to_cone(cone, z)
            assert cone_contains(cone, z) == (d == 0.0)
            assert d >= 0.0


class TestRegions:
    def test_a1_far_left(self):
        r = Region("A1", e0=0.0, e1=1.0, nu=NU)
        assert region_contains(r, -1.0)
        assert not region_contains(r, 0.0)

    def test_a2_boundary_strict(self):
        r = Region("A2", e0=0.0, e1=1.0, nu=NU)
        lim = 0.125 * np.sin(NU)
        assert not region_contains(r, 1.0 + 1j * lim)
        assert region_contains(r, 1.0 + 1j * (lim + 1e-12))

    def test_a3_slanted_edge(self):
        r = Region("A3", e0=0.0, e1=1.0, nu=NU)
        assert region_contains(r, 2.0)
        assert region_contains(r, 2.0 - 1j * np.sin(NU / 2) * 0.49)
        assert not region_contains(r, 2.0 - 1j * np.sin(NU / 2) * 0.51)

    def test_a_union(self):
        r = Region("A", e0=0.0, e1=1.0, nu=NU)
        assert region_contains(r, -1.0)
        assert region_contains(r, 1.0j)
        assert region_contains(r, 2.0)
        assert not region_contains(r, 1.0 - 0.001j)

    def test_b1_box(self):
        r = Region("B1", e0=0.0, e1=1.0, nu=0.15, i=1, rho1=0.2)
        assert region_contains(r, 1.0 + 0.01j)
        assert not region_contains(r, 1.6)
        assert not region_contains(r, 1.0 - 1j)

    def test_e1_excludes_disc(self):
        r = Region("E1", e0=0.0, e1=1.0, nu=NU, i=1, rho1=0.2)
        assert not region_contains(r, 1.0)
        edge = 0.125 * 0.2 * np.sin(NU)
        assert region_contains(r, 1.0 + 1.5 * edge)

    def test_bn_floor_anchored(self):
        lam = 1.0 - 0.001j
        r = Region("Bn", e0=0.0, e1=1.0, nu=NU, i=1, rho1=0.2, rho_n=0.05,
                   lam=lam)
        floor = lam.imag - 0.25 * 0.05 * np.sin(NU)
        assert region_contains(r, 1.0 + 1j * (floor + 1e-6))
        assert not region_contains(r, 1.0 + 1j * (floor - 1e-6))

    def test_mn_tightens_bn(self):
        lam = 1.0 - 0.001j
        common = dict(e0=0.0, e1=1.0, nu=NU, i=1, rho1=0.2, rho_n=0.05,
                      lam=lam)
        bn = Region("Bn", **common)
        mn = Region("Mn", rho_np1=0.025, **common)
        floor_bn = lam.imag - 0.25 * 0.05 * np.sin(NU)
        floor_mn = lam.imag - 0.4 * 0.025 * np.sin(NU)
        probe = 1.0 + 1j * 0.5 * (floor_bn + floor_mn)  # between the floors
        assert region_contains(bn, probe)
        assert not region_contains(mn, probe)
        above = 1.0 + 1j * (floor_mn + 1e-6)
        assert region_contains(mn, above)

    def test_wn_window_ignores_b1_floor(self):
        lam = 1.0 - 0.02j  # below the B1 floor for this rho1
        r = Region("Wn", e0=0.0, e1=1.0, nu=NU, i=1, rho_n=0.05, lam=lam)
        assert region_contains(r, lam)

    def test_missing_parameters_rejected(self):
        with pytest.raises(ConfigError, match="rho1"):
            Region("B1", e0=0.0, e1=1.0, nu=NU, i=1)
        with pytest.raises(ConfigError, match="lam"):
            Region("Bn", e0=0.0, e1=1.0, nu=NU, i=1, rho1=0.2, rho_n=0.05)
        with pytest.raises(ConfigError):
            Region("XX", e0=0.0, e1=1.0, nu=NU)


class TestConeChain:
    @pytest.fixture
    def chain_cfg(self):
        return ModelConfig(e1=1.0, lambda_uv=1.0, mu=0.25, g=1e-4, theta=0.2j)

    def test_zero_shift_maximal_slack(self, chain_cfg, ladder):
        lam = 1.0 - 0.001j
        rep = verify_cone_chain(lam, lam, ladder, 2, chain_cfg)
        assert rep["pass"], rep

    def test_admissible_shift(self, chain_cfg, ladder):
        n = 2
        shift = abs(chain_cfg.g) * ladder.cutoff(n) ** (1 + chain_cfg.mu / 2)
        lam = 1.0 - 0.001j
        rep = verify_cone_chain(lam, lam + shift * 1j, ladder, n, chain_cfg)
        assert rep["pass"], rep

    def test_oversized_shift_detected(self, chain_cfg, ladder):
        n = 2
        lam = 1.0 - 0.001j
        bad = lam + 0.5 * ladder.cutoff(n) * 1j
        rep = verify_cone_chain(lam, bad, ladder, n, chain_cfg)
        assert not rep["pass"]
        assert "witness" in rep

    def test_gap_bounds_quantitative(self, chain_cfg, ladder):
        lam = 1.0 - 0.001j
        rep = verify_cone_chain(lam, lam, ladder, 3, chain_cfg)
        assert rep["gap_outer"] >= rep["gap_outer_bound"] * (1 - 1e-9)
        assert rep["gap_inner"] >= rep["gap_inner_bound"] * (1 - 1e-9)


def test_cone_complement_distance_coaxial():
    # same-axis cones offset by d along the axis: gap = d sin(nu/m)
    nu, m, d = 0.2, 4, 0.3
    outer = Cone(0.0, nu, m)
    inner = Cone(d * np.exp(-1j * nu), nu, m)
    got = cone_complement_distance(inner, outer)
    assert got == pytest.approx(d * np.sin(nu / m), rel=1e-6)
