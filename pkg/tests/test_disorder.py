"""Tests for the disorder distributions, their sigma, and the samplers."""

import math

import numpy as np
import pytest
from scipy.stats import kstest

from qpe_disorder.disorder import (
    CAP_SIGMA_MAX,
    Cap,
    SigmaRangeError,
    SphericalPoint,
    Squeezed,
    VonMisesFisher,
    empirical_sigma,
    geodesic_from_mean,
    param_for_sigma,
    sample,
    sample_angles,
    sample_points,
    sigma,
    squeezed_sigma,
    vmf_polar_cdf,
)

# closed forms: sigma^2(pi/2) = pi - 2 and sigma^2(pi) = (pi^2 - 4)/2
CAP_HALF_SIGMA = math.sqrt(math.pi - 2.0)
CAP_FULL_SIGMA = math.sqrt((math.pi**2 - 4.0) / 2.0)


class TestSpecValidation:
    def test_cap_angle_range(self):
        Cap(0.0)
        Cap(math.pi)
        with pytest.raises(ValueError):
            Cap(3.5)
        with pytest.raises(ValueError):
            Cap(-0.1)

    def test_squeezed_ranges(self):
        Squeezed(0.524, 2.0)
        Squeezed(math.pi, 1.0)
        with pytest.raises(ValueError):
            Squeezed(0.0, 1.0)
        with pytest.raises(ValueError):
            Squeezed(0.524, 7.0)  # r > pi/D
        with pytest.raises(ValueError):
            Squeezed(0.524, 0.1)  # r < D/pi

    def test_vmf_concentration(self):
        VonMisesFisher(0.0)
        VonMisesFisher(math.inf)
        with pytest.raises(ValueError):
            VonMisesFisher(-1.0)

    def test_squeezed_axes(self):
        s = Squeezed(0.524, 2.0)
        assert s.semi_axis_y == pytest.approx(math.sqrt(0.524 * 2 / math.pi))
        assert s.semi_axis_z == pytest.approx(math.sqrt(0.524 / (2 * math.pi)))
        assert s.semi_axis_y / s.semi_axis_z == pytest.approx(2.0)
        assert math.pi * s.semi_axis_y * s.semi_axis_z == pytest.approx(0.524)


class TestSphericalPoint:
    def test_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            v = rng.normal(size=3)
            v /= np.linalg.norm(v)
            p = SphericalPoint(*v)
            theta, phi = p.to_angles()
            back = SphericalPoint.from_angles(theta, phi)
            assert abs(back.x - p.x) < 1e-12
            assert abs(back.y - p.y) < 1e-12
            assert abs(back.z - p.z) < 1e-12

    def test_plus_state(self):
        theta, phi = SphericalPoint(1.0, 0.0, 0.0).to_angles()
        assert theta == pytest.approx(math.pi / 2)
        assert phi == 0.0


class TestSamplers:
    def test_cap_support(self):
        rng = np.random.default_rng(2)
        for d in (0.3, 0.7, 1.5, math.pi):
            pts = sample_points(Cap(d), rng, 20000)
            assert np.linalg.norm(pts, axis=1) == pytest.approx(1.0, abs=1e-12)
            assert geodesic_from_mean(pts).max() <= d + 1e-12

    def test_tiny_cap_concentrates_on_mean(self):
        rng = np.random.default_rng(3)
        pts = sample_points(Cap(1e-6), rng, 1000)
        assert geodesic_from_mean(pts).max() <= 1e-6

    def test_zero_cap_is_the_mean_exactly(self):
        rng = np.random.default_rng(3)
        theta, phi = sample_angles(Cap(0.0), rng, 50)
        assert np.all(theta == math.pi / 2)
        assert np.all(phi % (2 * math.pi) == 0.0)

    def test_uniform_sphere_symmetry(self):
        rng = np.random.default_rng(4)
        pts = sample_points(VonMisesFisher(0.0), rng, 10**6)
        assert abs(pts[:, 2].mean()) < 0.005
        assert abs(pts[:, 0].mean()) < 0.005

    def test_infinite_concentration_is_the_mean(self):
        rng = np.random.default_rng(5)
        pts = sample_points(VonMisesFisher(math.inf), rng, 100)
        assert np.allclose(pts, [1.0, 0.0, 0.0])

    def test_squeezed_support(self):
        rng = np.random.default_rng(6)
        spec = Squeezed(0.524, 2.0)
        pts = sample_points(spec, rng, 20000)
        assert (pts[:, 0] > 0).all()
        ell = (pts[:, 1] / spec.semi_axis_y) ** 2 + (pts[:, 2] / spec.semi_axis_z) ** 2
        assert ell.max() <= 1.0 + 1e-12
        # the r=2 patch is elongated along y and flattened along z
        assert np.abs(pts[:, 2]).max() <= spec.semi_axis_z
        assert np.abs(pts[:, 1]).max() > spec.semi_axis_z

    def test_squeezed_rejects_degenerate_support(self):
        rng = np.random.default_rng(7)
        with pytest.raises(RuntimeError, match="degenerate"):
            sample_points(Squeezed(1e-10, 1.0), rng, 10)

    def test_single_sample(self):
        s = sample(Cap(0.5), np.random.default_rng(8))
        assert 0 <= s.theta <= math.pi
        assert 0 <= s.phi < 2 * math.pi

    def test_determinism(self):
        for spec in (Cap(1.0), Squeezed(0.524, 2.0), VonMisesFisher(5.0)):
            a = sample_points(spec, np.random.default_rng(99), 500)
            b = sample_points(spec, np.random.default_rng(99), 500)
            assert np.array_equal(a, b)

    @pytest.mark.parametrize("kappa,seed", [(0.5, 10), (5.0, 11), (70.0, 12)])
    def test_vmf_inverse_cdf_ks(self, kappa, seed):
        n = 10**5
        theta, phi = sample_angles(VonMisesFisher(kappa), np.random.default_rng(seed), n)
        polar = np.arccos(np.clip(np.sin(theta) * np.cos(phi), -1.0, 1.0))
        stat = kstest(polar, lambda x: vmf_polar_cdf(kappa, x)).statistic
        assert stat < 2.0 / math.sqrt(n)


class TestSigma:
    def test_cap_half_sphere_anchor(self):
        s = sigma(Cap(math.pi / 2))
        assert s == pytest.approx(CAP_HALF_SIGMA, abs=1e-12)
        assert s == pytest.approx(1.07, abs=0.005)

    def test_cap_full_sphere_anchor(self):
        s = sigma(Cap(math.pi))
        assert s == pytest.approx(CAP_FULL_SIGMA, abs=1e-12)
        assert s == pytest.approx(1.71, abs=0.005)

    def test_cap_zero(self):
        assert sigma(Cap(0.0)) == 0.0

    def test_cap_strictly_increasing(self):
        grid = np.linspace(1e-3, math.pi, 60)
        vals = [sigma(Cap(float(d))) for d in grid]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_vmf_uniform_limit_matches_cap(self):
        # quadrature route vs the cap closed form: independent evaluations
        assert sigma(VonMisesFisher(0.0)) == pytest.approx(CAP_FULL_SIGMA, abs=1e-6)
        assert sigma(VonMisesFisher(0.0)) == pytest.approx(1.713, abs=1e-3)

    def test_vmf_small_kappa_continuity(self):
        assert sigma(VonMisesFisher(1e-8)) == pytest.approx(CAP_FULL_SIGMA, abs=1e-4)

    def test_vmf_large_kappa_asymptotic(self):
        # tight concentration: E[angle^2] -> 2/kappa
        assert sigma(VonMisesFisher(1e4)) == pytest.approx(
            math.sqrt(2e-4), rel=1e-3
        )

    def test_vmf_zero_disorder(self):
        assert sigma(VonMisesFisher(math.inf)) == 0.0

    def test_squeezed_round_patch_matches_cap(self):
        # r = 1 reduces to a cap of angle arcsin(sqrt(D/pi))
        d_eq = math.asin(math.sqrt(0.524 / math.pi))
        val, se = squeezed_sigma(Squeezed(0.524, 1.0))
        assert val == pytest.approx(sigma(Cap(d_eq)), abs=max(0.01, 3 * se))
        assert val == pytest.approx(0.297, abs=0.01)

    @pytest.mark.parametrize("r", [1.5, 2.0, 4.0])
    def test_squeezed_sigma_symmetry(self, r):
        v1, se1 = squeezed_sigma(Squeezed(0.524, r))
        v2, se2 = squeezed_sigma(Squeezed(0.524, 1.0 / r))
        assert abs(v1 - v2) <= 3.0 * math.hypot(se1, se2)

    def test_squeezed_sigma_minimal_at_round_patch(self):
        vals = {r: squeezed_sigma(Squeezed(0.524, r))[0] for r in (1.0, 1.5, 2.0, 3.0, 5.0)}
        assert vals[1.0] == min(vals.values())
        ordered = [vals[r] for r in (1.0, 1.5, 2.0, 3.0, 5.0)]
        assert all(b > a for a, b in zip(ordered, ordered[1:]))


class TestParamForSigma:
    def test_cap_half_sphere_round_trip(self):
        # invert the exact half-sphere sigma and recover d = pi/2
        spec = param_for_sigma("cap", CAP_HALF_SIGMA)
        assert spec.d == pytest.approx(math.pi / 2, abs=1e-3)
        # the paper-rounded 1.07 lands a hair above pi/2
        spec = param_for_sigma("cap", 1.07)
        assert sigma(spec) == pytest.approx(1.07, abs=1e-4)
        assert spec.d == pytest.approx(math.pi / 2, abs=5e-3)

    def test_cap_small_target(self):
        spec = param_for_sigma("cap", 1e-3)
        assert spec.d == pytest.approx(1e-3 * math.sqrt(2.0), rel=1e-3)

    def test_cap_zero_target(self):
        assert param_for_sigma("cap", 0.0) == Cap(0.0)

    def test_vmf_round_trip(self):
        spec = param_for_sigma("vmf", 1.0)
        assert isinstance(spec, VonMisesFisher)
        assert sigma(spec) == pytest.approx(1.0, abs=1e-4)

    def test_vmf_extremes(self):
        assert param_for_sigma("vmf", 0.0) == VonMisesFisher(math.inf)
        assert param_for_sigma("vmf", CAP_SIGMA_MAX) == VonMisesFisher(0.0)

    def test_squeezed_round_trip_both_branches(self):
        upper = param_for_sigma("squeezed", 0.45, area=0.524)
        assert upper.r > 1
        assert squeezed_sigma(upper)[0] == pytest.approx(0.45, abs=1e-4)
        lower = param_for_sigma("squeezed", 0.45, area=0.524, lower_branch=True)
        assert lower.r < 1
        assert squeezed_sigma(lower)[0] == pytest.approx(0.45, abs=1e-4)

    def test_out_of_range_targets(self):
        with pytest.raises(SigmaRangeError, match="attainable"):
            param_for_sigma("cap", 1.75)
        with pytest.raises(SigmaRangeError, match="attainable"):
            param_for_sigma("vmf", 2.0)
        with pytest.raises(SigmaRangeError, match="attainable"):
            param_for_sigma("squeezed", 0.1, area=0.524)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            param_for_sigma("gaussian", 0.3)


class TestEmpiricalSigma:
    def test_cap_anchors(self):
        rng = np.random.default_rng(20)
        val, se = empirical_sigma(Cap(math.pi), 10**6, rng)
        assert val == pytest.approx(1.713, abs=0.01)
        val, se = empirical_sigma(Cap(math.pi / 2), 10**6, rng)
        assert val == pytest.approx(1.07, abs=0.01)
        assert se < 1e-3

    def test_matches_quadrature_for_vmf(self):
        rng = np.random.default_rng(21)
        val, se = empirical_sigma(VonMisesFisher(5.0), 10**5, rng)
        assert val == pytest.approx(sigma(VonMisesFisher(5.0)), abs=4 * se)

    def test_sample_count_validated(self):
        with pytest.raises(ValueError):
            empirical_sigma(Cap(1.0), 100)
