import math

import numpy as np
import pytest
from scipy.integrate import quad

from ballforest.core import CostCounters, EUCLIDEAN, GeometryError
from ballforest.dbscan import Partition
from ballforest.geometry import (
    Ball,
    OverlapRegime,
    ball_volume,
    cap_geometry,
    cap_volume,
    dbm_rate,
    gamma,
    obm_rate,
    overlap_regime,
    sin_power_integral,
    vbm_rate,
)
from ballforest.oracles import (
    OracleConfig,
    closed_form_lens_2d_3d,
    mc_lens_volume,
    random_partial_pair,
)

from conftest import make_dataset


def ball(center, radius):
    return Ball(np.array(center, dtype=np.float64), radius)


# frozen oracle values
# 2-D lens, unit circles at distance 1: 2*pi/3 - sqrt(3)/2
LENS_2D_UNIT = 1.2283696986087567
# 3-D lens, unit spheres at distance 1: 2 * pi*h^2*(3r-h)/3 with h = 0.5
LENS_3D_UNIT = 1.3089969389957472
# 2-D circular segment, r=1, half-angle pi/3: r^2*(theta - sin*cos)
SEGMENT_2D_THIRD = 0.6141848493043784
# 3-D cap, r=1, h=0.5: pi*h^2*(3r-h)/3
CAP_3D_HALF = 0.6544984694978736


class TestGamma:
    def test_one(self):
        assert gamma(1.0) == 1.0

    def test_half(self):
        assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)

    def test_factorial(self):
        assert gamma(5.0) == pytest.approx(24.0, rel=1e-12)

    def test_nonpositive_rejected(self):
        with pytest.raises(GeometryError):
            gamma(0.0)
        with pytest.raises(GeometryError):
            gamma(-1.5)


class TestBallVolume:
    def test_unit_disk(self):
        assert ball_volume(ball([0, 0], 1.0)) == pytest.approx(math.pi, rel=1e-12)

    def test_sphere(self):
        assert ball_volume(ball([0, 0, 0], 2.0)) == pytest.approx(
            4.0 / 3.0 * math.pi * 8.0, rel=1e-12
        )

    def test_five_dimensional(self):
        assert ball_volume(ball([0] * 5, 1.0)) == pytest.approx(
            8.0 * math.pi**2 / 15.0, rel=1e-12
        )

    def test_five_dimensional_against_monte_carlo(self):
        # the lens of a ball with itself is the ball
        b = ball([0.2, -0.1, 0.3, 0.0, 0.5], 1.0)
        est, stderr = mc_lens_volume(b, b, OracleConfig(mc_samples=10_000_000, rng_seed=4))
        assert ball_volume(b) == pytest.approx(est, abs=max(3 * stderr, 1e-12))

    def test_zero_radius(self):
        assert ball_volume(ball([1, 2], 0.0)) == 0.0


class TestSinPowerIntegral:
    def test_n1_right_angle(self):
        assert sin_power_integral(1, math.pi / 2) == pytest.approx(1.0, rel=1e-12)

    def test_n2_full_range(self):
        assert sin_power_integral(2, math.pi) == pytest.approx(math.pi / 2, rel=1e-12)

    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 7, 12, 20])
    @pytest.mark.parametrize("phi", [0.0, 0.3, 1.0, math.pi / 2, 2.5, math.pi])
    def test_against_quadrature(self, n, phi):
        expected, _ = quad(lambda t: math.sin(t) ** n, 0.0, phi, epsabs=1e-14, epsrel=1e-14)
        assert sin_power_integral(n, phi) == pytest.approx(expected, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(GeometryError):
            sin_power_integral(2, -0.1)
        with pytest.raises(GeometryError):
            sin_power_integral(2, math.pi + 0.1)
        with pytest.raises(GeometryError):
            sin_power_integral(0, 1.0)


class TestCapGeometry:
    def test_symmetric_lens(self):
        theta, h = cap_geometry(ball([0, 0], 1.0), ball([1, 0], 1.0), 1.0)
        assert theta == pytest.approx(math.pi / 3, rel=1e-12)
        assert h == pytest.approx(0.5, rel=1e-12)

    def test_tangency_limit(self):
        _, h = cap_geometry(ball([0, 0], 1.0), ball([2, 0], 1.0), 2.0 - 1e-9)
        assert 0.0 <= h < 1e-8

    def test_asymmetric_pair(self):
        # r1=2, r2=1, d=2: theta = arccos(7/8), h = 2*(1 - 7/8)
        theta, h = cap_geometry(ball([0, 0], 2.0), ball([2, 0], 1.0), 2.0)
        assert theta == pytest.approx(math.acos(7.0 / 8.0), rel=1e-12)
        assert h == pytest.approx(0.25, rel=1e-12)
        # cross-check via the plane position x1 = (d^2 + r1^2 - r2^2) / (2d)
        x1 = (4.0 + 4.0 - 1.0) / 4.0
        assert h == pytest.approx(2.0 - x1, rel=1e-12)

    def test_outside_partial_regime_rejected(self):
        with pytest.raises(GeometryError):
            cap_geometry(ball([0, 0], 1.0), ball([5, 0], 1.0), 5.0)
        with pytest.raises(GeometryError):
            cap_geometry(ball([0, 0], 3.0), ball([0.5, 0], 1.0), 0.5)


class TestCapVolume:
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 9, 20])
    def test_hemisphere_is_half_ball(self, n):
        b = ball([0.0] * n, 1.7)
        assert cap_volume(b, math.pi / 2) == pytest.approx(ball_volume(b) / 2, rel=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 9, 20])
    def test_full_angle_is_ball(self, n):
        b = ball([0.0] * n, 0.8)
        assert cap_volume(b, math.pi) == pytest.approx(ball_volume(b), rel=1e-9)

    def test_three_dimensional_closed_form(self):
        assert cap_volume(ball([0, 0, 0], 1.0), math.pi / 3) == pytest.approx(
            CAP_3D_HALF, rel=1e-12
        )

    def test_two_dimensional_segment(self):
        assert cap_volume(ball([0, 0], 1.0), math.pi / 3) == pytest.approx(
            SEGMENT_2D_THIRD, rel=1e-12
        )

    def test_zero_angle(self):
        assert cap_volume(ball([0, 0, 0], 2.0), 0.0) == 0.0


class TestRegime:
    def test_case_order_boundaries(self):
        assert overlap_regime(1.0, 1.0, 2.0) is OverlapRegime.DISJOINT
        assert overlap_regime(2.0, 1.0, 1.0) is OverlapRegime.CONTAINMENT
        assert overlap_regime(1.0, 1.0, 1.0) is OverlapRegime.PARTIAL_OVERLAP

    def test_coincident_points(self):
        assert overlap_regime(0.0, 0.0, 0.0) is OverlapRegime.CONTAINMENT

    def test_zero_radius_pair_apart(self):
        assert overlap_regime(0.0, 0.0, 0.5) is OverlapRegime.DISJOINT

    def test_point_inside_ball(self):
        assert overlap_regime(0.0, 1.0, 0.5) is OverlapRegime.CONTAINMENT


class TestVbmRate:
    def test_disjoint_is_exactly_zero(self):
        rep = vbm_rate(ball([0, 0], 1.0), ball([3, 0], 1.0), 3.0)
        assert rep.rate == 0.0 and rep.raw_rate == 0.0
        assert rep.regime is OverlapRegime.DISJOINT

    def test_containment_is_exactly_one_with_min_volume_lens(self):
        b1, b2 = ball([0, 0], 2.0), ball([0.5, 0], 1.0)
        rep = vbm_rate(b1, b2, 0.5)
        assert rep.rate == 1.0
        assert rep.aux["lens_volume"] == pytest.approx(ball_volume(b2), rel=1e-12)

    def test_unit_circle_lens(self):
        rep = vbm_rate(ball([0, 0], 1.0), ball([1, 0], 1.0), 1.0)
        assert rep.aux["lens_volume"] == pytest.approx(LENS_2D_UNIT, rel=1e-12)
        assert rep.rate == pytest.approx(LENS_2D_UNIT / (2 * math.pi), rel=1e-12)

    def test_unit_sphere_lens(self):
        rep = vbm_rate(ball([0, 0, 0], 1.0), ball([1, 0, 0], 1.0), 1.0)
        assert rep.aux["lens_volume"] == pytest.approx(LENS_3D_UNIT, rel=1e-12)

    def test_degenerate_identical_points(self):
        rep = vbm_rate(ball([1, 1], 0.0), ball([1, 1], 0.0), 0.0)
        assert rep.regime is OverlapRegime.CONTAINMENT and rep.rate == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(GeometryError):
            vbm_rate(ball([0, 0], 1.0), ball([0, 0, 0], 1.0), 1.0)


class TestDbmRate:
    def test_tangent_pair_is_zero(self):
        assert dbm_rate(ball([0, 0], 1.0), ball([2, 0], 1.0), 2.0).rate == 0.0

    def test_symmetric_lens_heights(self):
        rep = dbm_rate(ball([0, 0], 1.0), ball([1, 0], 1.0), 1.0)
        assert rep.aux["cap_height_1"] == pytest.approx(0.5, rel=1e-12)
        assert rep.aux["cap_height_2"] == pytest.approx(0.5, rel=1e-12)
        assert rep.raw_rate == pytest.approx(1.0, rel=1e-12)

    def test_height_sum_identity_pair(self):
        rep = dbm_rate(ball([0, 0], 2.0), ball([2.5, 0], 1.0), 2.5)
        assert rep.rate == pytest.approx(0.2, rel=1e-12)

    def test_raw_rate_above_one_is_clamped_but_reported(self):
        # h1 + h2 = r1 + r2 - d = 1.5, so the raw rate is 1.5 / 0.5 = 3
        rep = dbm_rate(ball([0, 0], 1.0), ball([0.5, 0], 1.0), 0.5)
        assert rep.raw_rate == pytest.approx(3.0, rel=1e-12)
        assert rep.rate == 1.0


class TestObmRate:
    def test_rate_counts_members_inside_both(self, counters):
        # pivots 0 and 3 with radius 2: shared interval is [1, 2]
        xs = [-1.9, -1.0, 0.0, 0.3, 0.7, 1.2, 1.5, 1.8, 2.0, 0.9]
        ys = [4.9, 4.0, 3.0, 2.6, 2.4, 2.2, 3.3, 3.7, 4.4, 4.6]
        ds = make_dataset([[x] for x in xs + ys])
        p1 = Partition(1, list(range(10)), np.array([0.0]), 2.0)
        p2 = Partition(2, list(range(10, 20)), np.array([3.0]), 2.0)
        rep = obm_rate(p1, p2, 3.0, ds, EUCLIDEAN, counters)
        shared = sum(1 for x in xs + ys if abs(x) <= 2.0 and abs(x - 3.0) <= 2.0)
        assert rep.regime is OverlapRegime.PARTIAL_OVERLAP
        assert rep.rate == pytest.approx(shared / 20.0, rel=1e-12)

    def test_disjoint_zero_regardless_of_members(self, counters):
        ds = make_dataset([[0.0], [10.0]])
        p1 = Partition(1, [0], np.array([0.0]), 1.0)
        p2 = Partition(2, [1], np.array([10.0]), 1.0)
        assert obm_rate(p1, p2, 10.0, ds, EUCLIDEAN, counters).rate == 0.0

    def test_containment_one_even_with_few_shared(self, counters):
        ds = make_dataset([[0.0], [0.1], [5.0]])
        p1 = Partition(1, [0, 2], np.array([0.0]), 6.0)
        p2 = Partition(2, [1], np.array([0.1]), 1.0)
        rep = obm_rate(p1, p2, 0.1, ds, EUCLIDEAN, counters)
        assert rep.regime is OverlapRegime.CONTAINMENT and rep.rate == 1.0

    def test_both_empty_rejected(self, counters):
        ds = make_dataset([[0.0]])
        p1 = Partition(1, [], np.array([0.0]), 1.0)
        p2 = Partition(2, [], np.array([3.0]), 1.0)
        with pytest.raises(GeometryError):
            obm_rate(p1, p2, 3.0, ds, EUCLIDEAN, counters)


class TestProperties:
    def test_symmetry_under_argument_swap(self):
        rng = np.random.default_rng(21)
        for n in (2, 3, 5):
            for _ in range(50):
                b1, b2, d = random_partial_pair(rng, n)
                f = vbm_rate(b1, b2, d)
                r = vbm_rate(b2, b1, d)
                assert abs(f.rate - r.rate) <= 1e-12
                f = dbm_rate(b1, b2, d)
                r = dbm_rate(b2, b1, d)
                assert abs(f.rate - r.rate) <= 1e-12

    def test_cap_sum_identity(self):
        rng = np.random.default_rng(22)
        for _ in range(1000):
            b1, b2, d = random_partial_pair(rng, 3, min_frac=0.02, max_frac=0.98)
            rep = dbm_rate(b1, b2, d)
            h_sum = rep.aux["cap_height_1"] + rep.aux["cap_height_2"]
            expect = b1.radius + b2.radius - d
            assert h_sum == pytest.approx(expect, rel=1e-9)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_monte_carlo_agreement(self, n):
        rng = np.random.default_rng(23 + n)
        for i in range(5):
            b1, b2, d = random_partial_pair(rng, n)
            lens = vbm_rate(b1, b2, d).aux["lens_volume"]
            est, _ = mc_lens_volume(b1, b2, OracleConfig(1_000_000, 100 + i))
            assert abs(lens - est) / lens <= 0.02

    def test_lens_vanishes_at_tangency(self):
        b1, b2 = ball([0, 0, 0], 1.2), ball([0, 0, 2.0], 0.9)
        d = (1.2 + 0.9) - 1e-8
        lens = vbm_rate(b1, b2, d).aux["lens_volume"]
        assert lens < 1e-6

    def test_lens_approaches_smaller_ball_at_containment(self):
        b1, b2 = ball([0, 0, 0], 1.5), ball([0.5, 0, 0], 1.0)
        d = (1.5 - 1.0) + 1e-8
        lens = vbm_rate(b1, b2, d).aux["lens_volume"]
        assert lens == pytest.approx(ball_volume(b2), rel=1e-6)

    @pytest.mark.parametrize("scale", [0.1, 3.0, 250.0])
    def test_scale_covariance(self, scale):
        rng = np.random.default_rng(29)
        for n in (2, 5):
            b1, b2, d = random_partial_pair(rng, n)
            base = vbm_rate(b1, b2, d)
            s1 = Ball(b1.center * scale, b1.radius * scale)
            s2 = Ball(b2.center * scale, b2.radius * scale)
            scaled = vbm_rate(s1, s2, d * scale)
            assert scaled.aux["lens_volume"] == pytest.approx(
                base.aux["lens_volume"] * scale**n, rel=1e-9
            )
            assert scaled.rate == pytest.approx(base.rate, rel=1e-9)
            assert dbm_rate(s1, s2, d * scale).rate == pytest.approx(
                dbm_rate(b1, b2, d).rate, rel=1e-9
            )

    def test_lens_matches_closed_forms_low_dims(self):
        rng = np.random.default_rng(31)
        for n in (2, 3):
            for _ in range(100):
                b1, b2, d = random_partial_pair(rng, n)
                lens = vbm_rate(b1, b2, d).aux["lens_volume"]
                assert lens == pytest.approx(closed_form_lens_2d_3d(b1, b2, d), rel=1e-9)
