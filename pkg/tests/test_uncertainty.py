import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floatloc.errors import DegenerateGeometryError, IllConditionedError, InvalidInputError
from floatloc.geo import GeodeticPoint, NedPoint
from floatloc.uncertainty import (
    CrlbConfig, PositionEstimate, RejectReason, apply_filter, chi2_2dof_quantile, covariance,
    crlb_sigmas, fisher_information, sigmas_or_nan, tdoa_fisher_information, uncertainty_ellipse,
)

RING = [(100 * math.cos(a), 100 * math.sin(a)) for a in np.radians([90, 210, 330])]


def estimate(cost=1.0, sx=1.0, sy=1.0, **kw):
    return PositionEstimate(101, 0, 0.0, GeodeticPoint(47.0, -122.0), NedPoint(0, 0), cost, sx, sy, 3, **kw)


class TestFisher:
    def test_symmetric_ring(self):
        f = fisher_information((0.0, 0.0), RING, 9.0)
        np.testing.assert_allclose(f, np.eye(2) / 6.0, atol=1e-15)
        sx, sy = crlb_sigmas(f)
        assert sx == pytest.approx(math.sqrt(6.0)) and sy == pytest.approx(math.sqrt(6.0))

    def test_accepts_ned_points(self):
        f = fisher_information(NedPoint(0, 0), [NedPoint(y, x) for x, y in RING], 9.0)
        np.testing.assert_allclose(f, np.eye(2) / 6.0, atol=1e-15)

    def test_collinear_is_singular(self):
        f = fisher_information((0.0, 50.0), [(0, 0), (0, 100), (0, 200)], 9.0)
        with pytest.raises(IllConditionedError):
            crlb_sigmas(f)
        assert sigmas_or_nan(f, 1e8)[2] is False

    def test_zero_matrix(self):
        with pytest.raises(IllConditionedError):
            covariance(np.zeros((2, 2)))

    def test_condition_limit(self):
        f = np.diag([1.0, 1e-9])
        with pytest.raises(IllConditionedError):
            covariance(f, 1e8)
        assert covariance(f, 1e10)[1, 1] == pytest.approx(1e9)

    def test_diagonal(self):
        assert crlb_sigmas(np.diag([0.25, 0.04])) == pytest.approx((2.0, 5.0))

    def test_estimate_on_anchor(self):
        with pytest.raises(DegenerateGeometryError):
            fisher_information(RING[0], RING, 9.0)

    def test_tdoa_matches_direct_covariance(self):
        # Oracle: propagate independent arrival noise through the differencing matrix by hand.
        anchors = [(0, 0), (400, 0), (380, 350), (-20, 420)]
        p = np.array([130.0, 210.0])
        u = np.array([(p - a) / np.linalg.norm(p - a) for a in np.array(anchors, float)])
        d = np.hstack([-np.ones((3, 1)), np.eye(3)])
        j = d @ u
        cov = 9.0 * d @ d.T
        expected = j.T @ np.linalg.inv(cov) @ j
        np.testing.assert_allclose(tdoa_fisher_information(p, anchors, 9.0), expected, rtol=1e-12)

    def test_tdoa_weaker_than_tof(self):
        anchors = [(0, 0), (400, 0), (380, 350), (-20, 420)]
        tof = crlb_sigmas(fisher_information((130, 210), anchors, 9.0))
        tdoa = crlb_sigmas(tdoa_fisher_information((130, 210), anchors, 9.0))
        assert tdoa[0] >= tof[0] and tdoa[1] >= tof[1]

    @settings(max_examples=100, deadline=None)
    @given(
        pts=st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=3, max_size=8),
        theta=st.floats(0, 2 * math.pi),
    )
    def test_psd_and_rotation_invariant(self, pts, theta):
        a = np.array(pts)
        p = np.array([1.5, -2.5])
        if np.min(np.hypot(*(a - p).T)) < 1.0:
            return
        f = fisher_information(p, a, 9.0)
        eig = np.linalg.eigvalsh(f)
        assert eig[0] >= -1e-12
        assert np.trace(f) == pytest.approx(len(a) / 9.0)
        r = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        fr = fisher_information(r @ p, a @ r.T, 9.0)
        np.testing.assert_allclose(np.linalg.eigvalsh(fr), eig, atol=1e-9)


class TestEllipse:
    def test_quantile(self):
        assert chi2_2dof_quantile(1 - math.exp(-0.5)) == pytest.approx(1.0)
        assert chi2_2dof_quantile(0.95) == pytest.approx(5.991464547, rel=1e-9)
        with pytest.raises(InvalidInputError):
            chi2_2dof_quantile(1.0)

    def test_axes_and_orientation(self):
        major, minor, angle = uncertainty_ellipse(np.diag([0.25, 0.04]), 1 - math.exp(-0.5))
        assert (major, minor) == pytest.approx((5.0, 2.0))
        assert abs(angle - math.pi / 2) < 1e-12

    def test_rotated(self):
        th = math.radians(30)
        r = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        cov = r @ np.diag([16.0, 1.0]) @ r.T
        major, minor, angle = uncertainty_ellipse(np.linalg.inv(cov), 1 - math.exp(-0.5))
        assert (major, minor) == pytest.approx((4.0, 1.0))
        assert angle == pytest.approx(th)


class TestFilter:
    @pytest.mark.parametrize("cost,sx,sy,ok,reason", [
        (10.0, 3.0, 3.0, True, RejectReason.NONE),
        (60.0, 3.0, 3.0, False, RejectReason.COST),
        (10.0, 12.0, 3.0, False, RejectReason.CRLB),
        (50.0, 10.0, 10.0, True, RejectReason.NONE),
        (math.nextafter(50.0, 100.0), 10.0, 10.0, False, RejectReason.COST),
        (10.0, 10.0, math.nextafter(10.0, 20.0), False, RejectReason.CRLB),
        (60.0, 12.0, 3.0, False, RejectReason.COST),
    ])
    def test_table(self, cost, sx, sy, ok, reason):
        e = apply_filter(estimate(cost, sx, sy))
        assert e.accepted is ok and e.reject_reason is reason

    def test_precedence(self):
        e = apply_filter(estimate(100.0, math.nan, math.nan, well_conditioned=False, converged=False))
        assert e.reject_reason is RejectReason.ILL_CONDITIONED
        e = apply_filter(estimate(100.0, 20.0, 20.0, converged=False))
        assert e.reject_reason is RejectReason.NOT_CONVERGED

    def test_positions_untouched(self):
        e = estimate(100.0)
        f = apply_filter(e)
        assert replace(f, accepted=e.accepted, reject_reason=e.reject_reason) == e

    @settings(max_examples=200, deadline=None)
    @given(c=st.floats(0, 200), s=st.floats(0, 30), dc=st.floats(0, 50), ds=st.floats(0, 10))
    def test_monotone(self, c, s, dc, ds):
        base = apply_filter(estimate(c, s, s))
        worse = apply_filter(estimate(c + dc, s + ds, s + ds))
        assert not (worse.accepted and not base.accepted)

    def test_config_validation(self):
        with pytest.raises(InvalidInputError):
            CrlbConfig(tau_cost=0.0)
