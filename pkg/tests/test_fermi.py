from __future__ import annotations

import numpy as np
import pytest

from dspin import curves as cv
from dspin import fermi
from dspin import surface as surf
from dspin.errors import LeftChartDomain


def test_plane_shoot_is_straight():
    P = surf.plane()
    u, v = fermi.geodesic_shoot(P, (0.3, -0.2), (0.6, 0.8), 1.5)
    assert abs(u - (0.3 + 0.9)) < 1e-12 and abs(v - (-0.2 + 1.2)) < 1e-12


def test_sphere_shoot_toward_pole():
    S = surf.sphere(1.0)
    # from the equator northward (decreasing polar angle)
    for q in (0.1, 0.7, 1.2):
        u, v = fermi.geodesic_shoot(S, (np.pi / 2, 0.4), (-1.0, 0.0), q)
        assert abs(u - (np.pi / 2 - q)) < 1e-8 * (1 + q)
        assert abs(v - 0.4) < 1e-10


def test_cylinder_geodesic_is_unrolled_line():
    C = surf.cylinder(2.0)
    a = np.array([0.6, 0.8])
    u, v = fermi.geodesic_shoot(C, (0.1, 0.0), (a[0] / 2.0, a[1]), 1.0)
    assert abs(2.0 * (u - 0.1) - 0.6) < 1e-10 and abs(v - 0.8) < 1e-10


def test_shoot_reversibility():
    S = surf.sphere(1.3)
    start = (1.1, 0.3)
    d = np.array([0.4, 0.9])
    g = np.diag([1.3**2, (1.3 * np.sin(1.1)) ** 2])
    d = d / np.sqrt(d @ g @ d)
    S2 = surf.sphere(1.3)
    u, v = fermi.geodesic_shoot(S, start, d, 0.6)
    # tangent at the end point, reversed: shoot back along the same great circle
    R0 = S.chart(*start)
    R1 = S.chart(u, v)
    back = fermi.shoot_points(S2, np.array([u]), np.array([v]), _reverse_tangent(S, R0, R1), 0.6)
    assert np.linalg.norm(back[0] - R0) < 1e-8


def _reverse_tangent(S, R0, R1):
    # on a sphere the geodesic back to R0 lies in the plane through the centre, R0 and R1
    n = R1 / np.linalg.norm(R1)
    w = R0 - (R0 @ n) * n
    return (w / np.linalg.norm(w))[None, :]


def test_planar_circle_metric():
    R = 2.0
    c = cv.planar_circle(R)
    for q in (0.05, 0.2, -0.3):
        g = fermi.fermi_metric_gss(c, 1.0, q)
        assert abs(g - (1 - q / R) ** 2) < 1e-10


def test_great_circle_metric():
    # latitude circle at alpha = pi/2 is the equator
    c = cv.latitude_circle(np.pi / 2, 1.5)
    for q in (0.05, 0.3):
        assert abs(fermi.fermi_metric_gss(c, 0.7, q) - np.cos(q / 1.5) ** 2) < 1e-9


def test_metric_at_zero_offset(viv_sph):
    assert abs(fermi.fermi_metric_gss(viv_sph, 1.0, 0.0) - 1.0) < 1e-9


def test_straight_line_residual_zero():
    chk = fermi.expansion_order_check(cv.straight_line(), 0.5)
    assert np.max(chk.residual) < 1e-12 and chk.fit_failed


def test_order_on_sphere(viv_sph):
    s = float(viv_sph.s_of_t(np.array([np.pi / 2]))[0])
    chk = fermi.expansion_order_check(viv_sph, s)
    assert 2.7 <= chk.slope <= 3.3


def test_christoffel_and_orthogonality(viv_sph, c3):
    for c, s in ((viv_sph, 1.3), (c3, 2.0)):
        kg = float(c.darboux(s).kappa_g)
        assert abs(fermi.fermi_christoffel_q_ss(c, s) - kg) < 1e-5
        assert abs(fermi.fermi_g_sq(c, s)) < 1e-8


def test_straight_offset_error_is_second_order(viv_cyl):
    s = 2.0
    d = viv_cyl.darboux(s)
    q = 1e-2
    exact = fermi.fermi_metric_gss(viv_cyl, s, q)
    approx = fermi.straight_offset_gss(viv_cyl, s, q)
    # differs at second order by (tau_g^2 + K) q^2
    assert abs((approx - exact) / q**2 - (float(d.tau_g) ** 2 + float(d.K))) < 0.05


def test_leaving_chart_is_an_error():
    with pytest.raises(LeftChartDomain):
        fermi.geodesic_shoot(surf.symbolic_patch("box", [surf.U_SYM, surf.V_SYM, 0 * surf.U_SYM], ((0, 1), (0, 1))), (0.5, 0.5), (1.0, 0.0), 2.0)
