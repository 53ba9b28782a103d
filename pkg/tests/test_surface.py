from __future__ import annotations

import numpy as np
import pytest

from dspin import surface as surf
from dspin.errors import ConfigInvalid, OutOfDomain


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_sphere_curvatures(r):
    S = surf.sphere(radius=r)
    u = np.linspace(0.3, 2.8, 7)
    v = np.linspace(-2.0, 2.0, 7)
    rep = surf.curvature_report(S, u, v)
    np.testing.assert_allclose(rep.K, 1 / r**2, rtol=1e-12)
    np.testing.assert_allclose(rep.M, -1 / r, rtol=1e-12)
    np.testing.assert_allclose(rep.V_g, 0.0, atol=1e-12)


def test_cylinder_and_plane_curvatures():
    C = surf.cylinder(radius=2.0)
    rep = surf.curvature_report(C, np.array([0.1, 1.0]), np.array([0.0, 3.0]))
    np.testing.assert_allclose(rep.K, 0.0, atol=1e-14)
    np.testing.assert_allclose(np.abs(rep.M), 0.25, rtol=1e-12)
    np.testing.assert_allclose(rep.V_g, -1 / 16, rtol=1e-12)
    P = surf.plane()
    rep = surf.curvature_report(P, 0.3, -0.7)
    assert rep.K == 0.0 and rep.M == 0.0


@pytest.mark.parametrize("make", [lambda: surf.sphere(1.5), lambda: surf.cylinder(0.7), lambda: surf.sphere(1.0, pole_axis="y")])
def test_analytic_matches_finite_differences(make):
    S = make()
    F = S.with_fd()
    assert F.derivative_mode == "finite-difference"
    u, v = np.array([0.7, 1.3, 2.1]), np.array([0.2, -1.1, 2.5])
    a, b = surf.curvature_report(S, u, v), surf.curvature_report(F, u, v)
    np.testing.assert_allclose(a.shape_operator, b.shape_operator, atol=1e-6)
    np.testing.assert_allclose(surf.christoffel_symbols(S, u, v), surf.christoffel_symbols(F, u, v), atol=1e-6)


def test_sphere_christoffels_closed_form():
    S = surf.sphere(1.0)
    th, ph = 0.9, 0.4
    G = surf.christoffel_symbols(S, th, ph)
    # Gamma^th_{ph ph} = -sin cos, Gamma^ph_{th ph} = cot
    assert abs(G[0, 1, 1] + np.sin(th) * np.cos(th)) < 1e-12
    assert abs(G[1, 0, 1] - 1 / np.tan(th)) < 1e-12
    assert abs(G[0, 0, 0]) < 1e-12


def test_shape_operator_sign_convention():
    # dN = -S dR with the outward normal: the sphere's S is -(1/r) I
    S = surf.sphere(2.0)
    rep = surf.curvature_report(S, 1.0, 0.5)
    np.testing.assert_allclose(rep.shape_operator, -0.5 * np.eye(2), atol=1e-12)


def test_domain_and_config_errors():
    with pytest.raises(OutOfDomain):
        surf.curvature_report(surf.sphere(), 3.5, 0.0)
    with pytest.raises(ConfigInvalid):
        surf.sphere(radius=-1)
    with pytest.raises(ConfigInvalid):
        surf.surface_from_config({"kind": "torus"})
