"""Geodesic shooting and numerical Fermi-chart metric along a surface curve.

The point ``P(s, q)`` is reached by following the surface geodesic that
leaves the curve at arclength ``s`` in direction ``B(s)`` for a distance
``q``. ``g_ss = |dP/ds|^2`` is then compared against the quadratic series
``1 - 2 kappa_g q + (kappa_g^2 - K) q^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import surface as surf
from .errors import FitFailed, LeftChartDomain, StepTooLarge

MIN_STEP = 1e-4
MIN_STEPS = 64
ENERGY_TOL = 1e-6
POLE_GUARD = 1e-3

_NEXT_POLE = {"z": "x", "x": "y", "y": "z"}


def _velocity_to_chart(jet, w):
    """Chart components of tangent vectors ``w`` (least squares on R_u, R_v)."""
    A = np.stack([jet["Ru"], jet["Rv"]], axis=-1)
    G = np.einsum("...ia,...ib->...ab", A, A)
    rhs = np.einsum("...ia,...i->...a", A, w)
    x = np.linalg.solve(G, rhs[..., None])[..., 0]
    return x[..., 0], x[..., 1]


def _metric_norm2(surface, u, v, du, dv):
    j = surface.jet(u, v)
    w = j["Ru"] * du[..., None] + j["Rv"] * dv[..., None]
    return np.sum(w * w, axis=-1)


def _rhs(surface, y):
    u, v, du, dv = y
    G = surf.christoffel_symbols(surface, u, v)
    vel = np.stack([du, dv], axis=-1)
    acc = -np.einsum("...abc,...b,...c->...a", G, vel, vel)
    return np.stack([du, dv, acc[..., 0], acc[..., 1]])


def _near_pole(surface, u):
    return surface.kind == "sphere" and (np.any(u < POLE_GUARD) or np.any(u > np.pi - POLE_GUARD))


def _switch_chart(surface, y):
    """Re-express a sphere state in a chart with a different polar axis."""
    p = surface.params
    other = surf.sphere(p["radius"], p["center"], surface.orientation, _NEXT_POLE[p["pole_axis"]])
    u, v, du, dv = y
    j = surface.jet(u, v)
    point = j["R"]
    w = j["Ru"] * du[..., None] + j["Rv"] * dv[..., None]
    u2, v2 = other.inverse(point)
    du2, dv2 = _velocity_to_chart(other.jet(u2, v2), w)
    return other, np.stack([u2, v2, du2, dv2])


def _check_domain(surface, u, v):
    (u0, u1), (v0, v1) = surface.domain
    if np.any(u < u0) or np.any(u > u1) or np.any(v < v0) or np.any(v > v1):
        raise LeftChartDomain(f"geodesic left the {surface.name} chart domain")


def _integrate(surface, y, q):
    """Fixed-step RK4 for the geodesic equation; returns (patch, final state)."""
    q = float(q)
    if q == 0.0:
        return surface, y
    h_target = max(abs(q) / MIN_STEPS, MIN_STEP)
    n = max(1, int(np.ceil(abs(q) / h_target - 1e-12)))
    h = q / n
    e0 = _metric_norm2(surface, *y)
    patch = surface
    # positions are carried as offsets from a base point so that rounding
    # scales with the distance travelled, not with the chart coordinates
    base = np.zeros_like(y)
    base[:2] = y[:2]
    z = y - base
    for _ in range(n):
        if _near_pole(patch, base[0] + z[0]):
            patch, y = _switch_chart(patch, base + z)
            base = np.zeros_like(y)
            base[:2] = y[:2]
            z = y - base

        def f(zz):
            return _rhs(patch, base + zz)

        k1 = f(z)
        k2 = f(z + 0.5 * h * k1)
        k3 = f(z + 0.5 * h * k2)
        k4 = f(z + h * k3)
        z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_domain(patch, base[0] + z[0], base[1] + z[1])
    y = base + z
    e1 = _metric_norm2(patch, *y)
    drift = np.max(np.abs(e1 - e0))
    if drift > ENERGY_TOL:
        raise StepTooLarge(f"geodesic speed drift {drift:.3g} exceeds {ENERGY_TOL:g}")
    return patch, y


def shoot_points(surface, u, v, w3, q):
    """3D endpoints of geodesics from chart points ``(u, v)`` with 3D unit
    tangent directions ``w3``, travelled for distance ``q``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w3 = np.asarray(w3, dtype=float).reshape(u.shape + (3,))
    j = surface.jet(u, v)
    du, dv = _velocity_to_chart(j, w3)
    y = np.stack([u, v, du, dv])
    patch = surface
    if _near_pole(patch, u):
        patch, y = _switch_chart(patch, y)
    patch, y = _integrate(patch, y, q)
    return patch.chart(y[0], y[1])


def geodesic_shoot(surface, start, direction, q):
    """Chart point reached from ``start`` along chart velocity ``direction``.

    ``direction`` holds chart components normalised in the surface metric.
    """
    u, v = (np.atleast_1d(float(x)) for x in start)
    du, dv = (np.atleast_1d(float(x)) for x in direction)
    norm2 = _metric_norm2(surface, u, v, du, dv)
    if abs(norm2[0] - 1.0) > 1e-10:
        raise ValueError(f"direction has metric norm^2 {norm2[0]:.12g}, expected 1")
    y = np.stack([u, v, du, dv])
    patch = surface
    if _near_pole(patch, u):
        patch, y = _switch_chart(patch, y)
    patch, y = _integrate(patch, y, q)
    if patch is not surface:
        u2, v2 = surface.inverse(patch.chart(y[0], y[1]))
        return float(u2[0]), float(v2[0])
    return float(y[0][0]), float(y[1][0])


def _offset_points_param(curve, t, q):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = curve.darboux_at_param(t, s=np.zeros_like(t))
    j = curve.jet(t)
    return shoot_points(curve.surface, j["u"], j["v"], d.B_vec, q)


def default_fd_step(s):
    return 1e-4 * (1 + abs(float(s)))


def _ds_point(curve, s, q, h):
    # differencing in the curve parameter keeps arclength inversion noise out
    tc = float(curve.t_of_s(float(s)))
    speed = float(curve.speed(tc))
    ht = h / speed
    P = _offset_points_param(curve, tc + np.array([ht, -ht, ht / 2, -ht / 2]), q)
    d_h = (P[0] - P[1]) / (2 * ht)
    d_h2 = (P[2] - P[3]) / ht
    return (4 * d_h2 - d_h) / (3 * speed)


def fermi_metric_gss(curve, s, q, fd_step=None):
    """``g_ss(s, q)`` by Richardson central differencing of ``P(s, q)`` along the curve."""
    h = default_fd_step(s) if fd_step is None else float(fd_step)
    dP = _ds_point(curve, s, q, h)
    return float(dP @ dP)


def gss_series(kappa_g, K, q):
    return 1.0 - 2.0 * kappa_g * q + (kappa_g**2 - K) * q**2


def straight_offset_gss(curve, s, q):
    """``|d/ds (r + q B)|^2`` for the Euclidean straight-offset surrogate.

    Exactly ``(1 - kappa_g q)^2 + tau_g^2 q^2``; differs from the geodesic
    metric at second order by ``(tau_g^2 + K) q^2``.
    """
    d = curve.darboux(float(s))
    return float((1 - d.kappa_g * q) ** 2 + (d.tau_g * q) ** 2)


@dataclass(frozen=True)
class OrderCheck:
    s: float
    q: np.ndarray
    gss_numeric: np.ndarray
    gss_series: np.ndarray
    residual: np.ndarray
    slope: float
    fit_failed: bool
    kappa_g: float
    K: float


# differencing noise in g_ss stays below 1e-11; residuals under this floor count as zero
RESIDUAL_FLOOR = 1e-10


def expansion_order_check(curve, s, q_grid=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3), strict=False):
    """Fit ``log residual = p log q + c`` for the quadratic-series residual.

    Points at the rounding floor are dropped; with fewer than two left the
    result has ``fit_failed=True`` (or :class:`FitFailed` with ``strict``).
    """
    q = np.asarray(q_grid, dtype=float)
    d = curve.darboux(float(s))
    kg, K = float(d.kappa_g), float(d.K)
    g = np.array([fermi_metric_gss(curve, s, qi) for qi in q])
    ser = gss_series(kg, K, q)
    res = np.abs(g - ser)
    keep = res > RESIDUAL_FLOOR
    if keep.sum() >= 2:
        slope = float(np.polyfit(np.log(q[keep]), np.log(res[keep]), 1)[0])
        failed = False
    else:
        slope = float("nan")
        failed = True
        if strict:
            raise FitFailed(f"residuals at rounding floor for {curve.name} at s={s}")
    return OrderCheck(float(s), q, g, ser, res, slope, failed, kg, K)


def fermi_christoffel_q_ss(curve, s, dq=1e-3):
    """``Gamma^q_ss`` at q = 0 as ``-(1/2) d g_ss/dq`` by Richardson differences."""

    def dg(h):
        return (fermi_metric_gss(curve, s, h) - fermi_metric_gss(curve, s, -h)) / (2 * h)

    return -0.5 * (4 * dg(dq / 2) - dg(dq)) / 3


def fermi_g_sq(curve, s, dq=1e-4):
    """``dP/ds . dP/dq`` at q = 0 from finite differences."""
    dPds = _ds_point(curve, s, 0.0, default_fd_step(s))
    tc = curve.t_of_s(float(s))
    Pq = np.stack([_offset_points_param(curve, tc, dq)[0], _offset_points_param(curve, tc, -dq)[0]])
    dPdq = (Pq[0] - Pq[1]) / (2 * dq)
    return float(dPds @ dPdq)


def fermi_rows(curve, s_values, q_values):
    """Rows ``(s, q, gss_numeric, gss_series, residual)`` for the CSV export."""
    rows = []
    for s in s_values:
        d = curve.darboux(float(s))
        for q in q_values:
            g = fermi_metric_gss(curve, s, q)
            ser = gss_series(float(d.kappa_g), float(d.K), q)
            rows.append((float(s), float(q), g, ser, abs(g - ser)))
    return rows
