"""Parametric surface patches: chart evaluation, fundamental forms, curvature.

A :class:`SurfacePatch` wraps a chart ``(u, v) -> R(u, v)`` in 3D. Chart
derivatives come from sympy-compiled closures when the chart is symbolic and
from Richardson-extrapolated central differences otherwise. Every function
is vectorised: ``u`` and ``v`` may be arrays of matching shape.

Conventions: the unit normal is ``orientation * (R_u x R_v)/|R_u x R_v|``;
the shape operator ``S`` is defined by ``dN = -S dR``, so that with the
outward normal a sphere of radius ``r`` has ``M = -1/r`` and ``K = 1/r**2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from .errors import ConfigInvalid, DegenerateChart, OutOfDomain, SingularMetric

DEGENERATE_TOL = 1e-12
SINGULAR_METRIC_TOL = 1e-14
FD_STEP_FIRST = 1e-5
FD_STEP_SECOND = 1e-4


def lambdify_vector(exprs, args):
    """Compile a list of sympy expressions into one numpy function.

    The returned callable broadcasts its arguments and stacks the components
    along a trailing axis, so constant components come back full-shaped.
    """
    fns = [sp.lambdify(args, e, modules="numpy", cse=True) for e in exprs]

    def f(*vals):
        vals = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in vals])
        shape = vals[0].shape
        comps = [np.broadcast_to(np.asarray(fn(*vals), dtype=float), shape) for fn in fns]
        return np.stack(comps, axis=-1)

    return f


def _d1(f, x, h):
    # central difference with one Richardson level
    d_h = (f(x + h) - f(x - h)) / (2 * h)
    d_h2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d_h2 - d_h) / 3


def _d2(f, x, h):
    fx = f(x)
    d_h = (f(x + h) - 2 * fx + f(x - h)) / h**2
    d_h2 = (f(x + h / 2) - 2 * fx + f(x - h / 2)) / (h / 2) ** 2
    return (4 * d_h2 - d_h) / 3


def _dmixed(f, u, v, h):
    def m(k):
        return (f(u + k, v + k) - f(u + k, v - k) - f(u - k, v + k) + f(u - k, v - k)) / (4 * k * k)

    return (4 * m(h / 2) - m(h)) / 3


@dataclass(frozen=True)
class ChartPoint:
    point: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    normal: np.ndarray


@dataclass(frozen=True)
class CurvatureReport:
    first_form: np.ndarray
    second_form: np.ndarray
    shape_operator: np.ndarray
    K: np.ndarray
    M: np.ndarray

    @property
    def V_g(self):
        """Geometric potential -(M^2 - K) in units hbar^2/2m = 1."""
        return -(self.M**2 - self.K)


@dataclass(frozen=True)
class SurfacePatch:
    """A regular chart on a surface.

    ``domain`` is ``((u_min, u_max), (v_min, v_max))``; infinite bounds are
    allowed for periodic or unbounded coordinates. ``derivatives`` returns
    ``(R_u, R_v, R_uu, R_uv, R_vv)``; when it is None the derivatives are
    taken by finite differences of ``chart``.
    """

    name: str
    chart: Callable
    domain: tuple = ((-np.inf, np.inf), (-np.inf, np.inf))
    orientation: int = 1
    derivatives: Callable | None = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    symbolic: tuple | None = None
    inverse: Callable | None = None

    @property
    def derivative_mode(self):
        return "analytic" if self.derivatives is not None else "finite-difference"

    def check_domain(self, u, v):
        (u0, u1), (v0, v1) = self.domain
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        slack = 1e-12
        if np.any(u < u0 - slack) or np.any(u > u1 + slack) or np.any(v < v0 - slack) or np.any(v > v1 + slack):
            raise OutOfDomain(f"{self.name}: chart point outside {self.domain}")

    def jet(self, u, v):
        """Chart value and derivatives up to second order at ``(u, v)``."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        u, v = np.broadcast_arrays(u, v)
        R = self.chart(u, v)
        if self.derivatives is not None:
            Ru, Rv, Ruu, Ruv, Rvv = self.derivatives(u, v)
        else:
            Ru, Rv, Ruu, Ruv, Rvv = self.fd_derivatives(u, v)
        return {"R": R, "Ru": Ru, "Rv": Rv, "Ruu": Ruu, "Ruv": Ruv, "Rvv": Rvv}

    def fd_derivatives(self, u, v):
        f = self.chart
        h1, h2 = FD_STEP_FIRST, FD_STEP_SECOND
        Ru = _d1(lambda x: f(x, v), u, h1)
        Rv = _d1(lambda x: f(u, x), v, h1)
        Ruu = _d2(lambda x: f(x, v), u, h2)
        Rvv = _d2(lambda x: f(u, x), v, h2)
        Ruv = _dmixed(f, u, v, h2)
        return Ru, Rv, Ruu, Ruv, Rvv

    def with_fd(self):
        """Copy of this patch that ignores analytic derivatives."""
        return SurfacePatch(
            name=self.name + "[fd]",
            chart=self.chart,
            domain=self.domain,
            orientation=self.orientation,
            derivatives=None,
            kind=self.kind,
            params=dict(self.params),
            symbolic=None,
            inverse=self.inverse,
        )


def oriented_normal(surface, Ru, Rv):
    c = np.cross(Ru, Rv)
    nrm = np.linalg.norm(c, axis=-1)
    if np.any(nrm < DEGENERATE_TOL):
        raise DegenerateChart(f"{surface.name}: |R_u x R_v| < {DEGENERATE_TOL:g}")
    return surface.orientation * c / nrm[..., None]


def chart_eval(surface, u, v):
    surface.check_domain(u, v)
    j = surface.jet(u, v)
    N = oriented_normal(surface, j["Ru"], j["Rv"])
    return ChartPoint(point=j["R"], du=j["Ru"], dv=j["Rv"], normal=N)


def forms_from_jet(surface, j):
    """First form, second form and unit normal from a chart jet."""
    Ru, Rv = j["Ru"], j["Rv"]
    N = oriented_normal(surface, Ru, Rv)
    E = np.sum(Ru * Ru, axis=-1)
    F = np.sum(Ru * Rv, axis=-1)
    G = np.sum(Rv * Rv, axis=-1)
    L = np.sum(j["Ruu"] * N, axis=-1)
    Mf = np.sum(j["Ruv"] * N, axis=-1)
    Nf = np.sum(j["Rvv"] * N, axis=-1)
    first = np.stack([np.stack([E, F], -1), np.stack([F, G], -1)], -2)
    second = np.stack([np.stack([L, Mf], -1), np.stack([Mf, Nf], -1)], -2)
    return first, second, N


def shape_operator_from_forms(first, second):
    det = first[..., 0, 0] * first[..., 1, 1] - first[..., 0, 1] ** 2
    if np.any(det < SINGULAR_METRIC_TOL):
        raise SingularMetric(f"det(first form) < {SINGULAR_METRIC_TOL:g}")
    return np.linalg.solve(first, second)


def curvature_report(surface, u, v):
    surface.check_domain(u, v)
    first, second, _ = forms_from_jet(surface, surface.jet(u, v))
    S = shape_operator_from_forms(first, second)
    K = np.linalg.det(S)
    M = 0.5 * np.trace(S, axis1=-2, axis2=-1)
    return CurvatureReport(first_form=first, second_form=second, shape_operator=S, K=K, M=M)


def christoffel_symbols(surface, u, v):
    """Chart Christoffel symbols ``G[..., a, b, c] = Gamma^a_{bc}``.

    Uses ``Gamma_{d,bc} = R_bc . R_d`` for an embedded chart, raised with the
    inverse first form.
    """
    j = surface.jet(u, v)
    Ru, Rv = j["Ru"], j["Rv"]
    first = np.stack(
        [
            np.stack([np.sum(Ru * Ru, -1), np.sum(Ru * Rv, -1)], -1),
            np.stack([np.sum(Ru * Rv, -1), np.sum(Rv * Rv, -1)], -1),
        ],
        -2,
    )
    det = np.linalg.det(first)
    if np.any(det < SINGULAR_METRIC_TOL):
        raise SingularMetric(f"{surface.name}: det(first form) < {SINGULAR_METRIC_TOL:g}")
    second_derivs = [[j["Ruu"], j["Ruv"]], [j["Ruv"], j["Rvv"]]]
    tangents = [Ru, Rv]
    lowered = np.empty(first.shape[:-2] + (2, 2, 2))
    for d in range(2):
        for b in range(2):
            for c in range(2):
                lowered[..., d, b, c] = np.sum(second_derivs[b][c] * tangents[d], axis=-1)
    ginv = np.linalg.inv(first)
    return np.einsum("...ad,...dbc->...abc", ginv, lowered)


# ---------------------------------------------------------------------------
# symbolic construction and catalog

U_SYM, V_SYM = sp.symbols("u v", real=True)


def symbolic_patch(name, exprs, domain, orientation=1, kind="custom", params=None, inverse=None):
    """Build a patch from sympy expressions in ``U_SYM``, ``V_SYM``."""
    exprs = [sp.sympify(e) for e in exprs]
    args = (U_SYM, V_SYM)
    chart = lambdify_vector(exprs, args)
    d = {
        "Ru": [sp.diff(e, U_SYM) for e in exprs],
        "Rv": [sp.diff(e, V_SYM) for e in exprs],
        "Ruu": [sp.diff(e, U_SYM, 2) for e in exprs],
        "Ruv": [sp.diff(e, U_SYM, V_SYM) for e in exprs],
        "Rvv": [sp.diff(e, V_SYM, 2) for e in exprs],
    }
    fns = {k: lambdify_vector(v, args) for k, v in d.items()}

    def derivatives(u, v):
        return fns["Ru"](u, v), fns["Rv"](u, v), fns["Ruu"](u, v), fns["Ruv"](u, v), fns["Rvv"](u, v)

    return SurfacePatch(
        name=name,
        chart=chart,
        domain=domain,
        orientation=orientation,
        derivatives=derivatives,
        kind=kind,
        params=dict(params or {}),
        symbolic=(U_SYM, V_SYM, tuple(exprs)),
        inverse=inverse,
    )


def _orientation_sign(orientation):
    if orientation in (1, "outward", "up", None):
        return 1
    if orientation in (-1, "inward", "down"):
        return -1
    raise ConfigInvalid(f"unknown orientation {orientation!r}", key="orientation")


def plane(center=(0.0, 0.0, 0.0), orientation="up"):
    """The plane through ``center`` with chart ``(u, v) -> center + (u, v, 0)``."""
    cx, cy, cz = (float(c) for c in center)
    sign = _orientation_sign(orientation)

    def inverse(p):
        p = np.asarray(p, dtype=float)
        return p[..., 0] - cx, p[..., 1] - cy

    return symbolic_patch(
        "plane",
        [cx + U_SYM, cy + V_SYM, sp.Float(cz)],
        domain=((-np.inf, np.inf), (-np.inf, np.inf)),
        orientation=sign,
        kind="plane",
        params={"center": [cx, cy, cz]},
        inverse=inverse,
    )


def cylinder(radius=1.0, center=(0.0, 0.0), orientation="outward"):
    """Cylinder about the z-parallel axis through ``center``; chart ``(phi, z)``."""
    rho = float(radius)
    if rho <= 0:
        raise ConfigInvalid("cylinder radius must be positive", key="radius")
    cx, cy = float(center[0]), float(center[1])
    sign = _orientation_sign(orientation)

    def inverse(p):
        p = np.asarray(p, dtype=float)
        return np.arctan2(p[..., 1] - cy, p[..., 0] - cx), p[..., 2]

    return symbolic_patch(
        "cylinder",
        [cx + rho * sp.cos(U_SYM), cy + rho * sp.sin(U_SYM), V_SYM],
        domain=((-np.inf, np.inf), (-np.inf, np.inf)),
        orientation=sign,
        kind="cylinder",
        params={"radius": rho, "center": [cx, cy]},
        inverse=inverse,
    )


_POLE_FRAMES = {
    # (e1, e2, e3) right-handed, e3 is the polar axis
    "z": (0, 1, 2),
    "x": (1, 2, 0),
    "y": (2, 0, 1),
}


def sphere(radius=1.0, center=(0.0, 0.0, 0.0), orientation="outward", pole_axis="z"):
    """Sphere with polar chart ``(theta, phi)`` about ``pole_axis``.

    With ``pole_axis="z"`` the chart is the usual
    ``center + r (sin th cos ph, sin th sin ph, cos th)``; other axes permute
    the components cyclically so the chart stays right-handed.
    """
    r = float(radius)
    if r <= 0:
        raise ConfigInvalid("sphere radius must be positive", key="radius")
    c = [float(x) for x in center]
    if pole_axis not in _POLE_FRAMES:
        raise ConfigInvalid(f"pole_axis must be one of x, y, z (got {pole_axis!r})", key="pole_axis")
    i1, i2, i3 = _POLE_FRAMES[pole_axis]
    sign = _orientation_sign(orientation)
    local = [
        r * sp.sin(U_SYM) * sp.cos(V_SYM),
        r * sp.sin(U_SYM) * sp.sin(V_SYM),
        r * sp.cos(U_SYM),
    ]
    comps = [None, None, None]
    comps[i1], comps[i2], comps[i3] = local
    exprs = [c[k] + comps[k] for k in range(3)]

    def inverse(p):
        p = np.asarray(p, dtype=float) - np.asarray(c)
        z = np.clip(p[..., i3] / r, -1.0, 1.0)
        return np.arccos(z), np.arctan2(p[..., i2], p[..., i1])

    return symbolic_patch(
        "sphere",
        exprs,
        domain=((0.0, np.pi), (-np.inf, np.inf)),
        orientation=sign,
        kind="sphere",
        params={"radius": r, "center": c, "pole_axis": pole_axis},
        inverse=inverse,
    )


def surface_from_config(cfg):
    """Catalog surface from ``{kind, radius, center, orientation, pole_axis}``."""
    kind = cfg.get("kind")
    orientation = cfg.get("orientation")
    if kind == "plane":
        return plane(center=cfg.get("center", (0.0, 0.0, 0.0)), orientation=orientation or "up")
    if kind == "cylinder":
        return cylinder(
            radius=cfg.get("radius", 1.0),
            center=cfg.get("center", (0.0, 0.0)),
            orientation=orientation or "outward",
        )
    if kind == "sphere":
        return sphere(
            radius=cfg.get("radius", 1.0),
            center=cfg.get("center", (0.0, 0.0, 0.0)),
            orientation=orientation or "outward",
            pole_axis=cfg.get("pole_axis", "z"),
        )
    raise ConfigInvalid(f"unknown surface kind {kind!r}", key="surface.kind")
