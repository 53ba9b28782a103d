"""Curves on surfaces: arclength, Frenet and Darboux frames, catalog curves.

Orientation convention (fixed for the whole engine): ``B = t x N`` and

    kappa_n = (dt/ds) . N,   kappa_g = (dt/ds) . B,   tau_g = -(dN/ds) . B

so that ``dt/ds = kappa_n N + kappa_g B``, ``dN/ds = -kappa_n t - tau_g B``
and ``dB/ds = -kappa_g t + tau_g N``. The Frenet angle ``theta`` satisfies
``cos(theta) = n.N`` and ``sin(theta) = -b.N``; with these definitions
``tau_g = -(tau - dtheta/ds)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import sympy as sp
from scipy.interpolate import CubicHermiteSpline
from sympy.parsing.sympy_parser import parse_expr

from . import surface as surf
from .errors import ConfigInvalid, IrregularCurve, NotClosed, UnknownCurve, VanishingCurvature
from .surface import _d1, _d2, lambdify_vector

T_SYM = sp.Symbol("t", real=True)

IRREGULAR_TOL = 1e-12
KAPPA_TOL = 1e-12
CLOSED_TOL = 1e-8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _d3(f, x, h=2e-3):
    def d(k):
        return (f(x + 2 * k) - 2 * f(x + k) + 2 * f(x - k) - f(x - 2 * k)) / (2 * k**3)

    return (4 * d(h / 2) - d(h)) / 3


def _dot(a, b):
    return np.sum(a * b, axis=-1)


class ArclengthTable:
    """Monotone table ``t <-> s`` with exact-quadrature refinement.

    Node values of ``s`` are accumulated panel by panel with 12-point
    Gauss-Legendre; off-node queries integrate the partial panel the same
    way, and inverse queries polish a table guess with Newton steps.
    """

    def __init__(self, speed, t0, t1, n_samples=512, periodic=False):
        if n_samples < 16:
            raise ValueError("n_samples must be >= 16")
        self._speed = speed
        self.t0, self.t1 = float(t0), float(t1)
        self.periodic = periodic
        self.t_nodes = np.linspace(self.t0, self.t1, n_samples + 1)
        a, b = self.t_nodes[:-1], self.t_nodes[1:]
        x = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _GL_X
        sp_nodes = speed(x)
        if np.min(sp_nodes) < IRREGULAR_TOL or np.min(speed(self.t_nodes)) < IRREGULAR_TOL:
            raise IrregularCurve(f"ds/dt < {IRREGULAR_TOL:g} on [{t0}, {t1}]")
        panel = 0.5 * (b - a) * (sp_nodes @ _GL_W)
        self.s_nodes = np.concatenate([[0.0], np.cumsum(panel)])
        self.length = float(self.s_nodes[-1])
        # t(s) guess accurate to O(dt^4); one or two Newton steps finish it
        self._guess = CubicHermiteSpline(self.s_nodes, self.t_nodes, 1.0 / speed(self.t_nodes))

    def s_of_t(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.t_nodes, t, side="right") - 1, 0, len(self.t_nodes) - 2)
        a = self.t_nodes[k]
        half = 0.5 * (t - a)
        x = (a + half)[..., None] + half[..., None] * _GL_X
        return self.s_nodes[k] + half * (self._speed(x) @ _GL_W)

    def t_of_s(self, s):
        s = np.asarray(s, dtype=float)
        L = self.length
        if self.periodic:
            s = np.where((s < 0) | (s > L), np.mod(s, L), s)
        elif np.any(s < -1e-9 * L) or np.any(s > L * (1 + 1e-9)):
            raise ValueError(f"arclength outside [0, {L}]")
        s = np.clip(s, 0.0, L)
        t = np.clip(self._guess(s), self.t0, self.t1)
        for _ in range(8):
            err = self.s_of_t(t) - s
            t = np.clip(t - err / self._speed(t), self.t0, self.t1)
            if np.max(np.abs(err), initial=0.0) < 1e-15 * (1 + L):
                break
        return t


@dataclass(frozen=True)
class FrenetSample:
    s: np.ndarray
    t_vec: np.ndarray
    n_vec: np.ndarray
    b_vec: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray


@dataclass(frozen=True)
class DarbouxSample:
    """Darboux-frame state along a curve (scalars or arrays over samples)."""

    s: np.ndarray
    param: np.ndarray
    position: np.ndarray
    t_vec: np.ndarray
    N_vec: np.ndarray
    B_vec: np.ndarray
    theta: np.ndarray
    kappa_g: np.ndarray
    kappa_n: np.ndarray
    tau_g: np.ndarray
    K: np.ndarray
    M: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray
    speed: np.ndarray

    @property
    def frame(self):
        """Rows t, N, B stacked into shape (..., 3, 3)."""
        return np.stack([self.t_vec, self.N_vec, self.B_vec], axis=-2)


class CurveOnSurface:
    """A chart curve ``t -> (u(t), v(t))`` on a :class:`SurfacePatch`."""

    def __init__(
        self,
        surface,
        chart_curve: Callable,
        t_range,
        closed=False,
        name="custom",
        params=None,
        jet_fn: Callable | None = None,
        speed_fn: Callable | None = None,
        table_samples=512,
    ):
        self.surface = surface
        self.chart_curve = chart_curve
        self.t0, self.t1 = float(t_range[0]), float(t_range[1])
        if not self.t1 > self.t0:
            raise ConfigInvalid("curve parameter range must be increasing", key="curve.t_range")
        self.name = name
        self.params = dict(params or {})
        self._jet_fn = jet_fn
        self._speed_fn = speed_fn
        self.table_samples = table_samples
        self.closed = bool(closed)
        self._mid_cache = {}
        if self.closed:
            gap = np.linalg.norm(self.embedding(self.t1) - self.embedding(self.t0))
            if gap > CLOSED_TOL:
                raise NotClosed(f"{name}: endpoints differ by {gap:.3g}")

    @property
    def derivative_mode(self):
        return "analytic" if self._jet_fn is not None else "finite-difference"

    def embedding(self, t):
        u, v = self.chart_curve(np.asarray(t, dtype=float))
        return self.surface.chart(u, v)

    def jet(self, t):
        """Chart point, chart velocity and embedding derivatives r', r'', r'''."""
        t = np.asarray(t, dtype=float)
        if self._jet_fn is not None:
            return self._jet_fn(t)
        u, v = self.chart_curve(t)
        du = _d1(lambda x: np.asarray(self.chart_curve(x)[0], dtype=float), t, 1e-5)
        dv = _d1(lambda x: np.asarray(self.chart_curve(x)[1], dtype=float), t, 1e-5)
        emb = self.embedding
        return {
            "u": np.asarray(u, dtype=float),
            "v": np.asarray(v, dtype=float),
            "du": du,
            "dv": dv,
            "r": emb(t),
            "r1": _d1(emb, t, 1e-5),
            "r2": _d2(emb, t, 1e-4),
            "r3": _d3(emb, t),
        }

    def speed(self, t):
        if self._speed_fn is not None:
            return self._speed_fn(np.asarray(t, dtype=float))
        return np.linalg.norm(self.jet(t)["r1"], axis=-1)

    @cached_property
    def table(self):
        return ArclengthTable(self.speed, self.t0, self.t1, self.table_samples, periodic=self.closed)

    @property
    def length(self):
        return self.table.length

    def t_of_s(self, s):
        return self.table.t_of_s(s)

    def s_of_t(self, t):
        return self.table.s_of_t(t)

    def darboux_at_param(self, t, s=None):
        return _darboux_from_param(self, np.asarray(t, dtype=float), s)

    def darboux(self, s):
        s = np.asarray(s, dtype=float)
        return _darboux_from_param(self, self.t_of_s(s), s)

    def midpoint_samples(self, s1, s2, n):
        """Darboux samples at the ``n`` segment midpoints of ``[min, max]``.

        Results are cached per ``(lo, hi, n)`` so that forward and reverse
        traversals of the same interval share one evaluation.
        """
        lo, hi = (float(s1), float(s2)) if s1 <= s2 else (float(s2), float(s1))
        key = (lo, hi, int(n))
        hit = self._mid_cache.get(key)
        if hit is None:
            ds = (hi - lo) / n
            s = lo + (np.arange(n) + 0.5) * ds
            hit = self.darboux(s)
            if len(self._mid_cache) >= 8:
                self._mid_cache.pop(next(iter(self._mid_cache)))
            self._mid_cache[key] = hit
        return hit

    def seam_turning_angle(self):
        """Signed tangent turning at the seam of a closed curve (0 if smooth).

        Sign follows ``kappa_g``: positive means turning toward ``B``.
        """
        if not self.closed:
            raise NotClosed(f"{self.name} is not closed")
        end = self.darboux_at_param(np.array([self.t1, self.t0]))
        t_in, t_out = end.t_vec[0], end.t_vec[1]
        N = end.N_vec[1]
        return float(np.arctan2(np.dot(np.cross(t_in, t_out), -N), np.dot(t_in, t_out)))

    def with_fd(self):
        """The same curve with every derivative taken by finite differences."""
        c = CurveOnSurface.__new__(CurveOnSurface)
        c.__dict__.update({k: v for k, v in self.__dict__.items() if k not in ("table", "_mid_cache")})
        c._mid_cache = {}
        c.surface = self.surface.with_fd()
        c._jet_fn = None
        c._speed_fn = None
        c.name = self.name + "[fd]"
        return c

    def __repr__(self):
        return f"CurveOnSurface({self.name!r}, t=[{self.t0:g}, {self.t1:g}], on {self.surface.name})"


def _darboux_from_param(curve, t, s=None):
    j = curve.jet(t)
    S = curve.surface
    sj = S.jet(j["u"], j["v"])
    first, second, N = surf.forms_from_jet(S, sj)
    shape = surf.shape_operator_from_forms(first, second)
    K = np.linalg.det(shape)
    M = 0.5 * np.trace(shape, axis1=-2, axis2=-1)
    r1, r2, r3 = j["r1"], j["r2"], j["r3"]
    speed = np.linalg.norm(r1, axis=-1)
    if np.any(speed < IRREGULAR_TOL):
        raise IrregularCurve(f"{curve.name}: ds/dt < {IRREGULAR_TOL:g}")
    tv = r1 / speed[..., None]
    B = np.cross(tv, N)
    sp2 = speed**2
    kappa_n = _dot(r2, N) / sp2
    kappa_g = _dot(r2, B) / sp2
    vel = np.stack([np.broadcast_to(j["du"], t.shape), np.broadcast_to(j["dv"], t.shape)], axis=-1)
    sv = np.einsum("...ab,...b->...a", shape, vel)
    dN_dt = -(sv[..., 0, None] * sj["Ru"] + sv[..., 1, None] * sj["Rv"])
    tau_g = -_dot(dN_dt, B) / speed

    # Frenet data where the principal normal is defined
    c12 = np.cross(r1, r2)
    c12n = np.linalg.norm(c12, axis=-1)
    kappa = c12n / speed**3
    with np.errstate(invalid="ignore", divide="ignore"):
        tau = np.where(kappa > KAPPA_TOL, _dot(c12, r3) / c12n**2, np.nan)
        b = c12 / c12n[..., None]
        n = np.cross(b, tv)
        theta = np.arctan2(-_dot(b, N), _dot(n, N))
    theta = np.where(kappa > KAPPA_TOL, theta, np.nan)
    if theta.ndim == 1 and theta.size > 1 and not np.any(np.isnan(theta)):
        theta = np.unwrap(theta)
    if s is None:
        s = curve.s_of_t(t)
    return DarbouxSample(
        s=np.asarray(s, dtype=float),
        param=t,
        position=j["r"],
        t_vec=tv,
        N_vec=N,
        B_vec=B,
        theta=theta,
        kappa_g=kappa_g,
        kappa_n=kappa_n,
        tau_g=tau_g,
        K=K,
        M=M,
        kappa=kappa,
        tau=tau,
        speed=speed,
    )


# ---------------------------------------------------------------------------
# sampling helpers


def arclength_param(curve, n_samples=512):
    return ArclengthTable(curve.speed, curve.t0, curve.t1, n_samples, periodic=curve.closed)


def darboux_sample(curve, s):
    return curve.darboux(s)


def frenet_sample(curve, s):
    d = curve.darboux(s)
    if np.any(~(d.kappa > KAPPA_TOL)):
        raise VanishingCurvature(f"{curve.name}: curvature below {KAPPA_TOL:g}, principal normal undefined")
    t = curve.t_of_s(s)
    j = curve.jet(t)
    b = np.cross(j["r1"], j["r2"])
    b = b / np.linalg.norm(b, axis=-1, keepdims=True)
    n = np.cross(b, d.t_vec)
    return FrenetSample(s=d.s, t_vec=d.t_vec, n_vec=n, b_vec=b, kappa=d.kappa, tau=d.tau)


# ---------------------------------------------------------------------------
# construction


def curve_from_expressions(surface, u_expr, v_expr, t_range, closed=False, name="custom", params=None):
    """Curve whose chart coordinates are sympy expressions in ``T_SYM``.

    On a symbolic surface the embedding ``R(u(t), v(t))`` is composed and
    differentiated exactly; otherwise the chart is differenced numerically.
    """
    u_expr = sp.sympify(u_expr)
    v_expr = sp.sympify(v_expr)
    uv = lambdify_vector([u_expr, v_expr], (T_SYM,))

    def chart_curve(t):
        out = uv(t)
        return out[..., 0], out[..., 1]

    jet_fn = None
    speed_fn = None
    if surface.symbolic is not None:
        usym, vsym, exprs = surface.symbolic
        r = [e.subs({usym: u_expr, vsym: v_expr}) for e in exprs]
        r1 = [sp.diff(e, T_SYM) for e in r]
        r2 = [sp.diff(e, T_SYM) for e in r1]
        r3 = [sp.diff(e, T_SYM) for e in r2]
        f_uv = lambdify_vector([u_expr, v_expr, sp.diff(u_expr, T_SYM), sp.diff(v_expr, T_SYM)], (T_SYM,))
        f_r = [lambdify_vector(x, (T_SYM,)) for x in (r, r1, r2, r3)]

        def jet_fn(t):
            a = f_uv(t)
            return {
                "u": a[..., 0],
                "v": a[..., 1],
                "du": a[..., 2],
                "dv": a[..., 3],
                "r": f_r[0](t),
                "r1": f_r[1](t),
                "r2": f_r[2](t),
                "r3": f_r[3](t),
            }

        def speed_fn(t):
            return np.linalg.norm(f_r[1](t), axis=-1)

    return CurveOnSurface(
        surface, chart_curve, t_range, closed=closed, name=name, params=params, jet_fn=jet_fn, speed_fn=speed_fn
    )


CATALOG = (
    "helix_const",
    "helix_exp",
    "helix_log",
    "viviani_on_cylinder",
    "viviani_on_sphere",
    "latitude_circle",
    "planar_circle",
    "straight_line",
    "custom",
)

DEFAULT_PARAMS = {"rho": 1.0, "c": 1.0, "f": 5.0, "r": 2.0, "alpha": float(np.pi / 3)}

_EXPR_LOCALS = {
    name: getattr(sp, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "atan2", "acos", "asin", "atan", "sinh", "cosh", "tanh", "pi")
}
_EXPR_LOCALS.update({"t": T_SYM, "ln": sp.log, "E": sp.E})


def parse_expression(text, key):
    try:
        expr = parse_expr(str(text), local_dict=dict(_EXPR_LOCALS), evaluate=True)
    except Exception as exc:  # parse_expr raises a zoo of types
        raise ConfigInvalid(f"cannot parse expression {text!r}: {exc}", key=key) from exc
    extra = expr.free_symbols - {T_SYM}
    if extra:
        raise ConfigInvalid(f"expression {text!r} has unknown symbols {sorted(map(str, extra))}", key=key)
    return expr


def helix(kind="const", rho=1.0, c=1.0, f=5.0, phi_range=(0.0, 2 * np.pi)):
    """Helices C1 (constant), C2 (exponential) and C3 (logarithmic pitch)."""
    t = T_SYM
    rho_s, c_s, f_s = sp.Float(rho), sp.Float(c), sp.Float(f)
    if kind == "const":
        z = c_s * t
    elif kind == "exp":
        z = c_s * f_s * (sp.exp(t / f_s) - 1)
    elif kind == "log":
        if phi_range[0] <= -f:
            raise ConfigInvalid("helix_log needs phi > -f", key="curve.phi_range")
        z = c_s * f_s * sp.log(t / f_s + 1)
    else:
        raise UnknownCurve(f"unknown helix kind {kind!r}")
    cyl = surf.cylinder(radius=rho)
    params = {"rho": rho, "c": c, "f": f}
    return curve_from_expressions(cyl, t, z, phi_range, closed=False, name=f"helix_{kind}", params=params)


def viviani(host="cylinder", rho=1.0, r=None, lobes=1):
    """Viviani's curve ``(rho(1+cos t), rho sin t, 2 rho sin(t/2))``.

    ``lobes=1`` is the upper loop ``t in [0, 2pi]`` (closed, with a corner at
    the node); ``lobes=2`` is the smooth figure-eight ``t in [0, 4pi]``.
    The sphere host uses a polar chart about the y-axis so that the curve
    never meets a chart pole.
    """
    if r is None:
        r = 2 * rho
    if abs(r - 2 * rho) > 1e-12 * max(1.0, r):
        raise ConfigInvalid("Viviani's curve needs sphere radius r = 2*rho", key="curve.params.r")
    if lobes not in (1, 2):
        raise ConfigInvalid("lobes must be 1 or 2", key="curve.params.lobes")
    t = T_SYM
    t_range = (0.0, 2 * np.pi * lobes)
    params = {"rho": rho, "r": r, "lobes": lobes}
    if host == "cylinder":
        s = surf.cylinder(radius=rho, center=(rho, 0.0))
        return curve_from_expressions(s, t, 2 * sp.Float(rho) * sp.sin(t / 2), t_range, True, "viviani_on_cylinder", params)
    if host == "sphere":
        s = surf.sphere(radius=r, pole_axis="y")
        theta = sp.acos(sp.sin(t) / 2)
        psi = sp.atan2(1 + sp.cos(t), 2 * sp.sin(t / 2))
        return curve_from_expressions(s, theta, psi, t_range, True, "viviani_on_sphere", params)
    raise UnknownCurve(f"unknown Viviani host {host!r}")


def latitude_circle(alpha=np.pi / 3, r=1.0):
    """Circle at polar angle ``alpha`` on a sphere of radius ``r``.

    Traversed westward (decreasing azimuth) so that ``B`` points toward the
    cap ``theta < alpha``; then ``kappa_g = cot(alpha)/r``.
    """
    if not 0 < alpha < np.pi:
        raise ConfigInvalid("alpha must lie in (0, pi)", key="curve.params.alpha")
    s = surf.sphere(radius=r)
    return curve_from_expressions(
        s, sp.Float(alpha), -T_SYM, (0.0, 2 * np.pi), True, "latitude_circle", {"alpha": float(alpha), "r": r}
    )


def planar_circle(radius=1.0, orientation="up"):
    """Circle of the given radius about the origin, clockwise seen from +z.

    With the upward normal this puts ``B`` on the inside, ``kappa_g = 1/radius``.
    """
    p = surf.plane(orientation=orientation)
    R = sp.Float(radius)
    return curve_from_expressions(
        p, R * sp.cos(T_SYM), -R * sp.sin(T_SYM), (0.0, 2 * np.pi), True, "planar_circle", {"radius": radius}
    )


def straight_line(length=1.0):
    p = surf.plane()
    return curve_from_expressions(p, T_SYM, sp.Float(0.0), (0.0, length), False, "straight_line", {"length": length})


def curve_from_config(cfg):
    """Build a catalog or custom curve from a config record."""
    kind = cfg.get("kind")
    params = {**DEFAULT_PARAMS, **cfg.get("params", {})}
    phi_range = tuple(cfg.get("phi_range", (0.0, 2 * np.pi)))
    if kind == "helix_const":
        return helix("const", params["rho"], params["c"], params["f"], phi_range)
    if kind == "helix_exp":
        return helix("exp", params["rho"], params["c"], params["f"], phi_range)
    if kind == "helix_log":
        return helix("log", params["rho"], params["c"], params["f"], phi_range)
    if kind in ("viviani_on_cylinder", "viviani_on_sphere"):
        r = cfg.get("params", {}).get("r", 2 * params["rho"])
        host = "cylinder" if kind.endswith("cylinder") else "sphere"
        return viviani(host, params["rho"], r, int(params.get("lobes", 1)))
    if kind == "latitude_circle":
        return latitude_circle(params["alpha"], cfg.get("params", {}).get("r", 1.0))
    if kind == "planar_circle":
        return planar_circle(params.get("radius", 1.0))
    if kind == "straight_line":
        return straight_line(params.get("length", 1.0))
    if kind == "custom":
        if "surface" not in cfg:
            raise ConfigInvalid("custom curve needs a surface record", key="curve.surface")
        host = surf.surface_from_config(cfg["surface"])
        u = parse_expression(cfg.get("u", "t"), "curve.u")
        v = parse_expression(cfg.get("v", "0"), "curve.v")
        t_range = cfg.get("t_range", [0.0, 2 * np.pi])
        return curve_from_expressions(host, u, v, t_range, bool(cfg.get("closed", False)), "custom", {"u": str(u), "v": str(v)})
    raise UnknownCurve(f"unknown curve kind {kind!r}")
