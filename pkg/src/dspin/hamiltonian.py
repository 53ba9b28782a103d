"""Gauge field and scalar potentials along a surface curve.

Units are hbar = 1, 2m = 1. The Darboux components of the spin-orbit field
are ``beta = (tau_g, kappa_g, -kappa_n)`` in frame order ``(t, N, B)``; its
lab-axis vector ``b_lab = tau_g t + kappa_g N - kappa_n B`` is what the
propagators consume.

``closed_form_reference`` carries the printed closed forms for the catalog
curves. They are a validation layer only and never feed the numeric core.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownCurve

ZERO_THRESHOLD = 1e-12
CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class BetaSample:
    s: np.ndarray
    beta_darboux: np.ndarray
    b_lab: np.ndarray
    magnitude: np.ndarray


@dataclass(frozen=True)
class PotentialSample:
    s: np.ndarray
    V_g: np.ndarray
    V_sg: np.ndarray


def beta_from_darboux(d):
    """``(beta_darboux, b_lab)`` from a :class:`DarbouxSample`."""
    beta = np.stack([d.tau_g, d.kappa_g, -d.kappa_n], axis=-1)
    b_lab = (
        d.tau_g[..., None] * d.t_vec
        + d.kappa_g[..., None] * d.N_vec
        - d.kappa_n[..., None] * d.B_vec
    )
    return beta, b_lab


def beta_field(curve, s):
    d = curve.darboux(s)
    beta, b_lab = beta_from_darboux(d)
    # kappa^2 = kappa_g^2 + kappa_n^2, also valid where the Frenet normal is not
    mag = np.sqrt(d.kappa_g**2 + d.kappa_n**2 + d.tau_g**2)
    return BetaSample(s=d.s, beta_darboux=beta, b_lab=b_lab, magnitude=mag)


def potentials_from_darboux(d):
    V_g = -(d.M**2 - d.K)
    V_sg = -0.25 * (d.kappa_g**2 + 2.0 * d.K)
    return V_g, V_sg


def potentials(curve, s):
    d = curve.darboux(s)
    V_g, V_sg = potentials_from_darboux(d)
    return PotentialSample(s=d.s, V_g=V_g, V_sg=V_sg)


def adiabaticity(curve, s, h=1e-3):
    """``|d(beta/|beta|)/ds|`` in Darboux components, by Richardson differences.

    Differencing runs in the curve parameter. Where ``beta`` vanishes the
    direction is undefined and the meter reports 0.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = curve.t_of_s(s)
    speed = curve.speed(t)
    ht = h / speed

    def unit(tt):
        beta, _ = beta_from_darboux(curve.darboux_at_param(tt, s=np.zeros_like(tt)))
        n = np.linalg.norm(beta, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > ZERO_THRESHOLD, beta / n, 0.0)

    def lo_hi(tt):
        # stay inside an open parameter range
        return np.clip(tt, curve.t0, curve.t1)

    d1 = (unit(lo_hi(t + ht)) - unit(lo_hi(t - ht))) / (lo_hi(t + ht) - lo_hi(t - ht))[:, None]
    d2 = (unit(lo_hi(t + ht / 2)) - unit(lo_hi(t - ht / 2))) / (lo_hi(t + ht / 2) - lo_hi(t - ht / 2))[:, None]
    deriv = (4 * d2 - d1) / 3 / speed[:, None]
    return np.linalg.norm(deriv, axis=-1)


def zero_small(x, thresh=ZERO_THRESHOLD):
    """Replace entries with ``|x| < thresh`` by exact zeros (for summaries)."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < thresh, 0.0, x)


def describe_rows(curve, n=256):
    """Rows ``(s, phi, kappa_g, kappa_n, tau_g, |beta|, V_g, V_sg, adiabaticity)``."""
    L = curve.length
    s = np.linspace(0.0, L, n + 1)
    d = curve.darboux(s)
    _, b_lab = beta_from_darboux(d)
    V_g, V_sg = potentials_from_darboux(d)
    ad = adiabaticity(curve, s)
    mag = np.linalg.norm(b_lab, axis=-1)
    cols = [s, d.param, d.kappa_g, d.kappa_n, d.tau_g, mag, V_g, V_sg, ad]
    cols = [zero_small(c) for c in cols]
    return [tuple(float(c[i]) for c in cols) for i in range(len(s))]


DESCRIBE_COLUMNS = ("s", "phi", "kappa_g", "kappa_n", "tau_g", "beta_norm", "V_g", "V_sg", "adiabaticity")


# ---------------------------------------------------------------------------
# printed closed forms


@dataclass(frozen=True)
class ClosedForm:
    """Printed closed forms for one catalog curve at parameter ``phi``.

    ``omega`` holds the Pauli coefficients ``(a_s, a_N, a_q)`` of
    ``Omega_s = (i/2)(a_s sigma_s + a_N sigma_N + a_q sigma_q)``;
    ``beta_omega = -omega`` is the field implied by them.
    """

    curve_id: str
    phi: np.ndarray
    beta: np.ndarray
    omega: np.ndarray
    V_sg: np.ndarray
    V_g: np.ndarray
    K: float
    flags: list = field(default_factory=list)

    @property
    def beta_omega(self):
        return -self.omega

    @property
    def V_sg_from_potential_law(self):
        """``-(1/4)(kappa_g^2 + 2K)`` with ``kappa_g`` taken from ``omega``."""
        return -0.25 * (self.beta_omega[..., 1] ** 2 + 2.0 * self.K)

    @property
    def beta_consistent(self):
        return self.beta_omega

    @property
    def V_sg_consistent(self):
        return self.V_sg_from_potential_law


def _helix_forms(kind, phi, rho, c, f):
    one = np.ones_like(phi)
    if kind == "const":
        den = rho**2 + c**2
        beta = np.stack([-c / den * one, 0 * one, rho / den * one], -1)
        omega = np.stack([c / den * one, 0 * one, -rho / den * one], -1)
        V_sg = 0 * one
    elif kind == "exp":
        e = np.exp(phi / f)
        t2 = np.sqrt(rho**2 + c**2 * e**2)
        beta = np.stack([-c * e, c * e * rho / t2, rho * one], -1) / t2[:, None] ** 2
        omega = np.stack([c * e, -c * e * rho / (f * t2), -rho * one], -1) / t2[:, None] ** 2
        V_sg = -0.25 * c**2 * e**2 * rho**2 / (f**2 * (c**2 * e**2 + rho**2) ** 3)
    elif kind == "log":
        t3 = np.sqrt(rho**2 + c**2 / (phi / f + 1) ** 2)
        g = c * f * rho / (t3 * (f + phi) ** 2)
        beta = np.stack([-f * c / (phi + f), g, rho * one], -1) / t3[:, None] ** 2
        omega = np.stack([f * c / (phi + f), -g, -rho * one], -1) / t3[:, None] ** 2
        V_sg = -0.25 * c**2 * f**2 * rho**2 * (f + phi) ** 2 / (c**2 * f**2 + (f + phi) ** 2 * rho**2) ** 3
    else:
        raise UnknownCurve(kind)
    V_g = -1.0 / (4 * rho**2) * one
    return beta, omega, V_sg, V_g, 0.0


def _viviani_forms(host, phi, rho):
    # printed for rho = 1, r = 2; lengths scale with rho
    one = np.ones_like(phi)
    w = 3 + np.cos(phi)
    if host == "cylinder":
        g = np.sqrt(2) * np.sin(phi / 2) / np.sqrt(w)
        beta = np.stack([-2 * np.cos(phi / 2), -g, 2 * one], -1) / w[:, None]
        omega = np.stack([2 * np.cos(phi / 2), g, -2 * one], -1) / w[:, None]
        V_sg = -0.5 * np.sin(phi / 2) ** 2 / w**3
        V_g = -0.25 * one
        K = 0.0
    else:
        g = (9 * np.sin(phi / 2) + np.sin(3 * phi / 2)) / (2 * np.sqrt(2) * w**1.5)
        beta = np.stack([0 * one, g, 0.5 * one], -1)
        omega = np.stack([0 * one, -g, -0.5 * one], -1)
        V_sg = -0.25 * (13 + 3 * np.cos(phi)) / w**3
        V_g = 0 * one
        K = 0.25
    return beta / rho, omega / rho, V_sg / rho**2, V_g / rho**2, K / rho**2


CLOSED_FORM_CURVES = ("helix_const", "helix_exp", "helix_log", "viviani_on_cylinder", "viviani_on_sphere")


def closed_form_reference(curve_id, phi, params=None):
    """Evaluate the printed closed forms and flag their internal inconsistencies.

    Two cross-checks are run on the printed quantities alone: ``beta`` against
    the field implied by the printed ``Omega_s`` coefficients, and the printed
    ``V_sg`` against ``-(1/4)(kappa_g^2 + 2K)``. Each failing quantity gets one
    flag naming it.
    """
    p = {"rho": 1.0, "c": 1.0, "f": 5.0}
    p.update(params or {})
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    rho, c, f = float(p["rho"]), float(p["c"]), float(p["f"])
    if curve_id.startswith("helix_"):
        beta, omega, V_sg, V_g, K = _helix_forms(curve_id[6:], phi, rho, c, f)
    elif curve_id in ("viviani_on_cylinder", "viviani_on_sphere"):
        beta, omega, V_sg, V_g, K = _viviani_forms(curve_id.split("_")[-1], phi, rho)
    else:
        raise UnknownCurve(f"no closed form for {curve_id!r}")
    ref = ClosedForm(curve_id, phi, beta, omega, V_sg, V_g, K)
    names = ("beta[0]", "beta[1]", "beta[2]")
    for i in range(3):
        dev = np.max(np.abs(beta[:, i] - ref.beta_omega[:, i]))
        if dev > CONSISTENCY_TOL:
            ref.flags.append({"quantity": names[i], "check": "beta vs Omega_s coefficient", "max_deviation": float(dev)})
    dev = np.max(np.abs(V_sg - ref.V_sg_from_potential_law))
    if dev > CONSISTENCY_TOL:
        ref.flags.append({"quantity": "V_sg", "check": "V_sg vs -(kappa_g^2 + 2K)/4", "max_deviation": float(dev)})
    return ref
