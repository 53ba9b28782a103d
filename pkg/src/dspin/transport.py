"""SU(2) spin transport along a curve.

Propagators obey ``dU/ds = (i/2)(sigma . b_lab(s)) U`` in the fixed lab Pauli
basis. Three routes compute them:

* ``path_ordered_propagator``: midpoint-sampled product of exact segment
  exponentials, later arclength leftmost;
* ``ode_propagator_oracle``: adaptive Dormand-Prince on the unit quaternion,
  renormalised after every accepted step;
* ``frame_transport_rotation``: the Bloch rotation ``F(s2)^T F(s1)`` built
  from Darboux frames alone, because ``b_lab`` is minus the angular velocity
  of the frame and the spin therefore co-rotates with it.

Operators are stored as unit quaternions ``(w, x, y, z)`` standing for
``w I + i (x sx + y sy + z sz)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import kernels
from .errors import ConfigInvalid, GridTooCoarse, ToleranceNotMet, ZeroAxis, ZeroLengthSegment
from .hamiltonian import beta_from_darboux

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
ZERO_AXIS_TOL = 1e-15
FD_ERROR_LIMIT = 1e-4


class SU2Operator:
    """An SU(2) element held as a unit quaternion."""

    __slots__ = ("q",)

    def __init__(self, q):
        self.q = np.asarray(q, dtype=float).reshape(4)

    @classmethod
    def identity(cls):
        return cls([1.0, 0.0, 0.0, 0.0])

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=complex)
        w = 0.5 * np.trace(m).real
        # m = w I + i v.sigma  =>  tr(sigma_k m) = 2 i v_k
        v = [0.5 * np.trace(SIGMA[k] @ m).imag for k in range(3)]
        return cls([w, *v])

    @property
    def matrix(self):
        w, x, y, z = self.q
        return np.array([[w + 1j * z, 1j * x + y], [1j * x - y, w - 1j * z]])

    def dagger(self):
        return SU2Operator(self.q * np.array([1.0, -1.0, -1.0, -1.0]))

    def __matmul__(self, other):
        return SU2Operator(kernels.qmul(self.q, other.q))

    def trace(self):
        return complex(2.0 * self.q[0])

    def rotation(self):
        """Bloch rotation ``R`` with ``U (m.sigma) U^dag = (R m).sigma``."""
        return quat_rotation(self.q)

    def distance(self, other):
        """Operator 2-norm of ``U - V`` (the quaternion difference norm)."""
        return float(np.linalg.norm(self.q - other.q))

    def unitarity_defect(self):
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(2))))

    def det_defect(self):
        return float(abs(np.linalg.det(self.matrix) - 1.0))

    def __repr__(self):
        return f"SU2Operator({np.array2string(self.q, precision=6)})"


def quat_rotation(q):
    """Rotation matrices for quaternions ``q`` (..., 4)."""
    q = np.asarray(q, dtype=float)
    w, v = q[..., 0], q[..., 1:]
    R = (w**2 - np.sum(v * v, axis=-1))[..., None, None] * np.eye(3)
    R = R + 2 * v[..., :, None] * v[..., None, :]
    cross = np.zeros(q.shape[:-1] + (3, 3))
    cross[..., 0, 1], cross[..., 0, 2] = -v[..., 2], v[..., 1]
    cross[..., 1, 0], cross[..., 1, 2] = v[..., 2], -v[..., 0]
    cross[..., 2, 0], cross[..., 2, 1] = -v[..., 1], v[..., 0]
    return R - 2 * w[..., None, None] * cross


class Spinor:
    """Normalised two-component spinor ``(a, b)``."""

    __slots__ = ("amp",)

    def __init__(self, a, b):
        amp = np.array([a, b], dtype=complex)
        n = np.linalg.norm(amp)
        if n == 0:
            raise ConfigInvalid("spinor must be non-zero", key="initial")
        self.amp = amp / n

    @classmethod
    def from_bloch(cls, m):
        m = np.asarray(m, dtype=float)
        n = np.linalg.norm(m)
        if abs(n - 1.0) > 1e-9:
            raise ConfigInvalid(f"Bloch vector must be unit length (|m| = {n:.12g})", key="initial")
        m = m / n
        theta = np.arccos(np.clip(m[2], -1.0, 1.0))
        phi = np.arctan2(m[1], m[0])
        a = np.cos(theta / 2)
        b = np.sin(theta / 2) * np.exp(1j * phi)
        if a < 1e-15:
            # first component vanishes: make the second one real positive
            return cls(0.0, 1.0)
        return cls(a, b)

    def bloch(self):
        a, b = self.amp
        return np.array([2 * (np.conj(a) * b).real, 2 * (np.conj(a) * b).imag, abs(a) ** 2 - abs(b) ** 2])

    def apply(self, U):
        out = Spinor.__new__(Spinor)
        out.amp = U.matrix @ self.amp
        return out


def su2_exp(axis, angle):
    """``cos(angle/2) I + i sin(angle/2) sigma . axis_hat``."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if angle == 0:
        return SU2Operator.identity()
    if n < ZERO_AXIS_TOL:
        raise ZeroAxis("rotation axis is zero but the angle is not")
    h = 0.5 * angle
    return SU2Operator([np.cos(h), *(np.sin(h) * axis / n)])


def _extra(extra_field):
    if extra_field is None:
        return np.zeros(3)
    e = np.asarray(extra_field, dtype=float).reshape(3)
    return e


def _segment_fields(curve, s1, s2, n, extra_field):
    """Midpoint lab fields ordered along the traversal ``s1 -> s2``."""
    d = curve.midpoint_samples(s1, s2, n)
    _, b = beta_from_darboux(d)
    if s2 < s1:
        b = b[::-1]
    return b + _extra(extra_field)


def path_ordered_propagator(curve, s1, s2, n, frame="lab", extra_field=None):
    """Product of ``n`` midpoint segment exponentials from ``s1`` to ``s2``."""
    if frame != "lab":
        raise ConfigInvalid(f"unsupported propagation frame {frame!r}", key="frame")
    n = int(n)
    if n < 1:
        raise ConfigInvalid("need at least one segment", key="n")
    if s1 == s2:
        return SU2Operator.identity()
    ds = (s2 - s1) / n
    b = _segment_fields(curve, s1, s2, n, extra_field)
    return SU2Operator(kernels.chain_product(np.ascontiguousarray(b * ds)))


def frame_transport_rotation(curve, s1, s2):
    """Bloch rotation ``F(s2)^T F(s1)`` from Darboux frames (no extra field)."""
    d = curve.darboux(np.array([s1, s2], dtype=float))
    F = d.frame
    return F[1].T @ F[0]


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _generator_at_params(curve, t, extra):
    """Pure quaternions ``(0, b ds/dt / 2)`` at curve parameters ``t``."""
    d = curve.darboux_at_param(t, s=np.zeros_like(t))
    _, b = beta_from_darboux(d)
    g = np.zeros(t.shape + (4,))
    g[..., 1:] = 0.5 * (b + extra) * d.speed[..., None]
    return g


def ode_propagator_oracle(curve, s1, s2, tol=1e-10, extra_field=None, max_steps=200000):
    """Adaptive Runge-Kutta solution of the transport equation.

    Integration runs in the curve parameter with ``dU/dt = (i/2) sigma.b (ds/dt) U``;
    the generator depends on ``t`` only, so all seven stage fields of a step
    are evaluated in one vectorised call.
    """
    if tol < 1e-12:
        raise ConfigInvalid("tol must be >= 1e-12", key="tol")
    if s1 == s2:
        return SU2Operator.identity()
    extra = _extra(extra_field)
    ta, tb = (float(x) for x in curve.t_of_s(np.array([s1, s2], dtype=float)))
    span = tb - ta
    q = np.array([1.0, 0.0, 0.0, 0.0])
    t = ta
    h = span / 64
    steps = 0
    while (tb - t) * np.sign(span) > 0:
        if steps >= max_steps:
            raise ToleranceNotMet(f"ODE oracle exceeded {max_steps} steps")
        if abs(h) > abs(tb - t):
            h = tb - t
        G = _generator_at_params(curve, t + _DP_C * h, extra)
        k = np.empty((7, 4))
        for i in range(7):
            y = q + h * sum(a * k[j] for j, a in enumerate(_DP_A[i])) if i else q
            k[i] = kernels.qmul(G[i], y)
        y5 = q + h * (_DP_B5 @ k)
        y4 = q + h * (_DP_B4 @ k)
        err = np.max(np.abs(y5 - y4)) / tol
        if err <= 1.0:
            t += h
            q = y5 / np.linalg.norm(y5)
            steps += 1
        fac = 0.9 * (1.0 / max(err, 1e-10)) ** 0.2
        h *= min(5.0, max(0.2, fac))
        if abs(h) < 1e-14 * max(1.0, abs(span)):
            raise ToleranceNotMet("ODE oracle step size underflow")
    return SU2Operator(q)


@dataclass(frozen=True)
class AdiabaticSummary:
    Phi: float
    phi_N: float
    phi_q: float
    phi_s: float
    h: np.ndarray


def _simpson_grid(curve, s1, s2, quad_n):
    quad_n = int(quad_n)
    if quad_n < 64:
        raise ConfigInvalid("quad_n must be >= 64", key="quad_n")
    if quad_n % 2:
        quad_n += 1
    s = np.linspace(s1, s2, quad_n + 1)
    return s, curve.darboux(s)


def adiabatic_propagator(curve, s1, s2, quad_n=256, allow_empty=True):
    """Adiabatic operator in the abstract Darboux basis ``(sigma_s, sigma_N, sigma_q)``.

    ``U_ad = cos(Phi/2) I + i sin(Phi/2) sigma.h`` with ``Phi h`` the integrals
    of ``(tau_g, kappa_g, -kappa_n)``. An empty segment returns the identity
    unless ``allow_empty`` is false, in which case it raises.
    """
    if s1 == s2:
        if not allow_empty:
            raise ZeroLengthSegment("adiabatic propagator over an empty segment")
        summ = AdiabaticSummary(0.0, 0.0, 0.0, 0.0, np.array([0.0, 0.0, 0.0]))
        return SU2Operator.identity(), summ
    s, d = _simpson_grid(curve, s1, s2, quad_n)
    phi_s = float(simpson(d.tau_g, x=s))
    phi_N = float(simpson(d.kappa_g, x=s))
    phi_q = float(simpson(-d.kappa_n, x=s))
    vec = np.array([phi_s, phi_N, phi_q])
    Phi = float(np.linalg.norm(vec))
    h = vec / Phi if Phi > 0 else np.zeros(3)
    U = SU2Operator([np.cos(Phi / 2), *(np.sin(Phi / 2) * h)])
    return U, AdiabaticSummary(Phi, phi_N, phi_q, phi_s, h)


def adiabatic_lab_axis(curve, summary, s):
    """The adiabatic axis ``h`` expressed in lab axes at arclength ``s``."""
    F = curve.darboux(float(s)).frame
    return summary.h @ F


def wilson_loop(U):
    return complex(np.trace(U.matrix))


# ---------------------------------------------------------------------------
# spin textures


@dataclass(frozen=True)
class SpinTexture:
    s: np.ndarray
    phi: np.ndarray
    position: np.ndarray
    frame: np.ndarray
    m_lab: np.ndarray
    m_darboux: np.ndarray
    b_lab: np.ndarray
    beta: np.ndarray
    direction: str
    method: str

    def __len__(self):
        return len(self.s)

    def rows(self):
        cols = np.column_stack(
            [
                self.s,
                self.phi,
                self.position,
                self.frame[:, 0],
                self.frame[:, 1],
                self.frame[:, 2],
                self.m_lab,
                self.m_darboux,
            ]
        )
        return [tuple(float(x) for x in row) for row in cols]


TEXTURE_COLUMNS = (
    "s", "phi", "x", "y", "z", "tx", "ty", "tz", "Nx", "Ny", "Nz",
    "Bx", "By", "Bz", "mx", "my", "mz", "mDs", "mDN", "mDq",
)


def _initial_bloch(initial):
    if isinstance(initial, Spinor):
        return initial.bloch()
    return Spinor.from_bloch(initial).bloch()


def evolve_spin_texture(
    curve, initial, grid_n=512, direction="forward", extra_field=None, substeps=8, method="path_ordered", quad_n=None
):
    """Bloch vector along the curve from cumulative lab-frame propagators.

    ``grid_n`` intervals are recorded (``grid_n + 1`` rows); each interval is
    split into ``substeps`` midpoint segments. ``direction="reverse"`` starts
    at ``s = L`` and runs down to 0. ``method="adiabatic"`` instead applies
    the adiabatic operator with its basis fixed to the start frame.
    """
    grid_n = int(grid_n)
    if grid_n < 2:
        raise ConfigInvalid("grid_n must be >= 2", key="grid_n")
    if direction not in ("forward", "reverse"):
        raise ConfigInvalid(f"direction must be forward or reverse, got {direction!r}", key="direction")
    substeps = max(1, int(substeps))
    L = curve.length
    s_start, s_end = (0.0, L) if direction == "forward" else (L, 0.0)
    s_grid = np.linspace(s_start, s_end, grid_n + 1)
    d = curve.darboux(s_grid)
    F = d.frame
    beta, b_grid = beta_from_darboux(d)
    extra = _extra(extra_field)
    b_grid = b_grid + extra
    beta = beta + np.einsum("kij,j->ki", F, extra)
    m0 = _initial_bloch(initial)

    if method == "path_ordered":
        n_seg = grid_n * substeps
        ds = (s_end - s_start) / n_seg
        b = _segment_fields(curve, s_start, s_end, n_seg, extra_field)
        P = kernels.cumulative_product(np.ascontiguousarray(b * ds))[::substeps]
        m_lab = np.einsum("kij,j->ki", quat_rotation(P), m0)
    elif method == "adiabatic":
        # the abstract basis of U_ad is pinned to the frame at the start point
        qn = quad_n or 64
        mD0 = F[0] @ m0
        m_lab = np.empty((grid_n + 1, 3))
        m_lab[0] = m0
        for k in range(1, grid_n + 1):
            U, _ = adiabatic_propagator(curve, s_start, s_grid[k], qn)
            m_lab[k] = F[0].T @ (U.rotation() @ mD0)
    else:
        raise ConfigInvalid(f"unknown texture method {method!r}", key="method")

    m_dar = np.einsum("kij,kj->ki", F, m_lab)
    return SpinTexture(
        s=s_grid,
        phi=d.param,
        position=d.position,
        frame=F,
        m_lab=m_lab,
        m_darboux=m_dar,
        b_lab=b_grid,
        beta=beta,
        direction=direction,
        method=method,
    )


@dataclass(frozen=True)
class PrecessionReport:
    r1: float
    r2: float
    fd_error: float
    satisfied_law: str


def _fd4(y, h):
    return (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * h)


def precession_residual(texture, strict=True):
    """Residuals of the two candidate precession laws on a texture grid.

    ``r1 = max |dm/ds - m x b_lab|`` (lab frame) and
    ``r2 = max |dm_D/ds - 2 beta x m_D|`` (Darboux components, doubled rate).
    Derivatives are fourth-order central differences at interior nodes; the
    gap to the second-order estimate bounds the differencing error; with
    ``strict`` a gap above ``FD_ERROR_LIMIT`` raises :class:`GridTooCoarse`.
    """
    s = texture.s
    if len(s) < 5:
        raise GridTooCoarse("need at least 5 texture points")
    h = s[1] - s[0]
    m, mD = texture.m_lab, texture.m_darboux
    dm = _fd4(m, h)
    dmD = _fd4(mD, h)
    dm2 = (m[3:-1] - m[1:-3]) / (2 * h)
    fd_err = float(np.max(np.linalg.norm(dm - dm2, axis=-1)))
    if strict and fd_err > FD_ERROR_LIMIT:
        raise GridTooCoarse(f"finite-difference error estimate {fd_err:.3g} exceeds {FD_ERROR_LIMIT:g}")
    inner = slice(2, -2)
    r1 = float(np.max(np.linalg.norm(dm - np.cross(m[inner], texture.b_lab[inner]), axis=-1)))
    r2 = float(np.max(np.linalg.norm(dmD - 2 * np.cross(texture.beta[inner], mD[inner]), axis=-1)))
    return PrecessionReport(r1, r2, fd_err, "lab" if r1 <= r2 else "doubled")
