"""Pure numpy implementations of the SU(2) product kernels.

SU(2) elements are stored as unit quaternions ``(w, x, y, z)`` standing for
``w*I + i*(x*sx + y*sy + z*sz)``. With that sign choice the product of two
elements is

    (a0 + i a.s)(b0 + i b.s) = (a0*b0 - a.b) + i (a0*b + b0*a - a x b).s

All functions here have a drop-in twin in ``_ckernels.pyx``.
"""

import numpy as np


def qmul(a, b):
    """Quaternion product ``a*b`` in the convention above, broadcasting."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, av = a[..., 0], a[..., 1:]
    b0, bv = b[..., 0], b[..., 1:]
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a0 * b0 - np.sum(av * bv, axis=-1)
    out[..., 1:] = a0[..., None] * bv + b0[..., None] * av - np.cross(av, bv)
    return out


def rotvec_to_quat(w):
    """Map rotation vectors ``w = b*ds`` to ``exp(i/2 sigma.w)`` quaternions."""
    w = np.asarray(w, dtype=float)
    ang = np.sqrt(np.sum(w * w, axis=-1))
    half = 0.5 * ang
    # sin(x/2)/x, finite at x = 0
    scale = 0.5 * np.sinc(half / np.pi)
    out = np.empty(w.shape[:-1] + (4,))
    out[..., 0] = np.cos(half)
    out[..., 1:] = scale[..., None] * w
    return out


def chain_product(rotvecs):
    """Ordered product of the segment factors, later segments leftmost.

    Reduction is pairwise (a balanced tree), which keeps the numpy path
    vectorised and its rounding error at O(log n).
    """
    q = rotvec_to_quat(rotvecs)
    if q.shape[0] == 0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    while q.shape[0] > 1:
        if q.shape[0] % 2:
            tail = q[-1:]
            q = q[:-1]
        else:
            tail = None
        # later element (odd index) multiplies from the left
        q = qmul(q[1::2], q[0::2])
        if tail is not None:
            q = np.concatenate([q[:-1], qmul(tail, q[-1:])])
    out = q[0]
    return out / np.linalg.norm(out)


def cumulative_product(rotvecs):
    """Prefix products ``P_k = Q_k ... Q_1`` with ``P_0 = 1``; shape (n+1, 4).

    Hillis-Steele scan: log2(n) vectorised passes.
    """
    q = rotvec_to_quat(rotvecs)
    n = q.shape[0]
    d = 1
    while d < n:
        q = np.concatenate([q[:d], qmul(q[d:], q[:-d])])
        d *= 2
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    ident = np.array([[1.0, 0.0, 0.0, 0.0]])
    return np.concatenate([ident, q])
